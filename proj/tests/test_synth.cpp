#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "elastic/synth.hpp"
#include "support/test_helpers.hpp"

using namespace elastic;
using test_support::TempDir;

namespace {

SynthSpec demo_spec() {
  SynthSpec spec;
  spec.base_shape = BaseShape::kCylinder;
  spec.rings = 11;
  spec.segments = 12;
  spec.shape_factors = {{1.0, 1.0}, {1.3, 1.1}};
  spec.pose_factors = {0.0, std::numbers::pi / 6.0};
  spec.seed = 9;
  spec.jitter = 0.1;
  return spec;
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("corpus size and shared topology") {
  const auto corpus = generate_corpus(demo_spec());
  REQUIRE(corpus.meshes.size() == 4);
  CHECK(corpus.shape_labels == std::vector<std::string>{"id00", "id00", "id01", "id01"});
  CHECK(corpus.pose_labels == std::vector<std::string>{"pose00", "pose01", "pose00", "pose01"});
  for (const auto& mesh : corpus.meshes) CHECK(mesh.topology == corpus.meshes.front().topology);
}

TEST_CASE("zero pose everywhere collapses each identity to one mesh") {
  SynthSpec spec = demo_spec();
  spec.pose_factors = {0.0, 0.0, 0.0};
  const auto corpus = generate_corpus(spec);
  for (std::size_t i = 0; i + 1 < corpus.meshes.size(); ++i)
    if (corpus.shape_labels[i] == corpus.shape_labels[i + 1])
      CHECK((corpus.meshes[i].positions - corpus.meshes[i + 1].positions).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("generation is bitwise deterministic") {
  const auto a = generate_corpus(demo_spec());
  const auto b = generate_corpus(demo_spec());
  for (std::size_t i = 0; i < a.meshes.size(); ++i)
    CHECK((a.meshes[i].positions - b.meshes[i].positions).cwiseAbs().maxCoeff() == 0.0);

  SynthSpec reseeded = demo_spec();
  reseeded.seed = 10;
  const auto c = generate_corpus(reseeded);
  CHECK((a.meshes[0].positions - c.meshes[0].positions).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("bending is an isometry away from the joint") {
  SynthSpec spec = demo_spec();
  spec.shape_factors = {{1.0, 1.0}};
  spec.pose_factors = {0.0, std::numbers::pi / 6.0};
  const auto corpus = generate_corpus(spec);
  const auto flat = first_fundamental_form(corpus.meshes[0]);
  const auto bent = first_fundamental_form(corpus.meshes[1]);

  const int joint_ring = (spec.rings - 1) / 2;
  const std::size_t faces_per_band = static_cast<std::size_t>(spec.segments) * 2;
  for (std::size_t f = 0; f < flat.size(); ++f) {
    const int band = static_cast<int>(f / faces_per_band);  // faces between rings band, band+1
    if (band > joint_ring - 2 && band < joint_ring + 2) continue;  // within 2 rings of the joint
    const double rel = (bent[f] - flat[f]).cwiseAbs().maxCoeff() /
                       std::max(flat[f].cwiseAbs().maxCoeff(), 1e-12);
    CHECK(rel <= 0.05);
  }
}

TEST_CASE("sequences interpolate the bend angle") {
  const SynthSpec spec = demo_spec();
  const auto single = generate_sequence(spec, 0, 0.3, 0.9, 1);
  REQUIRE(single.size() == 1);
  const auto start_corpus = generate_sequence(spec, 0, 0.3, 0.3, 2);
  CHECK((single[0].positions - start_corpus[0].positions).cwiseAbs().maxCoeff() == 0.0);

  const auto seq = generate_sequence(spec, 0, 0.0, 0.5, 11);
  CHECK(seq.size() == 11);
  // lag-1 displacement samples: one fewer than the frames
  int samples = 0;
  for (std::size_t n = 0; n * 1 + 1 < seq.size(); ++n) ++samples;
  CHECK(samples == 10);
}

TEST_CASE("extreme factors that collapse faces are rejected") {
  SynthSpec spec = demo_spec();
  spec.shape_factors = {{1e-14, 1.0}};  // vertices collapse onto the axis
  CHECK_THROWS_AS(generate_corpus(spec), NumericalError);

  SynthSpec invalid = demo_spec();
  invalid.shape_factors = {{-1.0, 1.0}};
  CHECK_THROWS_AS(generate_corpus(invalid), InputError);

  SynthSpec tiny = demo_spec();
  tiny.rings = 2;
  tiny.segments = 1;
  CHECK_THROWS_AS(generate_corpus(tiny), InputError);
}

TEST_CASE("capsule and arm variants generate clean geometry") {
  for (BaseShape shape : {BaseShape::kCapsule, BaseShape::kTwoSegmentArm}) {
    SynthSpec spec = demo_spec();
    spec.base_shape = shape;
    const auto corpus = generate_corpus(spec);
    CHECK(corpus.meshes.size() == 4);
    for (const auto& mesh : corpus.meshes) CHECK_NOTHROW(extract_geometry(mesh));
  }
}

TEST_CASE("spec json round trip") {
  TempDir dir("spec");
  const SynthSpec spec = demo_spec();
  {
    std::ofstream out(dir.path() / "spec.json");
    out << spec.to_json();
  }
  const SynthSpec back = SynthSpec::from_json_file(dir.path() / "spec.json");
  CHECK(back.rings == spec.rings);
  CHECK(back.segments == spec.segments);
  CHECK(back.seed == spec.seed);
  CHECK(back.shape_factors.size() == spec.shape_factors.size());
  const auto a = generate_corpus(spec);
  const auto b = generate_corpus(back);
  for (std::size_t i = 0; i < a.meshes.size(); ++i)
    CHECK((a.meshes[i].positions - b.meshes[i].positions).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("corpus export writes meshes and labels") {
  TempDir dir("corpus");
  const auto corpus = generate_corpus(demo_spec());
  write_corpus(corpus, dir.path() / "out");
  CHECK(std::filesystem::exists(dir.path() / "out" / "id00_pose00.obj"));
  CHECK(std::filesystem::exists(dir.path() / "out" / "id01_pose01.obj"));
  CHECK(std::filesystem::exists(dir.path() / "out" / "labels.csv"));
}

}  // TEST_SUITE
