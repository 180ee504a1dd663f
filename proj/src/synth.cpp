#include "elastic/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include <nlohmann/json.hpp>

#include "elastic/io.hpp"

namespace elastic {

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

// Parameter grid of the tube: one (angle, axial coordinate in [0,1]) pair per
// vertex. Jitter perturbs the grid itself, so every mesh generated from the
// same spec shares the exact same parameterization.
struct UnitGrid {
  std::vector<double> phi;  // rings*segments, ring-major
  std::vector<double> t;
};

UnitGrid unit_grid(const SynthSpec& spec) {
  UnitGrid grid;
  const int R = spec.rings, S = spec.segments;
  grid.phi.resize(static_cast<std::size_t>(R) * S);
  grid.t.resize(static_cast<std::size_t>(R) * S);
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> uni(-0.5, 0.5);
  for (int r = 0; r < R; ++r)
    for (int s = 0; s < S; ++s) {
      const std::size_t v = static_cast<std::size_t>(r) * S + s;
      double dphi = 0, dt = 0;
      if (spec.jitter > 0) {
        dphi = spec.jitter * (kTau / S) * uni(rng);
        if (r > 0 && r < R - 1) dt = spec.jitter * (1.0 / (R - 1)) * uni(rng);
      } else {
        // keep the RNG stream aligned so jitter=0 stays a special case of the same draw
        (void)uni(rng);
        if (r > 0 && r < R - 1) (void)uni(rng);
      }
      grid.phi[v] = kTau * s / S + dphi;
      grid.t[v] = static_cast<double>(r) / (R - 1) + dt;
    }
  return grid;
}

// Radial profile along the axis (t in [0,1]) and around the section (phi).
double radial_profile(const SynthSpec& spec, double t, double phi) {
  double axial = 1.0;
  switch (spec.base_shape) {
    case BaseShape::kCylinder: break;
    case BaseShape::kCapsule: {
      // hemispherical taper over the end quarters, floored away from zero
      const double cap = 0.25;
      double u = 0;
      if (t < cap) u = (cap - t) / cap;
      if (t > 1.0 - cap) u = (t - (1.0 - cap)) / cap;
      axial = std::sqrt(std::max(0.04, 1.0 - u * u));
      break;
    }
    case BaseShape::kTwoSegmentArm: {
      // thicker lower segment, thinner upper, short blend at the joint
      if (t < 0.45)
        axial = 1.15;
      else if (t > 0.55)
        axial = 0.85;
      else
        axial = 1.15 + (0.85 - 1.15) * (t - 0.45) / 0.10;
      break;
    }
  }
  double section = 1.0;
  if (spec.base_shape == BaseShape::kTwoSegmentArm) {
    // squarish cross-section (superellipse, p = 4)
    const double c = std::abs(std::cos(phi)), s = std::abs(std::sin(phi));
    section = std::pow(c * c * c * c + s * s * s * s, -0.25);
  }
  return axial * section;
}

FaceList tube_faces(int rings, int segments) {
  FaceList faces;
  faces.reserve(static_cast<std::size_t>(rings - 1) * segments * 2);
  auto vid = [segments](int r, int s) {
    return static_cast<std::int32_t>(r * segments + (s % segments));
  };
  for (int r = 0; r + 1 < rings; ++r)
    for (int s = 0; s < segments; ++s) {
      const std::int32_t a = vid(r, s), b = vid(r, s + 1);
      const std::int32_t c = vid(r + 1, s), d = vid(r + 1, s + 1);
      faces.push_back({a, b, d});
      faces.push_back({a, d, c});
    }
  return faces;
}

Positions build_positions(const SynthSpec& spec, const UnitGrid& grid, const ShapeFactor& factor,
                          double bend) {
  const int R = spec.rings, S = spec.segments;
  const double length = spec.length * factor.length;
  const int joint_ring = (R - 1) / 2;
  const double z_pivot = length * joint_ring / (R - 1);

  Positions p(static_cast<std::int64_t>(R) * S, 3);
  for (int r = 0; r < R; ++r) {
    // rigid above the joint, identity below, blended across two rings
    const double w = std::clamp((r - joint_ring) / 2.0, 0.0, 1.0);
    const double angle = w * bend;
    const double ca = std::cos(angle), sa = std::sin(angle);
    for (int s = 0; s < S; ++s) {
      const std::size_t v = static_cast<std::size_t>(r) * S + s;
      const double rho =
          spec.radius * factor.girth * radial_profile(spec, grid.t[v], grid.phi[v]);
      const double x = rho * std::cos(grid.phi[v]);
      const double y = rho * std::sin(grid.phi[v]);
      const double z = grid.t[v] * length;
      // rotate about the x axis through (0, 0, z_pivot)
      const double zz = z - z_pivot;
      p(static_cast<std::int64_t>(v), 0) = x;
      p(static_cast<std::int64_t>(v), 1) = ca * y - sa * zz;
      p(static_cast<std::int64_t>(v), 2) = sa * y + ca * zz + z_pivot;
    }
  }
  return p;
}

std::shared_ptr<const TemplateTopology> template_topology(const SynthSpec& spec,
                                                          const UnitGrid& grid) {
  const Positions rest = build_positions(spec, grid, ShapeFactor{1.0, 1.0}, 0.0);
  return build_topology(rest, tube_faces(spec.rings, spec.segments));
}

std::string pad2(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%02d", prefix, i);
  return buf;
}

}  // namespace

BaseShape base_shape_from_string(const std::string& name) {
  if (name == "cylinder") return BaseShape::kCylinder;
  if (name == "capsule") return BaseShape::kCapsule;
  if (name == "two_segment_arm") return BaseShape::kTwoSegmentArm;
  throw InputError("unknown base shape '" + name + "'");
}

std::string to_string(BaseShape shape) {
  switch (shape) {
    case BaseShape::kCylinder: return "cylinder";
    case BaseShape::kCapsule: return "capsule";
    case BaseShape::kTwoSegmentArm: return "two_segment_arm";
  }
  return "cylinder";
}

void SynthSpec::validate() const {
  if (rings < 2 || segments < 3) throw InputError("resolution must be at least 2 rings x 3 segments");
  if ((rings - 1) * segments * 2 < 8) throw InputError("resolution yields fewer than 8 faces");
  if (shape_factors.empty()) throw InputError("shape_factors must be non-empty");
  if (pose_factors.empty()) throw InputError("pose_factors must be non-empty");
  if (!(radius > 0) || !(length > 0)) throw InputError("radius and length must be positive");
  if (jitter < 0 || jitter > 0.45) throw InputError("jitter must be in [0, 0.45]");
  for (const ShapeFactor& f : shape_factors)
    if (!(f.girth > 0) || !(f.length > 0)) throw InputError("shape factors must be positive");
}

SynthSpec SynthSpec::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open spec file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed spec JSON: " + std::string(e.what()));
  }
  SynthSpec spec;
  try {
    if (j.contains("base_shape")) spec.base_shape = base_shape_from_string(j["base_shape"]);
    spec.rings = j.value("rings", spec.rings);
    spec.segments = j.value("segments", spec.segments);
    spec.radius = j.value("radius", spec.radius);
    spec.length = j.value("length", spec.length);
    spec.seed = j.value("seed", spec.seed);
    spec.jitter = j.value("jitter", spec.jitter);
    if (j.contains("shape_factors")) {
      spec.shape_factors.clear();
      for (const auto& e : j["shape_factors"]) {
        if (e.is_number())
          spec.shape_factors.push_back({e.get<double>(), 1.0});
        else
          spec.shape_factors.push_back({e.value("girth", 1.0), e.value("length", 1.0)});
      }
    }
    if (j.contains("pose_factors"))
      spec.pose_factors = j["pose_factors"].get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed spec JSON: " + std::string(e.what()));
  }
  spec.validate();
  return spec;
}

std::string SynthSpec::to_json() const {
  nlohmann::json j;
  j["base_shape"] = to_string(base_shape);
  j["rings"] = rings;
  j["segments"] = segments;
  j["radius"] = radius;
  j["length"] = length;
  j["seed"] = seed;
  j["jitter"] = jitter;
  j["shape_factors"] = nlohmann::json::array();
  for (const ShapeFactor& f : shape_factors)
    j["shape_factors"].push_back({{"girth", f.girth}, {"length", f.length}});
  j["pose_factors"] = pose_factors;  // bend angles in radians
  return j.dump(2);
}

SynthCorpus generate_corpus(const SynthSpec& spec) {
  spec.validate();
  const UnitGrid grid = unit_grid(spec);
  const auto topo = template_topology(spec, grid);

  SynthCorpus corpus;
  for (std::size_t i = 0; i < spec.shape_factors.size(); ++i)
    for (std::size_t p = 0; p < spec.pose_factors.size(); ++p) {
      RegisteredMesh mesh;
      mesh.topology = topo;
      mesh.positions = build_positions(spec, grid, spec.shape_factors[i], spec.pose_factors[p]);
      extract_geometry(mesh);  // rejects factor combinations that collapse a face
      corpus.meshes.push_back(std::move(mesh));
      corpus.names.push_back(pad2("id", static_cast<int>(i)) + "_" +
                             pad2("pose", static_cast<int>(p)));
      corpus.shape_labels.push_back(pad2("id", static_cast<int>(i)));
      corpus.pose_labels.push_back(pad2("pose", static_cast<int>(p)));
    }
  return corpus;
}

std::vector<RegisteredMesh> generate_sequence(const SynthSpec& spec, int identity,
                                              double pose_start, double pose_end, int frames) {
  spec.validate();
  if (identity < 0 || identity >= static_cast<int>(spec.shape_factors.size()))
    throw InputError("identity index out of range");
  if (frames < 1) throw InputError("a sequence needs at least one frame");
  const UnitGrid grid = unit_grid(spec);
  const auto topo = template_topology(spec, grid);
  const ShapeFactor& factor = spec.shape_factors[static_cast<std::size_t>(identity)];

  std::vector<RegisteredMesh> sequence;
  sequence.reserve(static_cast<std::size_t>(frames));
  for (int f = 0; f < frames; ++f) {
    const double t = frames == 1 ? 0.0 : static_cast<double>(f) / (frames - 1);
    RegisteredMesh mesh;
    mesh.topology = topo;
    mesh.positions = build_positions(spec, grid, factor, pose_start + t * (pose_end - pose_start));
    extract_geometry(mesh);
    sequence.push_back(std::move(mesh));
  }
  return sequence;
}

void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw InputError("cannot create directory: " + directory.string());
  LabelTable table;
  table.columns = {"mesh", "shape", "pose"};
  for (std::size_t i = 0; i < corpus.meshes.size(); ++i) {
    const std::string file = corpus.names[i] + ".obj";
    save_obj(corpus.meshes[i], directory / file);
    table.rows.push_back({file, corpus.shape_labels[i], corpus.pose_labels[i]});
  }
  write_label_table(table, directory / "labels.csv");
}

}  // namespace elastic
