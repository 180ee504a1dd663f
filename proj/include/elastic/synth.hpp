#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "elastic/mesh.hpp"

namespace elastic {

enum class BaseShape { kCylinder, kCapsule, kTwoSegmentArm };

BaseShape base_shape_from_string(const std::string& name);
std::string to_string(BaseShape shape);

/// Per-identity multipliers applied to the base dimensions.
struct ShapeFactor {
  double girth = 1.0;
  double length = 1.0;
};

/// Deterministic description of a synthetic registered corpus: a tube-like
/// base shape on a rings x segments grid, one identity per shape factor,
/// one pose per bend angle (radians) about the middle ring.
struct SynthSpec {
  BaseShape base_shape = BaseShape::kCylinder;
  int rings = 12;
  int segments = 16;
  double radius = 0.25;
  double length = 2.0;
  std::vector<ShapeFactor> shape_factors = {{1.0, 1.0}};
  std::vector<double> pose_factors = {0.0};
  std::uint64_t seed = 0;
  double jitter = 0.0;  // grid irregularity amplitude, fraction of cell size

  void validate() const;
  static SynthSpec from_json_file(const std::filesystem::path& path);
  std::string to_json() const;
};

struct SynthCorpus {
  std::vector<RegisteredMesh> meshes;  // identity-major, pose-minor
  std::vector<std::string> names;
  std::vector<std::string> shape_labels;
  std::vector<std::string> pose_labels;
};

/// |shape_factors| x |pose_factors| meshes on one shared topology, bitwise
/// deterministic for a given spec. Throws NumericalError if extreme factors
/// collapse a face.
SynthCorpus generate_corpus(const SynthSpec& spec);

/// Linear-in-angle articulation of one identity from pose_start to pose_end
/// over `frames` snapshots (frames = 1 gives just the start pose).
std::vector<RegisteredMesh> generate_sequence(const SynthSpec& spec, int identity,
                                              double pose_start, double pose_end, int frames);

/// Writes the corpus as OBJ files plus labels.csv (mesh,shape,pose).
void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& directory);

}  // namespace elastic
