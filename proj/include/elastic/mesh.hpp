#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "elastic/types.hpp"

namespace elastic {

// Length-unit tolerance below which a template edge/height counts as degenerate.
inline constexpr double kDegenerateLength = 1e-12;

// Scale-aware positive-definiteness threshold: g is treated as degenerate
// when det(g) <= kDegenerateDet * tr(g)^2.
inline constexpr double kDegenerateDet = 1e-12;

/// Local reference frame of one template triangle with corners p1,p2,p3:
/// the in-plane coordinates of the corners are (0,0), (l1,0), (u3,h).
struct FaceFrame {
  double l1 = 0;      // length of the base edge p1p2
  double height = 0;  // height of p3 over the base edge
  double theta = 0;   // corner angle at p1, in (0, pi)
  double u3 = 0;      // base-axis coordinate of p3, = height / tan(theta)
};

using FaceList = std::vector<std::array<std::int32_t, 3>>;

/// Shared connectivity and per-face reference quantities of the template.
/// Every registered mesh refers to one of these; face order defines the
/// correspondence across the whole corpus.
struct TemplateTopology {
  FaceList faces;
  std::int64_t vertex_count = 0;
  std::vector<FaceFrame> frames;     // computed from the template's rest positions
  std::vector<double> face_area;     // template area per face (the discrete measure)
  double total_area = 0;

  std::int64_t face_count() const { return static_cast<std::int64_t>(faces.size()); }
  bool same_connectivity(const TemplateTopology& other) const {
    return vertex_count == other.vertex_count && faces == other.faces;
  }
};

/// A body in vertex correspondence with the template: shared topology plus
/// its own vertex positions.
struct RegisteredMesh {
  std::shared_ptr<const TemplateTopology> topology;
  Positions positions;
};

/// Per-face image of a mesh under the metric/normal map: induced 2x2 SPD
/// metric, unit normal, and the template area carried as quadrature weight.
struct FaceGeometry {
  Mat2 g = Mat2::Identity();
  Vec3 n = Vec3::UnitZ();
  double area_weight = 0;
};

/// Everything the distance gradients need per face: the surface derivatives
/// in the template frame alongside the derived metric and normal.
struct FaceKinematics {
  Vec3 f_u = Vec3::Zero();
  Vec3 f_v = Vec3::Zero();
  Mat2 g = Mat2::Identity();
  Mat2 g_inv = Mat2::Identity();
  double det_g = 1;
  bool degenerate = false;  // g failed the SPD threshold; K=0 branch applies
  bool zero_area = false;   // embedded face collapsed; the normal is undefined
  Vec3 n = Vec3::UnitZ();   // unit normal (meaningless when zero_area)
  Vec3 n_raw = Vec3::Zero();
  double n_norm = 0;        // |(q2-q1) x (q3-q1)|
};

/// Computes per-face (l1, H, theta) frames from rest positions.
/// Throws NumericalError on degenerate template faces.
std::vector<FaceFrame> face_frames(const Positions& template_positions, const FaceList& faces);

/// Builds a TemplateTopology from rest positions and a face list.
std::shared_ptr<const TemplateTopology> build_topology(const Positions& template_positions,
                                                       const FaceList& faces);

/// Loads an OBJ or PLY mesh. With a topology, validates that the file's
/// face list is identical (same triples, same order) and shares it;
/// without one, the file itself becomes the template.
RegisteredMesh load_mesh(const std::filesystem::path& path,
                         std::shared_ptr<const TemplateTopology> topology = nullptr);

/// Writes vertex positions and the shared face list as ASCII OBJ
/// (9 significant digits, so output is byte-stable across runs).
void save_obj(const RegisteredMesh& mesh, const std::filesystem::path& path);

/// Per-face first fundamental form g = [[<f_u,f_u>, <f_u,f_v>], [., <f_v,f_v>]]
/// with f_u, f_v the surface derivatives in the template's local frames.
std::vector<Mat2> first_fundamental_form(const RegisteredMesh& mesh);

/// Per-face unit normals, oriented by the template face ordering.
std::vector<Vec3> face_normals(const RegisteredMesh& mesh);

/// The discrete metric/normal map: per-face (g, n) plus template area weights.
std::vector<FaceGeometry> extract_geometry(const RegisteredMesh& mesh);

/// Like extract_geometry but keeps the intermediate quantities needed by
/// analytic gradients. Degenerate faces are flagged, not fatal, unless
/// `require_nondegenerate` is set.
std::vector<FaceKinematics> face_kinematics(const RegisteredMesh& mesh,
                                            bool require_nondegenerate = false);

/// Validates positions/topology consistency; throws InputError on mismatch.
void validate_mesh(const RegisteredMesh& mesh);

}  // namespace elastic
