#pragma once

#include <span>
#include <string>
#include <vector>

#include "elastic/mesh.hpp"
#include "elastic/types.hpp"

namespace elastic {

/// The (a, lambda, c) triple selecting a member of the elastic distance
/// family: a weights the metric-tensor term, c the normal term, lambda
/// shapes the metric-tensor distance itself.
struct MetricParams {
  double a = 1.0;
  double lambda = 1.0;
  double c = 1.0;

  /// Throws InputError unless a >= 0, c >= 0, lambda > 0 and not both
  /// a and c are zero.
  void validate() const;
};

/// Squared body distance split into its two integrands. The per-face arrays
/// hold pointwise (unweighted) values; the integrated parts are their
/// template-area-weighted sums, and total = a*metric_part + c*normal_part.
struct PointwiseDistanceBreakdown {
  double metric_part = 0;
  double normal_part = 0;
  double total = 0;
  std::vector<double> face_metric;
  std::vector<double> face_normal;
};

/// Symmetric pairwise distances with optional class labels.
struct LabeledDistanceMatrix {
  Eigen::MatrixXd distances;
  std::vector<std::string> labels;  // empty, or one per row

  std::int64_t size() const { return distances.rows(); }
};

/// Squared geodesic distance between two 2x2 metric tensors,
///   16*lambda*(s1^2 - 2 s1 s2 cos(theta) + s2^2),
/// s_i = det(g_i)^(1/4), theta = min(pi, sqrt(tr(L0^2)/lambda)/4) with L0 the
/// traceless part of log(g1^-1 g2). Degenerate tensors take the K=0 branch
/// (theta = 0). Throws on non-symmetric input or tensors outside the
/// closed SPD cone.
double pointwise_metric_distance_sq(const Mat2& g1, const Mat2& g2, double lambda);

/// Squared great-circle distance between unit normals, arccos(<n1,n2>)^2
/// with the inner product clamped to [-1, 1].
double normal_distance_sq(const Vec3& n1, const Vec3& n2);

/// Area-weighted squared distance between two bodies given their per-face
/// geometry, extracted against the same template.
PointwiseDistanceBreakdown body_distance_sq(std::span<const FaceGeometry> a,
                                            std::span<const FaceGeometry> b,
                                            const MetricParams& params);

/// Convenience overload extracting geometry from the meshes.
PointwiseDistanceBreakdown body_distance_sq(const RegisteredMesh& a, const RegisteredMesh& b,
                                            const MetricParams& params);

/// Squared distance between two bodies given cached per-face kinematics,
/// optionally accumulating d(total)/d(vertex positions) for either side.
/// Degenerate faces are rejected (NumericalError, with face index) whenever
/// a gradient is requested, since d(det^(1/4)) blows up at the cone boundary.
PointwiseDistanceBreakdown body_distance_sq_with_gradient(const TemplateTopology& topology,
                                                          const std::vector<FaceKinematics>& a,
                                                          const std::vector<FaceKinematics>& b,
                                                          const MetricParams& params,
                                                          Positions* grad_a, Positions* grad_b);

/// Full symmetric distance matrix (square roots of body distances), with a
/// zero diagonal. Pairs are computed in parallel over `threads` workers
/// (0 = hardware concurrency).
LabeledDistanceMatrix distance_matrix(const std::vector<RegisteredMesh>& meshes,
                                      const MetricParams& params, int threads = 0);

}  // namespace elastic
