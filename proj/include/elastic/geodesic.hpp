#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "elastic/mesh.hpp"
#include "elastic/metric.hpp"
#include "elastic/optim.hpp"

namespace elastic {

/// Orthonormal vertex-displacement fields spanning the search space for
/// geodesics and means, with the singular values of the sample matrix
/// they came from.
struct DeformationBasis {
  std::vector<Positions> fields;  // mutually orthonormal when flattened
  Eigen::VectorXd singular_values;
  bool mean_removed = false;

  int size() const { return static_cast<int>(fields.size()); }
  std::int64_t vertex_count() const { return fields.empty() ? 0 : fields.front().rows(); }
};

/// Builds the displacement basis from registered motion sequences: collects
/// lag-tau differences m[n*tau + tau] - m[n*tau], then keeps the n_basis
/// leading principal directions of the sample matrix. By default the
/// components are taken about the origin (zero displacement = no
/// deformation); set remove_mean to center the samples first.
DeformationBasis build_basis(const std::vector<std::vector<RegisteredMesh>>& sequences, int tau,
                             int n_basis, bool remove_mean = false);

/// Single file: one JSON header line, then the fields as little-endian
/// float64 triples, vertex-major.
void save_basis(const DeformationBasis& basis, const std::filesystem::path& path);
DeformationBasis load_basis(const std::filesystem::path& path);

/// A time-sampled path of bodies between two endpoints: the linear path
/// plus basis deformations on the interior knots,
///   frames[i] = (1 - t_i) f0 + t_i f1 + sum_j alpha(i-1, j) D_j,  t_i = i/T.
/// alpha has one row per interior knot i = 1..T-1; frames[0] and frames[T]
/// are the endpoints, never touched by optimization.
struct GeodesicPath {
  RegisteredMesh f0, f1;
  int steps = 0;           // T, number of time intervals
  Eigen::MatrixXd alpha;   // (T-1) x N_D
  std::vector<RegisteredMesh> frames;  // T+1 snapshots
};

/// Path with alpha = 0 and linearly interpolated frames.
GeodesicPath make_linear_path(const RegisteredMesh& f0, const RegisteredMesh& f1, int steps,
                              int n_basis);

/// Recomputes the interior frames from alpha.
void rebuild_frames(GeodesicPath& path, const DeformationBasis& basis);

/// Discrete path energy E = T * sum_i d^2(Phi(frames[i]), Phi(frames[i+1]))
/// and its gradient with respect to all interior alpha entries (flattened
/// row-major: knot-major, basis-minor). Frames are rebuilt from alpha first.
/// A collapsed face in an intermediate frame raises NumericalError naming
/// the step and face.
std::pair<double, Eigen::MatrixXd> path_energy(GeodesicPath& path, const DeformationBasis& basis,
                                               const MetricParams& params);

struct GeodesicResult {
  GeodesicPath path;
  OptimReport report;
};

/// Minimizes the path energy over alpha starting from the linear path.
/// The returned energy never exceeds the linear path's; endpoints are
/// bit-identical to the inputs. Optimizer failure is reported through
/// report.converged, not an exception.
GeodesicResult compute_geodesic(const RegisteredMesh& f0, const RegisteredMesh& f1,
                                const DeformationBasis& basis, const MetricParams& params,
                                int steps, const OptimConfig& config = {});

/// Writes frame_000.obj .. frame_T.obj plus energy.csv (iteration, energy)
/// into `directory` (created if missing).
void export_path(const GeodesicPath& path, const OptimReport* report,
                 const std::filesystem::path& directory);

}  // namespace elastic
