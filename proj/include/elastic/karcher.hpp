#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "elastic/geodesic.hpp"
#include "elastic/mesh.hpp"
#include "elastic/metric.hpp"
#include "elastic/optim.hpp"

namespace elastic {

/// Karcher-mean problem: the mean is parameterized as
/// shapes[init_index] + sum_j beta_j D_j and minimizes the sum of squared
/// body distances to all shapes. The result can depend on init_index.
struct KarcherProblem {
  std::vector<RegisteredMesh> shapes;
  const DeformationBasis* basis = nullptr;
  MetricParams params;
  int init_index = 0;
};

/// V(beta) = sum_i d^2(shapes[i], mean(beta)) and its gradient.
std::pair<double, Eigen::VectorXd> karcher_objective(const Eigen::VectorXd& beta,
                                                     const KarcherProblem& problem);

struct KarcherResult {
  RegisteredMesh mean;
  Eigen::VectorXd beta;
  OptimReport report;
  std::vector<double> per_shape_distance;  // d(shapes[i], mean), not squared
};

/// Minimizes V from beta = 0. On optimizer failure the best point so far is
/// returned with report.converged = false.
KarcherResult compute_karcher_mean(const KarcherProblem& problem, const OptimConfig& config = {});

/// karcher_report.json: final value, per-shape distances, iterations.
void write_karcher_report(const KarcherResult& result, const KarcherProblem& problem,
                          const std::filesystem::path& path);

}  // namespace elastic
