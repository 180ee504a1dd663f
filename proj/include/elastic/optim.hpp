#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "elastic/types.hpp"

namespace elastic {

/// A smooth objective with analytic gradient. `evaluate` returns the value
/// and, when `grad` is non-null, fills the gradient (same length as x).
struct ObjectiveFunction {
  int dimension = 0;
  std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)> evaluate;
};

struct OptimConfig {
  int max_iter = 500;
  double grad_tol = 1e-6;  // on the max-norm of the gradient
  int memory = 10;         // L-BFGS history length
};

struct OptimReport {
  Eigen::VectorXd final_point;
  double final_value = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> value_history;  // initial value plus every accepted step
};

/// L-BFGS with a strong Wolfe line search (c1 = 1e-4, c2 = 0.9). Accepted
/// steps satisfy sufficient decrease, so value_history is non-increasing.
/// Non-finite trial values make the line search backtrack; if no acceptable
/// step is found within 40 trials the best point so far is returned with
/// converged = false. Throws NumericalError if the objective is not finite
/// at x0.
OptimReport minimize(const ObjectiveFunction& obj, const Eigen::VectorXd& x0,
                     const OptimConfig& config = {});

/// Max-norm relative error between the analytic gradient and central finite
/// differences with step h. Reports, never throws.
double check_gradient(const ObjectiveFunction& obj, const Eigen::VectorXd& x, double h = 1e-5);

}  // namespace elastic
