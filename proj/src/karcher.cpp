#include "elastic/karcher.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

namespace elastic {

namespace {

void validate_problem(const KarcherProblem& problem) {
  problem.params.validate();
  if (problem.shapes.empty()) throw InputError("Karcher mean needs at least one shape");
  if (!problem.basis || problem.basis->size() < 1) throw InputError("Karcher mean needs a basis");
  if (problem.init_index < 0 || problem.init_index >= static_cast<int>(problem.shapes.size()))
    throw InputError("init_index out of range");
  const auto& topo = problem.shapes.front().topology;
  for (const RegisteredMesh& m : problem.shapes) {
    validate_mesh(m);
    if (!m.topology->same_connectivity(*topo))
      throw InputError("topology mismatch: shapes are not registered to one template");
  }
  if (problem.basis->vertex_count() != topo->vertex_count)
    throw InputError("basis vertex count does not match the shapes");
}

RegisteredMesh mean_of(const Eigen::VectorXd& beta, const KarcherProblem& problem) {
  RegisteredMesh mean = problem.shapes[static_cast<std::size_t>(problem.init_index)];
  for (int j = 0; j < problem.basis->size(); ++j)
    mean.positions += beta[j] * problem.basis->fields[static_cast<std::size_t>(j)];
  return mean;
}

double flat_dot(const Positions& a, const Positions& b) { return (a.array() * b.array()).sum(); }

double objective_given_kinematics(const Eigen::VectorXd& beta, const KarcherProblem& problem,
                                  const std::vector<std::vector<FaceKinematics>>& shape_kin,
                                  Eigen::VectorXd* grad) {
  const RegisteredMesh mean = mean_of(beta, problem);
  const TemplateTopology& topo = *problem.shapes.front().topology;
  auto mean_kin = face_kinematics(mean);
  for (std::size_t f = 0; f < mean_kin.size(); ++f)
    if (mean_kin[f].degenerate)
      throw NumericalError("degenerate face " + std::to_string(f) + " in the candidate mean");

  Positions mean_grad;
  if (grad) mean_grad = Positions::Zero(topo.vertex_count, 3);
  double value = 0;
  for (const auto& kin : shape_kin) {
    const auto breakdown = body_distance_sq_with_gradient(topo, kin, mean_kin, problem.params,
                                                          nullptr, grad ? &mean_grad : nullptr);
    value += breakdown.total;
  }
  if (grad) {
    grad->resize(problem.basis->size());
    for (int j = 0; j < problem.basis->size(); ++j)
      (*grad)[j] = flat_dot(mean_grad, problem.basis->fields[static_cast<std::size_t>(j)]);
  }
  return value;
}

}  // namespace

std::pair<double, Eigen::VectorXd> karcher_objective(const Eigen::VectorXd& beta,
                                                     const KarcherProblem& problem) {
  validate_problem(problem);
  if (beta.size() != problem.basis->size())
    throw InputError("beta size does not match the basis");
  std::vector<std::vector<FaceKinematics>> shape_kin;
  shape_kin.reserve(problem.shapes.size());
  for (const RegisteredMesh& m : problem.shapes) shape_kin.push_back(face_kinematics(m));
  Eigen::VectorXd grad;
  const double value = objective_given_kinematics(beta, problem, shape_kin, &grad);
  return {value, std::move(grad)};
}

KarcherResult compute_karcher_mean(const KarcherProblem& problem, const OptimConfig& config) {
  validate_problem(problem);
  std::vector<std::vector<FaceKinematics>> shape_kin;
  shape_kin.reserve(problem.shapes.size());
  for (const RegisteredMesh& m : problem.shapes) shape_kin.push_back(face_kinematics(m));

  // beta = 0 must be evaluable: the initial mean is one of the inputs.
  objective_given_kinematics(Eigen::VectorXd::Zero(problem.basis->size()), problem, shape_kin,
                             nullptr);

  ObjectiveFunction obj;
  obj.dimension = problem.basis->size();
  obj.evaluate = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) -> double {
    try {
      Eigen::VectorXd g;
      const double v = objective_given_kinematics(x, problem, shape_kin, grad ? &g : nullptr);
      if (grad) *grad = g;
      return v;
    } catch (const NumericalError&) {
      if (grad) grad->setZero();
      return std::numeric_limits<double>::infinity();
    }
  };

  KarcherResult result;
  result.report = minimize(obj, Eigen::VectorXd::Zero(obj.dimension), config);
  result.beta = result.report.final_point;
  result.mean = mean_of(result.beta, problem);

  const auto mean_geometry = extract_geometry(result.mean);
  result.per_shape_distance.reserve(problem.shapes.size());
  for (const RegisteredMesh& m : problem.shapes) {
    const auto breakdown =
        body_distance_sq(std::span<const FaceGeometry>(extract_geometry(m)),
                         std::span<const FaceGeometry>(mean_geometry), problem.params);
    result.per_shape_distance.push_back(std::sqrt(std::max(breakdown.total, 0.0)));
  }
  return result;
}

void write_karcher_report(const KarcherResult& result, const KarcherProblem& problem,
                          const std::filesystem::path& path) {
  nlohmann::json j;
  j["final_value"] = result.report.final_value;
  j["iterations"] = result.report.iterations;
  j["converged"] = result.report.converged;
  j["init_index"] = problem.init_index;
  j["params"] = {{"a", problem.params.a}, {"lambda", problem.params.lambda}, {"c", problem.params.c}};
  j["per_shape_distance"] = result.per_shape_distance;
  std::ofstream out(path);
  if (!out) throw InputError("cannot write report: " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace elastic
