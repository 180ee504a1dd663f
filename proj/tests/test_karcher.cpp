#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "elastic/karcher.hpp"
#include "elastic/synth.hpp"
#include "support/test_helpers.hpp"

using namespace elastic;

namespace {

struct Fixture {
  SynthSpec spec;
  std::vector<RegisteredMesh> sequence;
  DeformationBasis basis;

  Fixture() {
    spec.base_shape = BaseShape::kCylinder;
    spec.rings = 9;
    spec.segments = 10;
    spec.shape_factors = {{1.0, 1.0}};
    spec.pose_factors = {0.0};
    spec.seed = 5;
    spec.jitter = 0.1;
    sequence = generate_sequence(spec, 0, 0.0, std::numbers::pi / 6.0, 10);
    basis = build_basis({sequence}, 1, 6);
  }
};

ObjectiveFunction objective_of(const KarcherProblem& problem) {
  ObjectiveFunction obj;
  obj.dimension = problem.basis->size();
  obj.evaluate = [&problem](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    auto [value, g] = karcher_objective(x, problem);
    if (grad) *grad = g;
    return value;
  };
  return obj;
}

}  // namespace

TEST_SUITE("karcher") {

TEST_CASE("objective value at simple configurations") {
  const Fixture fx;
  const RegisteredMesh& f = fx.sequence.front();
  const RegisteredMesh& g = fx.sequence.back();

  KarcherProblem problem;
  problem.basis = &fx.basis;
  problem.params = {1.0, 1.0, 1.0};

  problem.shapes = {f};
  CHECK(karcher_objective(Eigen::VectorXd::Zero(fx.basis.size()), problem).first ==
        doctest::Approx(0.0));

  problem.shapes = {f, f};
  CHECK(karcher_objective(Eigen::VectorXd::Zero(fx.basis.size()), problem).first ==
        doctest::Approx(0.0));

  problem.shapes = {f, g};
  const double d2 = body_distance_sq(f, g, problem.params).total;
  CHECK(karcher_objective(Eigen::VectorXd::Zero(fx.basis.size()), problem).first ==
        doctest::Approx(d2).epsilon(1e-12));
}

TEST_CASE("objective is invariant under shape permutation") {
  const Fixture fx;
  KarcherProblem problem;
  problem.basis = &fx.basis;
  problem.params = {1.0, 1.0, 1.0};
  problem.shapes = {fx.sequence[0], fx.sequence[4], fx.sequence[9]};

  std::mt19937 rng(3);
  Eigen::VectorXd beta(fx.basis.size());
  for (int i = 0; i < beta.size(); ++i)
    beta[i] = 0.02 * std::uniform_real_distribution<double>(-1, 1)(rng);
  const double base = karcher_objective(beta, problem).first;

  KarcherProblem shuffled = problem;
  shuffled.shapes = {problem.shapes[2], problem.shapes[0], problem.shapes[1]};
  shuffled.init_index = 1;  // same initial shape after the shuffle
  CHECK(karcher_objective(beta, shuffled).first == base);
}

TEST_CASE("objective gradient agrees with finite differences") {
  const Fixture fx;
  KarcherProblem problem;
  problem.basis = &fx.basis;
  problem.params = {1.0, 1.0, 1.0};
  problem.shapes = {fx.sequence[0], fx.sequence[5], fx.sequence[9]};

  const ObjectiveFunction obj = objective_of(problem);
  std::mt19937 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd beta(fx.basis.size());
    for (int i = 0; i < beta.size(); ++i)
      beta[i] = 0.02 * std::uniform_real_distribution<double>(-1, 1)(rng);
    CHECK(check_gradient(obj, beta, 1e-5) <= 1e-4);
  }
}

TEST_CASE("mean of copies is the shape itself") {
  const Fixture fx;
  KarcherProblem problem;
  problem.basis = &fx.basis;
  problem.params = {1.0, 1.0, 1.0};
  problem.shapes = {fx.sequence[2]};

  auto result = compute_karcher_mean(problem);
  CHECK(result.report.final_value == doctest::Approx(0.0));
  CHECK((result.mean.positions - fx.sequence[2].positions).cwiseAbs().maxCoeff() == 0.0);

  problem.shapes = {fx.sequence[2], fx.sequence[2], fx.sequence[2]};
  result = compute_karcher_mean(problem);
  CHECK(result.report.final_value == doctest::Approx(0.0));
  CHECK((result.mean.positions - fx.sequence[2].positions).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("translated copies already have zero objective") {
  const Fixture fx;
  RegisteredMesh moved = fx.sequence[0];
  moved.positions.rowwise() += Eigen::RowVector3d(1.0, -2.0, 0.5);

  KarcherProblem problem;
  problem.basis = &fx.basis;
  problem.params = {1.0, 1.0, 1.0};
  problem.shapes = {fx.sequence[0], moved};

  const auto result = compute_karcher_mean(problem);
  CHECK(result.report.final_value <= 1e-12);
  CHECK((result.mean.positions - fx.sequence[0].positions).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mean of two shapes in the basis span beats both endpoints") {
  const Fixture fx;
  // second shape = first + displacement inside the basis span
  RegisteredMesh inside = fx.sequence[0];
  inside.positions += 0.05 * fx.basis.fields[0] + 0.03 * fx.basis.fields[1];

  KarcherProblem problem;
  problem.basis = &fx.basis;
  problem.params = {1.0, 1.0, 1.0};
  problem.shapes = {fx.sequence[0], inside};

  OptimConfig config;
  config.max_iter = 300;
  config.grad_tol = 1e-8;
  const auto result = compute_karcher_mean(problem, config);

  // W at either input shape equals the full pairwise distance
  const double w_endpoint = body_distance_sq(fx.sequence[0], inside, problem.params).total;
  CHECK(result.report.final_value <= w_endpoint * (1.0 + 1e-9));
  // the optimized mean improves on the endpoints
  CHECK(result.report.final_value < w_endpoint);
  for (std::size_t i = 1; i < result.report.value_history.size(); ++i)
    CHECK(result.report.value_history[i] <= result.report.value_history[i - 1]);
}

TEST_CASE("degenerate initial shape is a real error") {
  const Fixture fx;
  RegisteredMesh collapsed = fx.sequence[0];
  collapsed.positions.setZero();

  KarcherProblem problem;
  problem.basis = &fx.basis;
  problem.params = {1.0, 1.0, 1.0};
  problem.shapes = {collapsed};
  CHECK_THROWS_AS(compute_karcher_mean(problem), NumericalError);
}

}  // TEST_SUITE
