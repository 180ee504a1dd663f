#include <doctest.h>

#include <cmath>

#include "elastic/optim.hpp"

using namespace elastic;

namespace {

ObjectiveFunction quadratic(const Eigen::VectorXd& target, double scale = 1.0) {
  ObjectiveFunction obj;
  obj.dimension = static_cast<int>(target.size());
  obj.evaluate = [target, scale](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    if (grad) *grad = 2.0 * scale * (x - target);
    return scale * (x - target).squaredNorm();
  };
  return obj;
}

ObjectiveFunction rosenbrock(double scale = 1.0) {
  ObjectiveFunction obj;
  obj.dimension = 2;
  obj.evaluate = [scale](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    if (grad) {
      (*grad)[0] = scale * (-2.0 * a - 400.0 * x[0] * b);
      (*grad)[1] = scale * (200.0 * b);
    }
    return scale * (a * a + 100.0 * b * b);
  };
  return obj;
}

}  // namespace

TEST_SUITE("optim") {

TEST_CASE("quadratic converges in a few iterations") {
  Eigen::VectorXd target(3);
  target << 1, 2, 3;
  const auto report = minimize(quadratic(target), Eigen::VectorXd::Zero(3), {100, 1e-9, 10});
  CHECK(report.converged);
  CHECK(report.iterations <= 10);
  CHECK((report.final_point - target).lpNorm<Eigen::Infinity>() <= 1e-8);
}

TEST_CASE("rosenbrock reaches the global minimum") {
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  const auto report = minimize(rosenbrock(), x0, {500, 1e-8, 10});
  CHECK(report.converged);
  CHECK(std::abs(report.final_point[0] - 1.0) <= 1e-5);
  CHECK(std::abs(report.final_point[1] - 1.0) <= 1e-5);
}

TEST_CASE("already-optimal start returns immediately") {
  Eigen::VectorXd target(2);
  target << -1, 4;
  const auto report = minimize(quadratic(target), target, {100, 1e-6, 10});
  CHECK(report.converged);
  CHECK(report.iterations <= 1);
  CHECK(report.value_history.size() == 1);
}

TEST_CASE("accepted values never increase") {
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  const auto report = minimize(rosenbrock(), x0, {200, 1e-8, 10});
  for (std::size_t i = 1; i < report.value_history.size(); ++i)
    CHECK(report.value_history[i] <= report.value_history[i - 1]);
}

TEST_CASE("scaling the objective does not move the minimizer") {
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  const auto base = minimize(rosenbrock(1.0), x0, {500, 1e-10, 10});
  const auto scaled = minimize(rosenbrock(10.0), x0, {500, 1e-10, 10});
  CHECK(base.converged);
  CHECK(scaled.converged);
  CHECK((base.final_point - scaled.final_point).lpNorm<Eigen::Infinity>() <= 1e-6);
}

TEST_CASE("line search gives up on an unbounded direction") {
  ObjectiveFunction obj;
  obj.dimension = 1;
  obj.evaluate = [](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    if (grad) (*grad)[0] = 1.0;
    return x[0];
  };
  const auto report = minimize(obj, Eigen::VectorXd::Zero(1), {50, 1e-6, 10});
  CHECK_FALSE(report.converged);
}

TEST_CASE("non-finite start throws") {
  ObjectiveFunction obj;
  obj.dimension = 1;
  obj.evaluate = [](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    if (grad) (*grad)[0] = 1.0;
    return std::log(x[0]);  // -inf at 0
  };
  CHECK_THROWS_AS(minimize(obj, Eigen::VectorXd::Zero(1), {}), NumericalError);
}

TEST_CASE("gradient checker calibration") {
  Eigen::VectorXd target(3);
  target << 0.5, -2, 1;
  Eigen::VectorXd x(3);
  x << 1, 1, 1;
  CHECK(check_gradient(quadratic(target), x, 1e-5) <= 1e-7);
  Eigen::VectorXd x2(2);
  x2 << 0.5, 1.2;
  CHECK(check_gradient(rosenbrock(), x2, 1e-5) <= 1e-7);

  ObjectiveFunction wrong = quadratic(target);
  wrong.evaluate = [target](const Eigen::VectorXd& x2, Eigen::VectorXd* grad) {
    if (grad) *grad = 2.0 * (x2 - target) * 1.5;  // deliberately off by 50%
    return (x2 - target).squaredNorm();
  };
  CHECK(check_gradient(wrong, x, 1e-5) >= 0.1);
}

}  // TEST_SUITE
