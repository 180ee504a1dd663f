#include "elastic/optim.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace elastic {

namespace {

constexpr double kArmijoC1 = 1e-4;
constexpr double kWolfeC2 = 0.9;
constexpr int kMaxLineSearchTrials = 40;

struct Evaluation {
  double value = std::numeric_limits<double>::infinity();
  Eigen::VectorXd grad;
};

// Strong Wolfe line search (bracket + zoom with bisection/interpolation).
// phi(t) = f(x + t d). Non-finite trial values shrink the bracket. Returns
// false when no acceptable step was found within the trial budget.
class LineSearch {
 public:
  LineSearch(const ObjectiveFunction& obj, const Eigen::VectorXd& x, const Eigen::VectorXd& d,
             double f0, double dphi0)
      : obj_(obj), x_(x), d_(d), f0_(f0), dphi0_(dphi0) {}

  bool run(double t_init, double& t_out, Evaluation& eval_out) {
    double t_prev = 0, f_prev = f0_, dphi_prev = dphi0_;
    double t = t_init;
    Evaluation ev;
    for (; trials_ < kMaxLineSearchTrials;) {
      double f, dphi;
      if (!eval(t, ev, f, dphi)) {  // non-finite: treat as too far
        if (!zoom(t_prev, f_prev, dphi_prev, t, /*f_hi=*/std::numeric_limits<double>::infinity(),
                  t_out, eval_out))
          return false;
        return true;
      }
      if (f > f0_ + kArmijoC1 * t * dphi0_ || (trials_ > 1 && f >= f_prev))
        return zoom(t_prev, f_prev, dphi_prev, t, f, t_out, eval_out);
      if (std::abs(dphi) <= -kWolfeC2 * dphi0_) {
        t_out = t;
        eval_out = ev;
        return true;
      }
      if (dphi >= 0) return zoom(t, f, dphi, t_prev, f_prev, t_out, eval_out);
      t_prev = t;
      f_prev = f;
      dphi_prev = dphi;
      t *= 2.0;
    }
    return false;
  }

 private:
  bool eval(double t, Evaluation& ev, double& f, double& dphi) {
    ++trials_;
    ev.grad.resize(x_.size());
    ev.value = obj_.evaluate(x_ + t * d_, &ev.grad);
    f = ev.value;
    if (!std::isfinite(f)) return false;
    dphi = ev.grad.dot(d_);
    return true;
  }

  // lo satisfies Armijo; hi does not (or is >= f_lo). Interval shrinks until
  // the strong Wolfe point is found.
  bool zoom(double t_lo, double f_lo, double dphi_lo, double t_hi, double f_hi, double& t_out,
            Evaluation& eval_out) {
    Evaluation ev;
    while (trials_ < kMaxLineSearchTrials) {
      // quadratic interpolation using (t_lo, f_lo, dphi_lo) and f_hi, with
      // bisection fallback when the minimizer is outside or f_hi unusable
      double t = 0.5 * (t_lo + t_hi);
      if (std::isfinite(f_hi)) {
        const double dt = t_hi - t_lo;
        const double denom = 2.0 * (f_hi - f_lo - dphi_lo * dt);
        if (denom != 0) {
          const double cand = t_lo - dphi_lo * dt * dt / denom;
          const double lo = std::min(t_lo, t_hi), hi = std::max(t_lo, t_hi);
          if (cand > lo + 0.1 * (hi - lo) && cand < hi - 0.1 * (hi - lo)) t = cand;
        }
      }
      double f, dphi;
      if (!eval(t, ev, f, dphi)) {
        t_hi = t;
        f_hi = std::numeric_limits<double>::infinity();
        continue;
      }
      if (f > f0_ + kArmijoC1 * t * dphi0_ || f >= f_lo) {
        t_hi = t;
        f_hi = f;
      } else {
        if (std::abs(dphi) <= -kWolfeC2 * dphi0_) {
          t_out = t;
          eval_out = ev;
          return true;
        }
        if (dphi * (t_hi - t_lo) >= 0) {
          t_hi = t_lo;
          f_hi = f_lo;
        }
        t_lo = t;
        f_lo = f;
        dphi_lo = dphi;
      }
      if (std::abs(t_hi - t_lo) < 1e-16 * std::max(1.0, std::abs(t_lo))) break;
    }
    return false;
  }

  const ObjectiveFunction& obj_;
  const Eigen::VectorXd& x_;
  const Eigen::VectorXd& d_;
  double f0_, dphi0_;
  int trials_ = 0;
};

}  // namespace

OptimReport minimize(const ObjectiveFunction& obj, const Eigen::VectorXd& x0,
                     const OptimConfig& config) {
  OptimReport report;
  Eigen::VectorXd x = x0;
  Eigen::VectorXd grad(x.size());
  double f = obj.evaluate(x, &grad);
  if (!std::isfinite(f)) throw NumericalError("objective is not finite at the starting point");
  report.value_history.push_back(f);

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  const int memory = std::max(config.memory, 1);

  for (int iter = 0; iter < config.max_iter; ++iter) {
    if (grad.lpNorm<Eigen::Infinity>() <= config.grad_tol) {
      report.converged = true;
      break;
    }

    // two-loop recursion
    Eigen::VectorXd d = -grad;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t i = s_hist.size(); i-- > 0;) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(d);
      d -= alpha[i] * y_hist[i];
    }
    if (!s_hist.empty()) {
      const double gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      d *= gamma;
      for (std::size_t i = 0; i < s_hist.size(); ++i) {
        const double beta = rho_hist[i] * y_hist[i].dot(d);
        d += (alpha[i] - beta) * s_hist[i];
      }
    }

    double dphi0 = grad.dot(d);
    if (!(dphi0 < 0)) {  // not a descent direction: restart from steepest descent
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      d = -grad;
      dphi0 = grad.dot(d);
      if (!(dphi0 < 0)) break;  // gradient numerically zero
    }

    // unit trial step once curvature information exists; gradient-scaled before
    const double t_init =
        s_hist.empty() ? 1.0 / std::max(1.0, grad.lpNorm<Eigen::Infinity>()) : 1.0;

    LineSearch search(obj, x, d, f, dphi0);
    double t = 0;
    Evaluation accepted;
    if (!search.run(t_init, t, accepted)) {
      report.converged = false;
      report.iterations = iter;
      report.final_point = x;
      report.final_value = f;
      return report;
    }

    const Eigen::VectorXd s = t * d;
    const Eigen::VectorXd y = accepted.grad - grad;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }

    x += s;
    f = accepted.value;
    grad = accepted.grad;
    report.value_history.push_back(f);
    report.iterations = iter + 1;
  }

  if (grad.lpNorm<Eigen::Infinity>() <= config.grad_tol) report.converged = true;
  report.final_point = x;
  report.final_value = f;
  return report;
}

double check_gradient(const ObjectiveFunction& obj, const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd analytic(x.size());
  obj.evaluate(x, &analytic);
  Eigen::VectorXd fd(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double step = h * std::max(1.0, std::abs(x[i]));
    xp[i] = x[i] + step;
    const double fp = obj.evaluate(xp, nullptr);
    xp[i] = x[i] - step;
    const double fm = obj.evaluate(xp, nullptr);
    xp[i] = x[i];
    fd[i] = (fp - fm) / (2.0 * step);
  }
  const double scale =
      std::max({fd.lpNorm<Eigen::Infinity>(), analytic.lpNorm<Eigen::Infinity>(), 1e-12});
  return (fd - analytic).lpNorm<Eigen::Infinity>() / scale;
}

}  // namespace elastic
