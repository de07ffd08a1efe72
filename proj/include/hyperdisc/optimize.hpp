#pragma once

// Quasi-Newton minimization with finite-difference gradients.

#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Dense>

namespace hyperdisc {

struct OptimizerOptions {
  double step_tol = 1e-8;       // on ||dx||_inf, relative to 1 + ||x||_inf
  double objective_tol = 1e-10; // on |df|, relative to 1 + |f|
  int max_iterations = 500;
  double fd_step = 1e-5;        // central-difference step, relative to max(1, |x_i|)
  double max_step = 5.0;        // cap on ||dx||_inf per iteration
};

struct OptimizerResult {
  Eigen::VectorXd x;
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

/// Central differences; non-finite probes fall back to a one-sided difference.
inline Eigen::VectorXd numerical_gradient(const Objective& f, const Eigen::VectorXd& x, double rel_step,
                                          double fx = std::numeric_limits<double>::quiet_NaN(),
                                          int* evaluations = nullptr) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x(i)));
    probe(i) = x(i) + h;
    const double up = f(probe);
    probe(i) = x(i) - h;
    const double down = f(probe);
    probe(i) = x(i);
    if (evaluations) *evaluations += 2;
    if (std::isfinite(up) && std::isfinite(down)) {
      g(i) = (up - down) / (2.0 * h);
    } else {
      if (std::isnan(fx)) {
        fx = f(x);
        if (evaluations) ++*evaluations;
      }
      g(i) = std::isfinite(up) ? (up - fx) / h : std::isfinite(down) ? (fx - down) / h : 0.0;
    }
  }
  return g;
}

/// BFGS on the inverse Hessian with a backtracking Armijo line search.
/// Converged when one accepted iteration moves both x and f by less than the
/// tolerances, or when no descent step can be found from the current point
/// (a zero step with zero improvement).
inline OptimizerResult minimize_bfgs(const Objective& f, Eigen::VectorXd x, const OptimizerOptions& opt = {}) {
  OptimizerResult res;
  const Eigen::Index n = x.size();
  double fx = f(x);
  res.evaluations = 1;
  if (!std::isfinite(fx)) {
    res.x = x;
    res.value = fx;
    return res;
  }
  Eigen::VectorXd g = numerical_gradient(f, x, opt.fd_step, fx, &res.evaluations);
  Eigen::MatrixXd Hinv = Eigen::MatrixXd::Identity(n, n);
  bool fresh = true;

  for (int it = 0; it < opt.max_iterations; ++it) {
    res.iterations = it + 1;
    Eigen::VectorXd p = -Hinv * g;
    if (!(g.dot(p) < 0.0)) {
      Hinv.setIdentity();
      fresh = true;
      p = -g;
    }
    const double pmax = p.cwiseAbs().maxCoeff();
    if (pmax == 0.0) {
      res.converged = true;
      break;
    }
    if (pmax > opt.max_step) p *= opt.max_step / pmax;

    const double slope = g.dot(p);
    double alpha = 1.0;
    double f_new = fx;
    Eigen::VectorXd x_new = x;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + alpha * p;
      f_new = f(x_new);
      ++res.evaluations;
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (!fresh) {
        // stale curvature; retry from steepest descent
        Hinv.setIdentity();
        fresh = true;
        continue;
      }
      res.converged = true;
      break;
    }

    const Eigen::VectorXd s = x_new - x;
    const double df = fx - f_new;
    const Eigen::VectorXd g_new = numerical_gradient(f, x_new, opt.fd_step, f_new, &res.evaluations);
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
      Hinv = (I - rho * s * y.transpose()) * Hinv * (I - rho * y * s.transpose()) + rho * s * s.transpose();
      fresh = false;
    }
    x = x_new;
    fx = f_new;
    g = g_new;

    const bool small_step = s.cwiseAbs().maxCoeff() <= opt.step_tol * (1.0 + x.cwiseAbs().maxCoeff());
    const bool small_gain = std::abs(df) <= opt.objective_tol * (1.0 + std::abs(fx));
    if (small_step && small_gain) {
      res.converged = true;
      break;
    }
  }
  res.x = x;
  res.value = fx;
  return res;
}

}  // namespace hyperdisc
