#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "fmer/types.hpp"

namespace fmer {

struct LbfgsOptions {
  double grad_tol = 1e-8;  // infinity norm of the gradient
  int max_iterations = 2000;
  int history = 10;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  int max_line_search = 50;
  // Progress guard: stop once the decrease over `past` iterations falls
  // below delta * max(1, |f|).
  int past = 10;
  double delta = 1e-13;
};

struct LbfgsResult {
  Vector x;
  double value = 0.0;
  double grad_inf_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Limited-memory BFGS with Armijo backtracking. `fn(x, grad)` must return
/// the objective value and fill `grad` with the gradient at x.
template <typename Objective>
LbfgsResult lbfgs_minimize(Objective&& fn, Vector x0,
                           const LbfgsOptions& opts = {}) {
  const Index n = x0.size();
  Vector x = std::move(x0);
  Vector grad(n), grad_new(n), x_new(n);
  double value = fn(x, grad);

  LbfgsResult best;
  best.x = x;
  best.value = value;

  std::vector<Vector> s_hist, y_hist;
  std::vector<double> rho_hist;
  std::vector<double> value_trail;
  double gamma = 1.0;

  int iter = 0;
  for (; iter < opts.max_iterations; ++iter) {
    const double gnorm = grad.template lpNorm<Eigen::Infinity>();
    if (value < best.value) {
      best.x = x;
      best.value = value;
    }
    if (opts.past > 0) {
      value_trail.push_back(value);
      const int lag = static_cast<int>(value_trail.size()) - 1 - opts.past;
      if (lag >= 0 &&
          value_trail[static_cast<std::size_t>(lag)] - value <=
              opts.delta * std::max(1.0, std::abs(value))) {
        break;
      }
    }
    if (gnorm <= opts.grad_tol) {
      best.x = x;
      best.value = value;
      best.grad_inf_norm = gnorm;
      best.iterations = iter;
      best.converged = true;
      return best;
    }

    // Two-loop recursion for the search direction.
    Vector q = -grad;
    const int m = static_cast<int>(s_hist.size());
    std::vector<double> alpha(static_cast<std::size_t>(m));
    for (int i = m - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    q *= gamma;
    for (int i = 0; i < m; ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alpha[i] - beta) * s_hist[i];
    }

    double directional = grad.dot(q);
    if (!(directional < 0.0)) {
      // Not a descent direction (stale curvature); fall back to steepest descent.
      q = -grad;
      directional = -grad.squaredNorm();
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      gamma = 1.0;
    }

    double step = 1.0;
    bool accepted = false;
    double value_new = value;
    for (int ls = 0; ls < opts.max_line_search; ++ls) {
      x_new = x + step * q;
      value_new = fn(x_new, grad_new);
      if (std::isfinite(value_new) &&
          value_new <= value + opts.armijo_c * step * directional) {
        accepted = true;
        break;
      }
      step *= opts.backtrack;
    }
    if (!accepted) break;

    Vector s = x_new - x;
    Vector y = grad_new - grad;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (static_cast<int>(s_hist.size()) == opts.history) {
        s_hist.erase(s_hist.begin());
        y_hist.erase(y_hist.begin());
        rho_hist.erase(rho_hist.begin());
      }
      gamma = sy / y.squaredNorm();
      rho_hist.push_back(1.0 / sy);
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
    }
    x.swap(x_new);
    grad.swap(grad_new);
    value = value_new;
  }

  if (value < best.value) {
    best.x = x;
    best.value = value;
  }
  best.grad_inf_norm = grad.template lpNorm<Eigen::Infinity>();
  best.iterations = iter;
  best.converged = false;
  return best;
}

}  // namespace fmer
