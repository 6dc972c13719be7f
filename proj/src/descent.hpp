#pragma once

#include <cmath>
#include <functional>

#include "pqobst/types.hpp"

namespace pqobst::detail {

struct DescentResult {
  Vec x;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Gradient descent with Barzilai-Borwein trial steps and Armijo backtracking.
/// Stops when |grad| <= grad_tol, or when backtracking can no longer decrease f.
inline DescentResult minimize_armijo(const std::function<double(const Vec&)>& f,
                                     const std::function<Vec(const Vec&)>& gradient, Vec x,
                                     double grad_tol, int max_iters) {
  constexpr double kArmijo = 1e-4;
  DescentResult out;
  double fx = f(x);
  Vec g = gradient(x);
  double step = 1.0 / std::max(1.0, g.norm());
  Vec x_prev = x;
  Vec g_prev = g;
  for (int it = 0; it < max_iters; ++it) {
    out.iterations = it;
    const double gn = g.norm();
    if (gn <= grad_tol) {
      out.converged = true;
      break;
    }
    if (it > 0) {
      const Vec s = x - x_prev;
      const Vec y = g - g_prev;
      const double sy = s.dot(y);
      step = sy > 0 ? s.squaredNorm() / sy : 2.0 * step;
    }
    bool accepted = false;
    double t = step;
    for (int bt = 0; bt < 80; ++bt) {
      const Vec trial = x - t * g;
      const double ft = f(trial);
      if (std::isfinite(ft) && ft <= fx - kArmijo * t * gn * gn) {
        x_prev = x;
        g_prev = g;
        x = trial;
        fx = ft;
        g = gradient(x);
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // stagnation at rounding level
  }
  out.x = x;
  out.value = fx;
  out.grad_norm = g.norm();
  if (out.grad_norm <= grad_tol) out.converged = true;
  return out;
}

/// Root of an increasing function on [lo, hi]; returns an endpoint when the sign
/// does not change.
inline double bisect_increasing(const std::function<double(double)>& h, double lo, double hi) {
  if (h(lo) >= 0) return lo;
  if (h(hi) <= 0) return hi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (h(mid) < 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace pqobst::detail
