#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <utility>

#include <Eigen/Dense>

namespace leafscan {

/// Anything with a value and an analytic gradient over a flat vector.
template <typename F>
concept DifferentiableObjective =
    requires(const F& f, const Eigen::VectorXd& x, Eigen::VectorXd& g) {
      { f.value(x) } -> std::convertible_to<double>;
      { f.value_and_gradient(x, g) } -> std::convertible_to<double>;
    };

/// A sum of squares, loss = residual_scale() * |r(x)|^2, with a Jacobian.
template <typename F>
concept LeastSquaresObjective =
    DifferentiableObjective<F> &&
    requires(const F& f, const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
      { f.residual_scale() } -> std::convertible_to<double>;
      f.residuals(x, r);
      f.residuals_and_jacobian(x, r, jac);
    };

struct LineSearchOptions {
  double c1 = 1e-4;       // sufficient decrease
  double c2 = 0.9;        // curvature; 0.1 for conjugate gradients
  int max_evaluations = 40;
  double max_step = 1e10;
};

struct LineSearchResult {
  bool ok = false;
  double step = 0.0;
  double value = 0.0;
  Eigen::VectorXd point;
  Eigen::VectorXd gradient;
  int evaluations = 0;
};

namespace detail {

// Minimizer of the cubic matching values and slopes at a and b, clamped to
// the middle 80% of the bracket. Falls back to bisection when degenerate.
inline double cubic_step(double a, double fa, double da, double b, double fb, double db) {
  const double lo = std::min(a, b), hi = std::max(a, b);
  const double margin = 0.1 * (hi - lo);
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  double t = 0.5 * (a + b);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    const double denom = db - da + 2.0 * d2;
    if (denom != 0.0) {
      const double c = b - (b - a) * (db + d2 - d1) / denom;
      if (std::isfinite(c)) t = c;
    }
  }
  return std::clamp(t, lo + margin, hi - margin);
}

}  // namespace detail

/// Strong-Wolfe line search along descent direction `dir` from `x`:
/// expansion by doubling, then zoom with safeguarded cubic interpolation.
/// When the Wolfe curvature test cannot be met within the evaluation budget
/// the best point satisfying sufficient decrease is returned; `ok` is false
/// only when no such point was found.
template <DifferentiableObjective F>
LineSearchResult line_search(const F& f, const Eigen::VectorXd& x, double f0,
                             const Eigen::VectorXd& g0, const Eigen::VectorXd& dir,
                             double initial_step, const LineSearchOptions& opt = {}) {
  LineSearchResult best;
  const double slope0 = g0.dot(dir);
  if (!(slope0 < 0.0) || !(initial_step > 0.0)) return best;

  struct Probe {
    double t, f, slope;
    Eigen::VectorXd x, g;
  };
  auto probe = [&](double t) {
    Probe p{t, 0.0, 0.0, x + t * dir, Eigen::VectorXd()};
    p.f = f.value_and_gradient(p.x, p.g);
    p.slope = p.g.dot(dir);
    ++best.evaluations;
    return p;
  };
  auto armijo = [&](const Probe& p) { return std::isfinite(p.f) && p.f <= f0 + opt.c1 * p.t * slope0; };
  auto record = [&](const Probe& p) {
    if (armijo(p) && p.f < f0 && (!best.ok || p.f < best.value)) {
      best.ok = true;
      best.step = p.t;
      best.value = p.f;
      best.point = p.x;
      best.gradient = p.g;
    }
  };
  auto finish = [&](const Probe& p) {
    best.ok = true;
    best.step = p.t;
    best.value = p.f;
    best.point = p.x;
    best.gradient = p.g;
    return best;
  };

  auto zoom = [&](Probe lo, Probe hi) -> LineSearchResult {
    while (best.evaluations < opt.max_evaluations) {
      if (std::abs(hi.t - lo.t) <= 1e-16 * std::max(1.0, std::abs(lo.t))) break;
      double t;
      if (std::isfinite(hi.f) && std::isfinite(hi.slope)) {
        t = detail::cubic_step(lo.t, lo.f, lo.slope, hi.t, hi.f, hi.slope);
      } else {
        t = 0.5 * (lo.t + hi.t);
      }
      Probe p = probe(t);
      record(p);
      if (!armijo(p) || p.f >= lo.f) {
        hi = std::move(p);
      } else {
        if (std::abs(p.slope) <= -opt.c2 * slope0) return finish(p);
        if (p.slope * (hi.t - lo.t) >= 0.0) hi = lo;
        lo = std::move(p);
      }
    }
    return best;
  };

  Probe prev{0.0, f0, slope0, x, g0};
  double t = std::min(initial_step, opt.max_step);
  for (int i = 0; best.evaluations < opt.max_evaluations; ++i) {
    Probe p = probe(t);
    record(p);
    if (!armijo(p) || (i > 0 && p.f >= prev.f)) return zoom(std::move(prev), std::move(p));
    if (std::abs(p.slope) <= -opt.c2 * slope0) return finish(p);
    if (p.slope >= 0.0) return zoom(std::move(p), std::move(prev));
    if (t >= opt.max_step) break;
    prev = std::move(p);
    t = std::min(2.0 * t, opt.max_step);
  }
  return best;
}

}  // namespace leafscan
