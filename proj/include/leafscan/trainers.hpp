#pragma once

// Full-batch trainers over a flat parameter vector. Every trainer works on
// any DifferentiableObjective; LM and BR additionally need the least-squares
// structure. One epoch is one parameter-update cycle over the whole batch.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "leafscan/error.hpp"
#include "leafscan/line_search.hpp"
#include "leafscan/mlp.hpp"

namespace leafscan {

enum class Algorithm { BR, LM, BFGS, RPROP, SCG, CGB, CGF, CGP, OSS, GDX };

inline constexpr std::array<Algorithm, 10> kAllAlgorithms{
    Algorithm::BR,  Algorithm::LM,  Algorithm::BFGS, Algorithm::RPROP, Algorithm::SCG,
    Algorithm::CGB, Algorithm::CGF, Algorithm::CGP,  Algorithm::OSS,   Algorithm::GDX};

inline std::string_view algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::BR: return "BR";
    case Algorithm::LM: return "LM";
    case Algorithm::BFGS: return "BFGS";
    case Algorithm::RPROP: return "RPROP";
    case Algorithm::SCG: return "SCG";
    case Algorithm::CGB: return "CGB";
    case Algorithm::CGF: return "CGF";
    case Algorithm::CGP: return "CGP";
    case Algorithm::OSS: return "OSS";
    case Algorithm::GDX: return "GDX";
  }
  return "?";
}

inline std::string_view algorithm_title(Algorithm a) {
  switch (a) {
    case Algorithm::BR: return "Bayesian Regularization";
    case Algorithm::LM: return "Levenberg-Marquardt";
    case Algorithm::BFGS: return "BFGS Quasi-Newton";
    case Algorithm::RPROP: return "Resilient Backpropagation";
    case Algorithm::SCG: return "Scaled Conjugate Gradient";
    case Algorithm::CGB: return "Conjugate Gradient with Powell/Beale Restarts";
    case Algorithm::CGF: return "Fletcher-Powell Conjugate Gradient";
    case Algorithm::CGP: return "Polak-Ribiere Conjugate Gradient";
    case Algorithm::OSS: return "One Step Secant";
    case Algorithm::GDX: return "Variable Learning Rate Backpropagation";
  }
  return "?";
}

inline std::optional<Algorithm> parse_algorithm(std::string_view name) {
  for (Algorithm a : kAllAlgorithms) {
    if (algorithm_name(a) == name) return a;
  }
  return std::nullopt;
}

inline std::string algorithm_list() {
  std::string out;
  for (Algorithm a : kAllAlgorithms) {
    if (!out.empty()) out += ", ";
    out += algorithm_name(a);
  }
  return out;
}

enum class StopReason { Goal, MaxEpochs, MinGradient, MuOverflow, MinStep, Internal };

inline std::string_view stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::Goal: return "goal";
    case StopReason::MaxEpochs: return "max_epochs";
    case StopReason::MinGradient: return "min_gradient";
    case StopReason::MuOverflow: return "mu_overflow";
    case StopReason::MinStep: return "min_step";
    case StopReason::Internal: return "internal";
  }
  return "?";
}

struct TrainerConfig {
  Algorithm algorithm = Algorithm::LM;
  int max_epochs = 1000;
  double goal = 0.0;
  double min_gradient = 1e-7;
  std::uint64_t seed = 0;  // initial weights

  // LM / BR damping
  double mu_initial = 1e-3;
  double mu_decrease = 0.1;
  double mu_increase = 10.0;
  double mu_max = 1e10;
  double mu_min = 1e-13;

  // BR evidence framework starting point
  double br_alpha = 0.0;
  double br_beta = 1.0;

  // Rprop
  double rprop_delta0 = 0.07;
  double rprop_increase = 1.2;
  double rprop_decrease = 0.5;
  double rprop_delta_max = 50.0;
  double rprop_delta_min = 1e-9;

  // SCG
  double scg_sigma = 5e-5;
  double scg_lambda = 5e-7;

  // Powell/Beale restart threshold
  double beale_restart = 0.2;

  // GDX
  double gdx_lr = 0.01;
  double gdx_lr_increase = 1.05;
  double gdx_lr_decrease = 0.7;
  double gdx_momentum = 0.9;
  double gdx_max_increase = 1.04;

  // Shared line search
  double ls_armijo = 1e-4;
  double ls_curvature_cg = 0.1;
  double ls_curvature_qn = 0.9;
};

/// Evidence-framework hyperparameters after a BR update.
struct BayesianStats {
  double alpha = 0.0;
  double beta = 1.0;
  double gamma = 0.0;  // effective number of parameters
};

struct OptimizationResult {
  Eigen::VectorXd theta;
  int epochs_run = 0;
  std::vector<double> loss_history;  // loss after each epoch
  StopReason stop_reason = StopReason::MaxEpochs;
  std::vector<double> mu_history;              // LM / BR: damping in force after each epoch
  std::vector<BayesianStats> bayes_history;    // BR: one entry per hyperparameter update
  std::vector<double> objective_before;        // BR: regularized objective before each step
  std::vector<double> objective_after;         // BR: same hyperparameters, after the step
  std::optional<BayesianStats> bayes;          // BR: final values
  int evaluations = 0;                         // objective evaluations, all kinds
};

namespace detail {

// Shared epoch loop bookkeeping: stop tests happen before every epoch and
// once more after the last.
struct EpochGuard {
  const TrainerConfig& cfg;
  OptimizationResult& out;

  std::optional<StopReason> check(double loss, double grad_norm) const {
    if (loss <= cfg.goal) return StopReason::Goal;
    if (grad_norm < cfg.min_gradient) return StopReason::MinGradient;
    return std::nullopt;
  }
};

inline void require_finite(double loss, const Eigen::VectorXd& grad) {
  if (!std::isfinite(loss) || !grad.allFinite()) {
    throw InputError("non-finite loss or gradient at the initial parameters");
  }
}

template <DifferentiableObjective F>
OptimizationResult run_bfgs(const F& f, Eigen::VectorXd x, const TrainerConfig& cfg) {
  OptimizationResult out;
  EpochGuard guard{cfg, out};
  Eigen::VectorXd g;
  double fx = f.value_and_gradient(x, g);
  require_finite(fx, g);
  ++out.evaluations;
  const Eigen::Index n = x.size();
  Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(n, n);
  bool identity = true;
  const LineSearchOptions ls{cfg.ls_armijo, cfg.ls_curvature_qn};

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    if (auto stop = guard.check(fx, g.norm())) {
      out.stop_reason = *stop;
      out.theta = x;
      return out;
    }
    Eigen::VectorXd dir = -(hinv * g);
    if (!(dir.dot(g) < 0.0)) {
      hinv.setIdentity();
      identity = true;
      dir = -g;
    }
    double step0 = identity ? std::min(1.0, 1.0 / g.norm()) : 1.0;
    LineSearchResult res = line_search(f, x, fx, g, dir, step0, ls);
    out.evaluations += res.evaluations;
    if (!res.ok && !identity) {
      hinv.setIdentity();
      identity = true;
      dir = -g;
      res = line_search(f, x, fx, g, dir, std::min(1.0, 1.0 / g.norm()), ls);
      out.evaluations += res.evaluations;
    }
    if (!res.ok) {
      out.stop_reason = StopReason::MinStep;
      out.theta = x;
      return out;
    }
    const Eigen::VectorXd s = res.point - x;
    const Eigen::VectorXd y = res.gradient - g;
    const double sy = s.dot(y);
    if (sy > 1e-12) {
      if (identity) hinv *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = hinv * y;
      const double yhy = y.dot(hy);
      hinv += ((1.0 + rho * yhy) * rho) * (s * s.transpose()) - rho * (hy * s.transpose() + s * hy.transpose());
      identity = false;
    }
    x = res.point;
    g = res.gradient;
    fx = res.value;
    out.loss_history.push_back(fx);
    ++out.epochs_run;
  }
  out.stop_reason = guard.check(fx, g.norm()).value_or(StopReason::MaxEpochs);
  out.theta = x;
  return out;
}

enum class CgVariant { FletcherReeves, PolakRibiere, PowellBeale };

template <DifferentiableObjective F>
OptimizationResult run_conjugate_gradient(const F& f, Eigen::VectorXd x, const TrainerConfig& cfg,
                                          CgVariant variant) {
  OptimizationResult out;
  EpochGuard guard{cfg, out};
  Eigen::VectorXd g;
  double fx = f.value_and_gradient(x, g);
  require_finite(fx, g);
  ++out.evaluations;
  const Eigen::Index n = x.size();
  const LineSearchOptions ls{cfg.ls_armijo, cfg.ls_curvature_cg};

  Eigen::VectorXd dir = -g;
  bool steepest = true;
  int since_restart = 0;
  double prev_step = 0.0;
  double prev_slope = 0.0;
  // Powell/Beale restart pair: direction taken at the restart and the
  // gradient change it produced.
  Eigen::VectorXd restart_dir, restart_y;
  bool have_restart_pair = false;
  bool just_restarted = true;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    if (auto stop = guard.check(fx, g.norm())) {
      out.stop_reason = *stop;
      out.theta = x;
      return out;
    }
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      dir = -g;
      steepest = true;
      slope = -g.squaredNorm();
    }
    double step0 = (prev_step > 0.0) ? prev_step * prev_slope / slope : std::min(1.0, 1.0 / g.norm());
    if (!(step0 > 0.0) || !std::isfinite(step0)) step0 = std::min(1.0, 1.0 / g.norm());
    LineSearchResult res = line_search(f, x, fx, g, dir, step0, ls);
    out.evaluations += res.evaluations;
    if (!res.ok && !steepest) {
      dir = -g;
      steepest = true;
      slope = -g.squaredNorm();
      res = line_search(f, x, fx, g, dir, std::min(1.0, 1.0 / g.norm()), ls);
      out.evaluations += res.evaluations;
      since_restart = 0;
      have_restart_pair = false;
      just_restarted = true;
    }
    if (!res.ok) {
      out.stop_reason = StopReason::MinStep;
      out.theta = x;
      return out;
    }
    prev_step = res.step;
    prev_slope = slope;
    const Eigen::VectorXd g_new = res.gradient;
    const Eigen::VectorXd y = g_new - g;
    if (variant == CgVariant::PowellBeale && just_restarted) {
      restart_dir = dir;
      restart_y = y;
      have_restart_pair = true;
      just_restarted = false;
    }
    ++since_restart;

    bool restart = since_restart >= n;
    Eigen::VectorXd next;
    switch (variant) {
      case CgVariant::FletcherReeves: {
        const double beta = g_new.squaredNorm() / g.squaredNorm();
        next = -g_new + beta * dir;
        break;
      }
      case CgVariant::PolakRibiere: {
        const double beta = std::max(0.0, g_new.dot(y) / g.squaredNorm());
        next = -g_new + beta * dir;
        break;
      }
      case CgVariant::PowellBeale: {
        if (std::abs(g.dot(g_new)) >= cfg.beale_restart * g_new.squaredNorm()) restart = true;
        const double dy = dir.dot(y);
        if (dy == 0.0) {
          restart = true;
          break;
        }
        next = -g_new + (g_new.dot(y) / dy) * dir;
        if (have_restart_pair && since_restart > 1) {
          const double ry = restart_dir.dot(restart_y);
          if (ry == 0.0) {
            restart = true;
            break;
          }
          next += (g_new.dot(restart_y) / ry) * restart_dir;
        }
        break;
      }
    }
    if (restart || !next.allFinite() || !(next.dot(g_new) < 0.0)) {
      next = -g_new;
      steepest = true;
      since_restart = 0;
      have_restart_pair = false;
      just_restarted = true;
    } else {
      steepest = false;
    }
    x = res.point;
    g = g_new;
    fx = res.value;
    dir = next;
    out.loss_history.push_back(fx);
    ++out.epochs_run;
  }
  out.stop_reason = guard.check(fx, g.norm()).value_or(StopReason::MaxEpochs);
  out.theta = x;
  return out;
}

template <DifferentiableObjective F>
OptimizationResult run_one_step_secant(const F& f, Eigen::VectorXd x, const TrainerConfig& cfg) {
  OptimizationResult out;
  EpochGuard guard{cfg, out};
  Eigen::VectorXd g;
  double fx = f.value_and_gradient(x, g);
  require_finite(fx, g);
  ++out.evaluations;
  const LineSearchOptions ls{cfg.ls_armijo, cfg.ls_curvature_qn};
  Eigen::VectorXd s, y;
  bool have_pair = false;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    if (auto stop = guard.check(fx, g.norm())) {
      out.stop_reason = *stop;
      out.theta = x;
      return out;
    }
    Eigen::VectorXd dir = -g;
    bool steepest = true;
    if (have_pair) {
      const double sy = s.dot(y);
      if (sy > 1e-12) {
        const double b = s.dot(g) / sy;
        const double a = -(1.0 + y.squaredNorm() / sy) * b + y.dot(g) / sy;
        Eigen::VectorXd d = -g + a * s + b * y;
        if (d.allFinite() && d.dot(g) < 0.0) {
          dir = std::move(d);
          steepest = false;
        }
      }
    }
    LineSearchResult res =
        line_search(f, x, fx, g, dir, steepest ? std::min(1.0, 1.0 / g.norm()) : 1.0, ls);
    out.evaluations += res.evaluations;
    if (!res.ok && !steepest) {
      res = line_search(f, x, fx, g, -g, std::min(1.0, 1.0 / g.norm()), ls);
      out.evaluations += res.evaluations;
    }
    if (!res.ok) {
      out.stop_reason = StopReason::MinStep;
      out.theta = x;
      return out;
    }
    s = res.point - x;
    y = res.gradient - g;
    have_pair = true;
    x = res.point;
    g = res.gradient;
    fx = res.value;
    out.loss_history.push_back(fx);
    ++out.epochs_run;
  }
  out.stop_reason = guard.check(fx, g.norm()).value_or(StopReason::MaxEpochs);
  out.theta = x;
  return out;
}

/// Moller's scaled conjugate gradient. Curvature along the search direction
/// comes from a finite difference of gradients.
template <DifferentiableObjective F>
OptimizationResult run_scaled_conjugate_gradient(const F& f, Eigen::VectorXd x,
                                                 const TrainerConfig& cfg) {
  OptimizationResult out;
  EpochGuard guard{cfg, out};
  Eigen::VectorXd g;
  double fx = f.value_and_gradient(x, g);
  require_finite(fx, g);
  ++out.evaluations;
  const Eigen::Index n = x.size();

  Eigen::VectorXd r = -g;
  Eigen::VectorXd p = r;
  double lambda = cfg.scg_lambda;
  double lambda_bar = 0.0;
  bool success = true;
  double delta = 0.0;
  int since_restart = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    if (auto stop = guard.check(fx, g.norm())) {
      out.stop_reason = *stop;
      out.theta = x;
      return out;
    }
    double p2 = p.squaredNorm();
    if (success) {
      if (!(p.dot(r) > 0.0)) {
        p = r;
        p2 = p.squaredNorm();
        since_restart = 0;
      }
      const double sigma = cfg.scg_sigma / std::sqrt(p2);
      Eigen::VectorXd g_probe;
      f.value_and_gradient(x + sigma * p, g_probe);
      ++out.evaluations;
      delta = p.dot(g_probe - g) / sigma;
    }
    delta += (lambda - lambda_bar) * p2;
    if (delta <= 0.0) {
      lambda_bar = 2.0 * (lambda - delta / p2);
      delta = -delta + lambda * p2;
      lambda = lambda_bar;
    }
    const double mu = p.dot(r);
    const double alpha = mu / delta;
    const Eigen::VectorXd x_new = x + alpha * p;
    Eigen::VectorXd g_new;
    const double f_new = f.value_and_gradient(x_new, g_new);
    ++out.evaluations;
    const double comparison = std::isfinite(f_new) ? 2.0 * delta * (fx - f_new) / (mu * mu) : -1.0;

    if (comparison >= 0.0 && f_new <= fx) {
      x = x_new;
      fx = f_new;
      const Eigen::VectorXd r_new = -g_new;
      g = g_new;
      lambda_bar = 0.0;
      success = true;
      ++since_restart;
      if (since_restart >= n) {
        p = r_new;
        since_restart = 0;
      } else {
        const double beta = (r_new.squaredNorm() - r_new.dot(r)) / mu;
        p = r_new + beta * p;
      }
      r = r_new;
      if (comparison >= 0.75) lambda *= 0.25;
    } else {
      lambda_bar = lambda;
      success = false;
    }
    if (comparison < 0.25) lambda += delta * (1.0 - comparison) / p2;
    out.loss_history.push_back(fx);
    ++out.epochs_run;
    if (!std::isfinite(lambda) || lambda > 1e300) {
      out.stop_reason = StopReason::MinStep;
      out.theta = x;
      return out;
    }
  }
  out.stop_reason = guard.check(fx, g.norm()).value_or(StopReason::MaxEpochs);
  out.theta = x;
  return out;
}

/// Rprop with per-weight steps. A trial update that raises the loss is
/// rejected and every step size shrinks by the decrease factor, so the
/// recorded loss never goes up.
template <DifferentiableObjective F>
OptimizationResult run_rprop(const F& f, Eigen::VectorXd x, const TrainerConfig& cfg) {
  OptimizationResult out;
  EpochGuard guard{cfg, out};
  Eigen::VectorXd g;
  double fx = f.value_and_gradient(x, g);
  require_finite(fx, g);
  ++out.evaluations;
  Eigen::VectorXd step = Eigen::VectorXd::Constant(x.size(), cfg.rprop_delta0);
  // Gradient used for sign comparisons; components are zeroed after a
  // reversal so the next epoch neither grows nor shrinks that step.
  Eigen::VectorXd g_prev = g;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    if (auto stop = guard.check(fx, g.norm())) {
      out.stop_reason = *stop;
      out.theta = x;
      return out;
    }
    Eigen::VectorXd trial = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (g[i] > 0.0) trial[i] -= step[i];
      else if (g[i] < 0.0) trial[i] += step[i];
    }
    Eigen::VectorXd g_new;
    const double f_new = f.value_and_gradient(trial, g_new);
    ++out.evaluations;
    if (std::isfinite(f_new) && f_new <= fx) {
      Eigen::VectorXd g_sign = g_new;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double sign = g_prev[i] * g_new[i];
        if (sign > 0.0) {
          step[i] = std::min(step[i] * cfg.rprop_increase, cfg.rprop_delta_max);
        } else if (sign < 0.0) {
          step[i] = std::max(step[i] * cfg.rprop_decrease, cfg.rprop_delta_min);
          g_sign[i] = 0.0;
        }
      }
      x = trial;
      fx = f_new;
      g = g_new;
      g_prev = g_sign;
    } else {
      for (Eigen::Index i = 0; i < step.size(); ++i) {
        step[i] = std::max(step[i] * cfg.rprop_decrease, cfg.rprop_delta_min);
      }
      if (step.maxCoeff() <= cfg.rprop_delta_min) {
        out.loss_history.push_back(fx);
        ++out.epochs_run;
        out.stop_reason = StopReason::MinStep;
        out.theta = x;
        return out;
      }
    }
    out.loss_history.push_back(fx);
    ++out.epochs_run;
  }
  out.stop_reason = guard.check(fx, g.norm()).value_or(StopReason::MaxEpochs);
  out.theta = x;
  return out;
}

/// Gradient descent with momentum and an adaptive learning rate. A step that
/// raises the loss by more than the allowed ratio is discarded.
template <DifferentiableObjective F>
OptimizationResult run_gdx(const F& f, Eigen::VectorXd x, const TrainerConfig& cfg) {
  OptimizationResult out;
  EpochGuard guard{cfg, out};
  Eigen::VectorXd g;
  double fx = f.value_and_gradient(x, g);
  require_finite(fx, g);
  ++out.evaluations;
  double lr = cfg.gdx_lr;
  const double mc = cfg.gdx_momentum;
  Eigen::VectorXd dx = Eigen::VectorXd::Zero(x.size());

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    if (auto stop = guard.check(fx, g.norm())) {
      out.stop_reason = *stop;
      out.theta = x;
      return out;
    }
    const Eigen::VectorXd dx_new = mc * dx - (1.0 - mc) * lr * g;
    const Eigen::VectorXd trial = x + dx_new;
    Eigen::VectorXd g_new;
    const double f_new = f.value_and_gradient(trial, g_new);
    ++out.evaluations;
    if (!std::isfinite(f_new) || f_new > cfg.gdx_max_increase * fx) {
      lr *= cfg.gdx_lr_decrease;
      dx.setZero();
    } else {
      if (f_new < fx) lr *= cfg.gdx_lr_increase;
      x = trial;
      fx = f_new;
      g = g_new;
      dx = dx_new;
    }
    out.loss_history.push_back(fx);
    ++out.epochs_run;
  }
  out.stop_reason = guard.check(fx, g.norm()).value_or(StopReason::MaxEpochs);
  out.theta = x;
  return out;
}

inline void gram_into(const Eigen::MatrixXd& jac, Eigen::MatrixXd& a) {
  const Eigen::Index p = jac.cols();
  a.setZero(p, p);
  a.selfadjointView<Eigen::Lower>().rankUpdate(jac.transpose());
  a.triangularView<Eigen::StrictlyUpper>() = a.transpose();
}

inline Eigen::MatrixXd gram(const Eigen::MatrixXd& jac) {
  Eigen::MatrixXd a;
  gram_into(jac, a);
  return a;
}

}  // namespace detail

/// Evidence-framework re-estimation of the BR hyperparameters from the
/// Gauss-Newton Hessian H = 2 beta J'J + 2 alpha I:
///   gamma = P - 2 alpha tr(H^-1),  alpha' = gamma / (2 |theta|^2),
///   beta' = (N - gamma) / (2 SSE).
/// With alpha = 0 every parameter is effective and gamma = P without any
/// factorization. N - gamma is floored at 1 so beta stays positive when the
/// network has more parameters than residuals.
// Scratch storage for repeated updates of the same size.
struct BrWorkspace {
  Eigen::MatrixXd m;
  Eigen::MatrixXd linv;
  Eigen::LLT<Eigen::MatrixXd> llt;
};

inline BayesianStats br_hyperparameter_update_from_gram(const Eigen::MatrixXd& jtj, double sse,
                                                        Eigen::Index residual_count,
                                                        const Eigen::VectorXd& theta, double alpha,
                                                        double beta, BrWorkspace& ws) {
  if (alpha < 0.0 || !(beta > 0.0)) throw InputError("br update: need alpha >= 0 and beta > 0");
  const auto p = static_cast<double>(theta.size());
  const auto n_res = static_cast<double>(residual_count);
  const double ssw = theta.squaredNorm();

  double gamma = p;
  if (alpha > 0.0) {
    // Factor M = H / (2 beta) = J'J + (alpha / beta) I; tr(H^-1) = tr(M^-1) / (2 beta).
    Eigen::MatrixXd& m = ws.m;
    m = jtj;
    m.diagonal().array() += alpha / beta;
    ws.llt.compute(m);
    if (ws.llt.info() != Eigen::Success) {
      m.diagonal().array() += 1e-10;
      ws.llt.compute(m);
      if (ws.llt.info() != Eigen::Success) throw InternalError("br update: Hessian is singular");
    }
    ws.linv.setIdentity(m.rows(), m.cols());
    ws.llt.matrixL().solveInPlace(ws.linv);
    const double trace = ws.linv.squaredNorm() / (2.0 * beta);  // |L^-1|_F^2 = tr(M^-1)
    gamma = std::clamp(p - 2.0 * alpha * trace, 0.0, p);
  }
  BayesianStats out;
  out.gamma = gamma;
  out.alpha = ssw > 0.0 ? gamma / (2.0 * ssw) : 1.0;
  out.beta = sse > 0.0 ? std::max(n_res - gamma, 1.0) / (2.0 * sse) : beta;
  return out;
}

inline BayesianStats br_hyperparameter_update(const Eigen::MatrixXd& jac, const Eigen::VectorXd& residuals,
                                              const Eigen::VectorXd& theta, double alpha, double beta) {
  if (jac.rows() != residuals.size() || jac.cols() != theta.size()) {
    throw InputError("br update: Jacobian shape does not match residuals and parameters");
  }
  BrWorkspace ws;
  return br_hyperparameter_update_from_gram(detail::gram(jac), residuals.squaredNorm(),
                                            residuals.size(), theta, alpha, beta, ws);
}

namespace detail {

// Levenberg-Marquardt on scale * |r|^2, optionally regularized by the
// evidence framework: minimize beta * |r|^2 + alpha * |theta|^2 and
// re-estimate (alpha, beta) after every accepted step.
template <LeastSquaresObjective F>
OptimizationResult run_levenberg_marquardt(const F& f, Eigen::VectorXd x, const TrainerConfig& cfg,
                                           bool bayesian) {
  OptimizationResult out;
  EpochGuard guard{cfg, out};
  const double scale = f.residual_scale();
  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  f.residuals_and_jacobian(x, r, jac);
  ++out.evaluations;
  double sse = r.squaredNorm();
  if (!std::isfinite(sse) || !jac.allFinite()) {
    throw InputError("non-finite loss or gradient at the initial parameters");
  }
  double alpha = bayesian ? cfg.br_alpha : 0.0;
  double beta = bayesian ? cfg.br_beta : 1.0;
  double mu = cfg.mu_initial;
  // Reused across epochs to avoid reallocating P x P buffers.
  Eigen::MatrixXd jtj, damped;
  Eigen::LLT<Eigen::MatrixXd> llt(x.size());
  BrWorkspace br_ws;
  Eigen::VectorXd x_new, r_new;
  auto objective = [&](double sse_v, const Eigen::VectorXd& theta) {
    return beta * sse_v + alpha * theta.squaredNorm();
  };

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const Eigen::VectorXd jtr = jac.transpose() * r;
    // Gradient of the objective actually being minimized, in loss units.
    const Eigen::VectorXd grad = bayesian ? Eigen::VectorXd(2.0 * beta * jtr + 2.0 * alpha * x)
                                          : Eigen::VectorXd(2.0 * scale * jtr);
    if (auto stop = guard.check(scale * sse, grad.norm())) {
      out.stop_reason = *stop;
      out.theta = x;
      return out;
    }
    gram_into(jac, jtj);
    Eigen::VectorXd b = jtr;
    if (bayesian) b = beta * jtr + alpha * x;
    const double diag_shift = bayesian ? alpha : 0.0;
    const double current = objective(sse, x);
    bool accepted = false;
    while (!accepted) {
      damped = jtj;
      if (bayesian) damped *= beta;
      damped.diagonal().array() += diag_shift + mu;
      llt.compute(damped);
      if (llt.info() == Eigen::Success) {
        x_new = x - llt.solve(b);
        f.residuals(x_new, r_new);
        ++out.evaluations;
        const double sse_new = r_new.squaredNorm();
        if (std::isfinite(sse_new) && objective(sse_new, x_new) < current) {
          accepted = true;
          mu = std::max(mu * cfg.mu_decrease, cfg.mu_min);
          break;
        }
      }
      mu *= cfg.mu_increase;
      if (mu > cfg.mu_max) {
        out.stop_reason = StopReason::MuOverflow;
        out.theta = x;
        return out;
      }
    }
    if (bayesian) {
      out.objective_before.push_back(current);
      out.objective_after.push_back(objective(r_new.squaredNorm(), x_new));
    }
    x = x_new;
    f.residuals_and_jacobian(x, r, jac);
    ++out.evaluations;
    sse = r.squaredNorm();
    if (bayesian) {
      // The Gauss-Newton matrix that produced the step stands in for the
      // Hessian; SSE and |theta|^2 are taken at the new point.
      const BayesianStats s = br_hyperparameter_update_from_gram(jtj, sse, r.size(), x, alpha, beta, br_ws);
      alpha = s.alpha;
      beta = s.beta;
      out.bayes_history.push_back(s);
      out.bayes = s;
    }
    out.mu_history.push_back(mu);
    out.loss_history.push_back(scale * sse);
    ++out.epochs_run;
  }
  const Eigen::VectorXd jtr = jac.transpose() * r;
  const Eigen::VectorXd grad = bayesian ? Eigen::VectorXd(2.0 * beta * jtr + 2.0 * alpha * x)
                                        : Eigen::VectorXd(2.0 * scale * jtr);
  out.stop_reason = guard.check(scale * sse, grad.norm()).value_or(StopReason::MaxEpochs);
  out.theta = x;
  return out;
}

}  // namespace detail

/// Runs one of the first-order or quasi-Newton trainers on any objective.
template <DifferentiableObjective F>
OptimizationResult minimize(const F& f, const Eigen::VectorXd& x0, const TrainerConfig& cfg) {
  if (cfg.max_epochs < 1) throw InputError("max_epochs must be >= 1");
  if (!x0.allFinite()) throw InputError("initial parameters are not finite");
  switch (cfg.algorithm) {
    case Algorithm::BFGS: return detail::run_bfgs(f, x0, cfg);
    case Algorithm::RPROP: return detail::run_rprop(f, x0, cfg);
    case Algorithm::SCG: return detail::run_scaled_conjugate_gradient(f, x0, cfg);
    case Algorithm::CGB: return detail::run_conjugate_gradient(f, x0, cfg, detail::CgVariant::PowellBeale);
    case Algorithm::CGF: return detail::run_conjugate_gradient(f, x0, cfg, detail::CgVariant::FletcherReeves);
    case Algorithm::CGP: return detail::run_conjugate_gradient(f, x0, cfg, detail::CgVariant::PolakRibiere);
    case Algorithm::OSS: return detail::run_one_step_secant(f, x0, cfg);
    case Algorithm::GDX: return detail::run_gdx(f, x0, cfg);
    case Algorithm::LM:
    case Algorithm::BR:
      if constexpr (LeastSquaresObjective<F>) {
        return detail::run_levenberg_marquardt(f, x0, cfg, cfg.algorithm == Algorithm::BR);
      } else {
        throw InputError(std::string(algorithm_name(cfg.algorithm)) +
                         " needs a least-squares objective with a Jacobian");
      }
  }
  throw InputError("unknown algorithm");
}

struct TrainReport {
  MlpParams final_params;
  int epochs_run = 0;
  std::vector<double> loss_history;
  StopReason stop_reason = StopReason::MaxEpochs;
  std::vector<double> mu_history;
  std::optional<BayesianStats> bayes;
  Algorithm algorithm = Algorithm::LM;
};

/// Trains the network from `p0` on standardized inputs and one-hot targets.
inline TrainReport train(const MlpParams& p0, const TrainingSet& data, const TrainerConfig& cfg) {
  if (data.inputs.cols() != p0.n_in() || data.targets.cols() != p0.n_out()) {
    throw InputError("training set shape does not match the network");
  }
  if (!p0.finite()) throw InputError("initial parameters are not finite");
  const MlpObjective objective(data, p0.n_hidden());
  OptimizationResult res = minimize(objective, p0.flatten(), cfg);
  TrainReport report;
  report.final_params = objective.params(res.theta);
  report.epochs_run = res.epochs_run;
  report.loss_history = std::move(res.loss_history);
  report.stop_reason = res.stop_reason;
  report.mu_history = std::move(res.mu_history);
  report.bayes = res.bayes;
  report.algorithm = cfg.algorithm;
  return report;
}

}  // namespace leafscan
