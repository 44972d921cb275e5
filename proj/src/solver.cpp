#include "bregopt/solver.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace bregopt {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Matrix step_with_grad(const ProblemSpec& spec, const Matrix& X,
                      const Matrix& grad_x, double lambda,
                      GramMapWorkspace& ws) {
  if (spec.kernel.beta == 0.0) {
    return universal_map(spec.kernel, X, grad_x, lambda,
                         spec.penalty == PenaltyKind::nonneg_indicator);
  }
  if (spec.penalty != PenaltyKind::none)
    throw std::invalid_argument(
        "bregman_step: the Gram kernel supports unconstrained problems only");
  return gram_iteration_map(spec.kernel, X, grad_x, lambda, ws);
}

bool decrease_ok(const ProblemSpec& spec, double f_x, const Matrix& grad_x,
                 const Matrix& X, const Matrix& Xp, double f_xp,
                 double lambda) {
  const double lin = (grad_x.array() * (Xp - X).array()).sum();
  const double dh = bregman_distance(spec.kernel, Xp, X);
  const double slack = 1e-12 * std::max(1.0, std::abs(f_x));
  return f_xp <= f_x + lin + dh / lambda + slack;
}

struct EffectiveSteps {
  double lambda0;
  double lambda_max;
};

EffectiveSteps resolve_steps(const ProblemSpec& spec, const SolverConfig& cfg) {
  const double L = spec.rel_lipschitz;
  EffectiveSteps s;
  s.lambda0 = cfg.lambda0 > 0.0 ? cfg.lambda0 : 1.0 / L;
  s.lambda_max = cfg.lambda_max > 0.0 ? cfg.lambda_max : 1e4 / L;
  if (!(s.lambda0 <= s.lambda_max))
    throw std::invalid_argument("SolverConfig: lambda0 must be <= lambda_max");
  if (!(cfg.tol > 0.0))
    throw std::invalid_argument("SolverConfig: tol must be > 0");
  if (cfg.max_iters < 1)
    throw std::invalid_argument("SolverConfig: max_iters must be >= 1");
  return s;
}

void check_start(const ProblemSpec& spec, const Matrix& X0) {
  if (X0.rows() != spec.rows || X0.cols() != spec.cols)
    throw std::invalid_argument("solver: X0 shape does not match the problem");
  if (spec.penalty == PenaltyKind::nonneg_indicator && X0.minCoeff() < 0.0)
    throw std::invalid_argument("solver: X0 is infeasible (negative entries)");
}

}  // namespace

void ProblemSpec::validate() const {
  if (!objective || !gradient)
    throw std::invalid_argument("ProblemSpec: objective and gradient required");
  kernel.validate();
  if (!(rel_lipschitz > 0.0) || !std::isfinite(rel_lipschitz))
    throw std::invalid_argument("ProblemSpec: rel_lipschitz must be > 0");
  if (rows < 1 || cols < 1 || cols > rows)
    throw std::invalid_argument("ProblemSpec: need 1 <= cols <= rows");
  if (penalty == PenaltyKind::nonneg_indicator && kernel.beta != 0.0)
    throw std::invalid_argument(
        "ProblemSpec: nonnegativity penalty requires the universal kernel");
}

bool sufficient_decrease_holds(const ProblemSpec& spec, const Matrix& X,
                               const Matrix& Xp, double lambda) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("sufficient_decrease_holds: lambda must be > 0");
  return decrease_ok(spec, spec.objective(X), spec.gradient(X), X, Xp,
                     spec.objective(Xp), lambda);
}

Matrix bregman_step(const ProblemSpec& spec, const Matrix& X, double lambda,
                    GramMapWorkspace& ws) {
  spec.validate();
  return step_with_grad(spec, X, spec.gradient(X), lambda, ws);
}

double stationarity_residual(const ProblemSpec& spec, const Matrix& X,
                             double lambda) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("stationarity_residual: lambda must be > 0");
  GramMapWorkspace ws;
  const Matrix T = step_with_grad(spec, X, spec.gradient(X), lambda, ws);
  return (X - T).norm() / (lambda * std::max(1.0, X.norm()));
}

SolveResult dyn_nolips(const ProblemSpec& spec, const SolverConfig& cfg,
                       const Matrix& X0, GramMapWorkspace* ws_in,
                       const IterObserver& observer) {
  spec.validate();
  const EffectiveSteps eff = resolve_steps(spec, cfg);
  check_start(spec, X0);
  const double L = spec.rel_lipschitz;
  const bool fixed = cfg.step_mode == StepMode::fixed;

  GramMapWorkspace local_ws;
  GramMapWorkspace& ws = ws_in ? *ws_in : local_ws;
  GramMapWorkspace residual_ws;  // separate warm-start stream for the probes
  residual_ws.inner_tol = ws.inner_tol;
  residual_ws.inner_max_iters = ws.inner_max_iters;

  const auto t0 = Clock::now();
  SolveResult out;
  Matrix X = X0;
  double f_x = spec.objective(X);
  if (!std::isfinite(f_x))
    throw std::invalid_argument("dyn_nolips: objective not finite at X0");
  Matrix grad_x = spec.gradient(X);

  const auto residual_at = [&](const Matrix& Xc, const Matrix& grad_c) {
    const Matrix T = step_with_grad(spec, Xc, grad_c, eff.lambda0, residual_ws);
    return (Xc - T).norm() / (eff.lambda0 * std::max(1.0, Xc.norm()));
  };

  double res = residual_at(X, grad_x);
  out.trace.rows.push_back(
      {0, f_x, fixed ? 1.0 / L : eff.lambda0, seconds_since(t0), res, 0});
  if (res < cfg.tol) {
    out.x = std::move(X);
    out.termination = Termination::tol_reached;
    return out;
  }

  double lambda = eff.lambda0;
  out.termination = Termination::max_iters;
  for (int k = 1; k <= cfg.max_iters; ++k) {
    int halvings = 0;
    Matrix Xp;
    double f_xp;
    if (fixed) {
      lambda = 1.0 / L;
      Xp = step_with_grad(spec, X, grad_x, lambda, ws);
      f_xp = spec.objective(Xp);
      if (!decrease_ok(spec, f_x, grad_x, X, Xp, f_xp, lambda)) {
        // At lambda = 1/L the decrease condition is implied by relative
        // smoothness; a violation means the supplied constants are wrong.
        out.x = std::move(X);
        out.termination = Termination::inner_failure;
        return out;
      }
    } else {
      for (;;) {
        Xp = step_with_grad(spec, X, grad_x, lambda, ws);
        f_xp = spec.objective(Xp);
        if (decrease_ok(spec, f_x, grad_x, X, Xp, f_xp, lambda)) break;
        lambda *= 0.5;
        ++halvings;
        if (lambda < 1e-16 / L) {
          out.x = std::move(X);
          out.termination = Termination::inner_failure;
          return out;
        }
      }
    }
    const double accepted_lambda = lambda;
    X = std::move(Xp);
    f_x = f_xp;
    grad_x = spec.gradient(X);
    if (!fixed) lambda = std::min(2.0 * lambda, eff.lambda_max);

    res = residual_at(X, grad_x);
    out.trace.rows.push_back(
        {k, f_x, accepted_lambda, seconds_since(t0), res, halvings});
    if (observer && !observer(k, X)) {
      out.x = std::move(X);
      return out;
    }
    if (res < cfg.tol) {
      out.x = std::move(X);
      out.termination = Termination::tol_reached;
      return out;
    }
  }
  out.x = std::move(X);
  return out;
}

SolveResult projected_gradient_armijo(const ProblemSpec& spec,
                                      const SolverConfig& cfg, const Matrix& X0,
                                      const IterObserver& observer) {
  spec.validate();
  const EffectiveSteps eff = resolve_steps(spec, cfg);
  check_start(spec, X0);
  const double L = spec.rel_lipschitz;
  const bool project = spec.penalty == PenaltyKind::nonneg_indicator;
  constexpr double kShrink = 0.1;
  constexpr double kSlope = 0.01;

  GramMapWorkspace residual_ws;
  const auto t0 = Clock::now();
  SolveResult out;
  Matrix X = X0;
  double f_x = spec.objective(X);
  if (!std::isfinite(f_x))
    throw std::invalid_argument("projected_gradient_armijo: objective not finite at X0");
  Matrix grad_x = spec.gradient(X);

  const auto residual_at = [&](const Matrix& Xc, const Matrix& grad_c) {
    const Matrix T = step_with_grad(spec, Xc, grad_c, eff.lambda0, residual_ws);
    return (Xc - T).norm() / (eff.lambda0 * std::max(1.0, Xc.norm()));
  };

  double res = residual_at(X, grad_x);
  out.trace.rows.push_back({0, f_x, eff.lambda0, seconds_since(t0), res, 0});
  if (res < cfg.tol) {
    out.x = std::move(X);
    out.termination = Termination::tol_reached;
    return out;
  }

  double step = eff.lambda0;
  out.termination = Termination::max_iters;
  for (int k = 1; k <= cfg.max_iters; ++k) {
    double trial = std::min(2.0 * step, eff.lambda_max);
    int backtracks = 0;
    Matrix Xp;
    double f_xp;
    for (;;) {
      Xp = X - trial * grad_x;
      if (project) Xp = Xp.cwiseMax(0.0);
      f_xp = spec.objective(Xp);
      const double lin = (grad_x.array() * (Xp - X).array()).sum();
      const double slack = 1e-12 * std::max(1.0, std::abs(f_x));
      if (f_xp <= f_x + kSlope * lin + slack) break;
      trial *= kShrink;
      ++backtracks;
      if (trial < 1e-20 / L) {
        out.x = std::move(X);
        out.termination = Termination::inner_failure;
        return out;
      }
    }
    X = std::move(Xp);
    f_x = f_xp;
    grad_x = spec.gradient(X);
    step = trial;

    res = residual_at(X, grad_x);
    out.trace.rows.push_back({k, f_x, trial, seconds_since(t0), res, backtracks});
    if (observer && !observer(k, X)) {
      out.x = std::move(X);
      return out;
    }
    if (res < cfg.tol) {
      out.x = std::move(X);
      out.termination = Termination::tol_reached;
      return out;
    }
  }
  out.x = std::move(X);
  return out;
}

}  // namespace bregopt
