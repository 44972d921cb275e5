#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "bregopt/gram.hpp"
#include "bregopt/kernel.hpp"

namespace bregopt {

enum class PenaltyKind { none, nonneg_indicator };
enum class StepMode { fixed, dynamic };
enum class KernelKind { universal, gram };

/// A factored low-rank problem: smooth part f with its gradient, a simple
/// penalty g, the kernel geometry, and the relative-smoothness constant L
/// (f(X) <= f(Y) + <grad f(Y), X-Y> + L D_h(X,Y)).
struct ProblemSpec {
  std::function<double(const Matrix&)> objective;
  std::function<Matrix(const Matrix&)> gradient;
  PenaltyKind penalty = PenaltyKind::none;
  KernelParams kernel;
  double rel_lipschitz = 1.0;
  int rows = 0;
  int cols = 0;

  void validate() const;
};

struct SolverConfig {
  StepMode step_mode = StepMode::dynamic;
  KernelKind kernel_kind = KernelKind::universal;
  double lambda0 = 0.0;     // <= 0 selects the default 1/L
  double lambda_max = 0.0;  // <= 0 selects the default 1e4/L
  double tol = 1e-6;        // stationarity tolerance
  int max_iters = 10000;
  std::uint64_t seed = 0;
};

struct TraceRow {
  int iter = 0;
  double objective = 0.0;
  double step_size = 0.0;
  double elapsed_s = 0.0;
  double residual = 0.0;
  int halvings = 0;
};

struct RunTrace {
  std::vector<TraceRow> rows;
};

enum class Termination { tol_reached, max_iters, inner_failure };

struct SolveResult {
  Matrix x;
  RunTrace trace;
  Termination termination = Termination::max_iters;
};

/// Called after each accepted iterate; return false to stop the run early
/// (the result then reports Termination::max_iters).
using IterObserver = std::function<bool(int iter, const Matrix& x)>;

/// The step acceptance test of the dynamic scheme:
/// f(Xp) <= f(X) + <grad f(X), Xp - X> + D_h(Xp, X) / lambda, with a
/// 1e-12 * max(1, |f(X)|) slack absorbing roundoff.
bool sufficient_decrease_holds(const ProblemSpec& spec, const Matrix& X,
                               const Matrix& Xp, double lambda);

/// One Bregman proximal step T_lambda(X). Dispatches on the kernel: the
/// universal map when beta == 0 (projected when the penalty is the
/// nonnegativity indicator), the Gram map when beta > 0 (no penalty allowed).
Matrix bregman_step(const ProblemSpec& spec, const Matrix& X, double lambda,
                    GramMapWorkspace& ws);

/// Scaled fixed-point gap ||X - T_lambda(X)|| / (lambda * max(1, ||X||));
/// zero exactly at fixed points of the iteration map.
double stationarity_residual(const ProblemSpec& spec, const Matrix& X,
                             double lambda);

/// Bregman proximal gradient with dynamic (halving/doubling) or fixed step
/// sizes. Accepted steps always satisfy the sufficient decrease condition;
/// in dynamic mode the accepted step sizes stay within [1/(2L), lambda_max].
/// The trace records, per accepted iterate, the objective, step size,
/// elapsed seconds, stationarity residual (measured at lambda0 for
/// comparability across step modes) and the halvings spent.
SolveResult dyn_nolips(const ProblemSpec& spec, const SolverConfig& cfg,
                       const Matrix& X0, GramMapWorkspace* ws = nullptr,
                       const IterObserver& observer = {});

/// Euclidean baseline: projected gradient with Armijo backtracking,
/// shrink factor 0.1 and acceptance slope 0.01. Shares the trace schema
/// (the halvings column counts backtracks).
SolveResult projected_gradient_armijo(const ProblemSpec& spec,
                                      const SolverConfig& cfg, const Matrix& X0,
                                      const IterObserver& observer = {});

}  // namespace bregopt
