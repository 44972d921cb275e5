#pragma once

#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bregopt/kernel.hpp"

namespace bregopt {

/// Thrown when an iterative routine exhausts its iteration budget.
struct ConvergenceError : std::runtime_error {
  ConvergenceError(const std::string& what, double res)
      : std::runtime_error(what), residual(res) {}
  double residual;
};

/// The r-dimensional quartic subproblem at the heart of the Gram map:
/// minimize phi(x) = (alpha/4)||x||^4 + (beta/4) sum x_i^4
///                 + (sigma/2)||x||^2 - sum eta_i x_i
/// with eta_i >= 0 (square roots of the eigenvalues of V^T V).
struct GramSubproblem {
  Vector eta;
  KernelParams params;
};

/// Mutable per-solver state for the Gram map: warm-started inner solution
/// plus tolerances and iteration diagnostics. Confine one workspace to one
/// solver run; distinct runs with distinct workspaces may proceed in parallel.
struct GramMapWorkspace {
  std::optional<Vector> warm_mu;
  double inner_tol = 1e-6;
  int inner_max_iters = 500;

  // Diagnostics: inner iterations spent by each solve, in call order, and
  // the phi values visited by the most recent solve (initial point first).
  std::vector<int> inner_iter_history;
  std::vector<double> last_phi_trace;

  void reset() {
    warm_mu.reset();
    inner_iter_history.clear();
    last_phi_trace.clear();
  }
};

/// Eigendecomposition of a small symmetric PSD matrix by cyclic Jacobi
/// rotations. Returns (P, evals) with S = P^T diag(evals) P, P orthogonal
/// (rows are eigenvectors) and eigenvalues clamped at zero.
/// Throws std::invalid_argument if S is non-symmetric beyond tolerance.
std::pair<Matrix, Vector> eig_sym_small(const Matrix& S);

/// Solves the quartic subproblem by the universal-kernel scheme with
/// parameters (alpha + 3 beta, sigma), warm-started from ws.warm_mu.
/// Stops when ||grad phi(mu)|| / ||eta|| < ws.inner_tol (mu = 0 when eta = 0).
/// Throws ConvergenceError carrying the last residual if the iteration cap
/// is exceeded. On success stores mu in ws.warm_mu and appends the iteration
/// count to ws.inner_iter_history.
Vector solve_inner_subproblem(const GramSubproblem& sub, GramMapWorkspace& ws);

/// Bregman iteration map of the Gram kernel (unconstrained problems only):
/// V = grad h_g(X) - lambda * grad_f, eigendecompose V^T V, solve the
/// r-dimensional subproblem for mu, and assemble
///   T = V [alpha Tr(Z) I + beta Z + sigma I]^{-1},  Z = P^T diag(mu_i^2) P.
/// The output satisfies ||grad h_g(T) - V|| <= 1e-6 * max(1, ||V||).
/// Cost is O(n r^2 + r^3) on top of the supplied gradient.
Matrix gram_iteration_map(const KernelParams& p, const Matrix& X,
                          const Matrix& grad_f, double lambda,
                          GramMapWorkspace& ws);

}  // namespace bregopt
