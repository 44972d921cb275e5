#pragma once

#include <Eigen/Core>

namespace bregopt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Parameters of a quartic distance kernel on n x r matrices,
///
///   h(X) = (alpha/4) ||X||^4 + (beta/4) ||X^T X||^2 + (sigma/2) ||X||^2
///
/// with Frobenius norms throughout. beta == 0 selects the universal kernel;
/// beta > 0 selects a Gram kernel (unconstrained problems only).
struct KernelParams {
  double alpha = 0.0;
  double beta = 0.0;
  double sigma = 1.0;

  bool is_universal() const { return beta == 0.0; }
  void validate() const;  // throws std::invalid_argument on bad values
};

/// Unique root z >= sigma of z^2 (z - sigma) = c, for sigma > 0, c >= 0.
/// The returned root satisfies |z^2 (z - sigma) - c| <= 1e-10 * max(1, c).
/// For c == 0 returns sigma (the limit of the positive branch).
double solve_cubic_tau(double sigma, double c);

/// h(X) as defined above.
double kernel_value(const KernelParams& p, const Matrix& X);

/// grad h(X) = X (alpha ||X||^2 I_r + beta X^T X + sigma I_r).
Matrix kernel_gradient(const KernelParams& p, const Matrix& X);

/// Bregman distance D_h(X, Y) = h(X) - h(Y) - <grad h(Y), X - Y>.
/// Nonnegative, and zero exactly when X == Y (h is sigma-strongly convex).
double bregman_distance(const KernelParams& p, const Matrix& X, const Matrix& Y);

/// Bregman iteration map of the universal kernel (requires beta == 0).
///
/// Forms U = grad h(X) - lambda * grad_f, projects U onto the nonnegative
/// orthant when `nonneg` is set, and inverts grad h in closed form via
/// solve_cubic_tau. Without the projection the output T satisfies
/// grad h(T) = U up to 1e-8 relative accuracy.
Matrix universal_map(const KernelParams& p, const Matrix& X,
                     const Matrix& grad_f, double lambda, bool nonneg);

}  // namespace bregopt
