#pragma once

// Reference implementations used only by the test suites. These are kept
// independent of the library code paths they check.

#include <cmath>
#include <functional>
#include <utility>

#include "bregopt/kernel.hpp"
#include "bregopt/rng.hpp"

namespace oracles {

using bregopt::Matrix;
using bregopt::Vector;

// Plain bisection for the root z >= sigma of z^2 (z - sigma) = c.
inline double bisect_cubic(double sigma, double c, double tol = 1e-12) {
  auto f = [&](double z) { return z * z * (z - sigma) - c; };
  double lo = sigma;
  double hi = sigma + std::cbrt(c) + 1.0;
  for (int it = 0; it < 400 && hi - lo > tol * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Central finite differences of a scalar function of a matrix.
inline Matrix fd_gradient(const std::function<double(const Matrix&)>& f,
                          const Matrix& X, double h) {
  Matrix G(X.rows(), X.cols());
  Matrix E = X;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      const double x = X(i, j);
      E(i, j) = x + h;
      const double fp = f(E);
      E(i, j) = x - h;
      const double fm = f(E);
      E(i, j) = x;
      G(i, j) = (fp - fm) / (2.0 * h);
    }
  }
  return G;
}

inline Matrix random_matrix(bregopt::Rng& rng, int n, int r, double lo = -1.0,
                            double hi = 1.0) {
  Matrix X(n, r);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < r; ++j) X(i, j) = rng.uniform(lo, hi);
  return X;
}

// High-precision projected-gradient minimizer with backtracking, used as the
// subproblem oracle on small instances. Runs until the gradient-mapping
// residual at a fixed probe step drops below grad_tol.
inline Matrix pg_minimize(const std::function<double(const Matrix&)>& f,
                          const std::function<Matrix(const Matrix&)>& grad,
                          Matrix x, bool nonneg, double grad_tol,
                          int max_iters) {
  if (nonneg) x = x.cwiseMax(0.0);
  double step = 1.0;
  double fx = f(x);
  for (int it = 0; it < max_iters; ++it) {
    const Matrix g = grad(x);
    const double probe = 1e-3;
    Matrix moved = x - probe * g;
    if (nonneg) moved = moved.cwiseMax(0.0);
    if ((x - moved).norm() / probe <= grad_tol) break;
    for (;;) {
      Matrix cand = x - step * g;
      if (nonneg) cand = cand.cwiseMax(0.0);
      const double fc = f(cand);
      const double lin = (g.array() * (cand - x).array()).sum();
      if (fc <= fx + 0.5 * lin || step < 1e-18) {
        x = std::move(cand);
        fx = fc;
        break;
      }
      step *= 0.5;
    }
    step *= 2.0;
  }
  return x;
}

}  // namespace oracles
