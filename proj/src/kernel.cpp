#include "bregopt/kernel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace bregopt {

void KernelParams::validate() const {
  if (!std::isfinite(alpha) || alpha < 0.0)
    throw std::invalid_argument("KernelParams: alpha must be finite and >= 0");
  if (!std::isfinite(beta) || beta < 0.0)
    throw std::invalid_argument("KernelParams: beta must be finite and >= 0");
  if (!std::isfinite(sigma) || sigma <= 0.0)
    throw std::invalid_argument("KernelParams: sigma must be finite and > 0");
}

double solve_cubic_tau(double sigma, double c) {
  if (!std::isfinite(sigma) || !std::isfinite(c))
    throw std::invalid_argument("solve_cubic_tau: non-finite input");
  if (sigma <= 0.0)
    throw std::invalid_argument("solve_cubic_tau: sigma must be > 0");
  if (c < 0.0)
    throw std::invalid_argument("solve_cubic_tau: c must be >= 0");
  if (c == 0.0) return sigma;

  // Substitute w = z - sigma and solve g(w) = w^3 + 2 sigma w^2 + sigma^2 w - c = 0.
  // The positive-coefficient form evaluates without cancellation, so the root
  // is resolved to full precision even when z - sigma is tiny. g is increasing
  // and convex on [0, inf), g(0) = -c < 0 and g(cbrt(c)) >= 0, so Newton from
  // the upper bracket decreases monotonically onto the root; a bisection
  // fallback guards the bracket against roundoff.
  const auto g = [&](double w) {
    return ((w + 2.0 * sigma) * w + sigma * sigma) * w - c;
  };
  const auto dg = [&](double w) {
    return (3.0 * w + 4.0 * sigma) * w + sigma * sigma;
  };

  double lo = 0.0;
  double hi = std::cbrt(c);
  double w = hi;
  for (int it = 0; it < 200 && lo < hi; ++it) {
    const double gw = g(w);
    if (gw > 0.0) {
      hi = w;
    } else if (gw < 0.0) {
      lo = w;
    } else {
      break;
    }
    double next = w - gw / dg(w);
    if (!(next > lo && next < hi)) next = lo + 0.5 * (hi - lo);
    if (next == w) break;
    w = next;
  }
  return sigma + w;
}

double kernel_value(const KernelParams& p, const Matrix& X) {
  p.validate();
  const double s = X.squaredNorm();
  double v = 0.25 * p.alpha * s * s + 0.5 * p.sigma * s;
  if (p.beta != 0.0) v += 0.25 * p.beta * (X.transpose() * X).squaredNorm();
  return v;
}

Matrix kernel_gradient(const KernelParams& p, const Matrix& X) {
  p.validate();
  Matrix G = (p.alpha * X.squaredNorm() + p.sigma) * X;
  if (p.beta != 0.0) G.noalias() += p.beta * (X * (X.transpose() * X));
  return G;
}

double bregman_distance(const KernelParams& p, const Matrix& X, const Matrix& Y) {
  p.validate();
  if (X.rows() != Y.rows() || X.cols() != Y.cols())
    throw std::invalid_argument("bregman_distance: shape mismatch");

  // h splits into three convex pieces whose Bregman distances add up. Each
  // piece is nonnegative, so the quartic parts are clamped at zero and the
  // quadratic part is evaluated in difference form; the sum then stays
  // nonnegative and strictly positive for X != Y down to roundoff scale.
  const double a = X.squaredNorm();
  const double b = Y.squaredNorm();
  const double ip = (X.array() * Y.array()).sum();
  const double quart = 0.25 * a * a + 0.75 * b * b - b * ip;

  double total = 0.5 * p.sigma * (X - Y).squaredNorm() + p.alpha * std::max(quart, 0.0);
  if (p.beta != 0.0) {
    const Matrix XtX = X.transpose() * X;
    const Matrix YtY = Y.transpose() * Y;
    const Matrix XtY = X.transpose() * Y;
    const double gram = 0.25 * XtX.squaredNorm() + 0.75 * YtY.squaredNorm() -
                        (YtY.array() * XtY.array()).sum();
    total += p.beta * std::max(gram, 0.0);
  }
  return total;
}

Matrix universal_map(const KernelParams& p, const Matrix& X,
                     const Matrix& grad_f, double lambda, bool nonneg) {
  p.validate();
  if (p.beta != 0.0)
    throw std::invalid_argument("universal_map: requires beta == 0");
  if (!std::isfinite(lambda) || lambda <= 0.0)
    throw std::invalid_argument("universal_map: lambda must be finite and > 0");
  if (X.rows() != grad_f.rows() || X.cols() != grad_f.cols())
    throw std::invalid_argument("universal_map: shape mismatch");

  Matrix U = (p.alpha * X.squaredNorm() + p.sigma) * X - lambda * grad_f;
  if (nonneg) U = U.cwiseMax(0.0);
  const double z = solve_cubic_tau(p.sigma, p.alpha * U.squaredNorm());
  return U / z;
}

}  // namespace bregopt
