#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "bregopt/kernel.hpp"
#include "bregopt/rng.hpp"
#include "oracles.hpp"

using namespace bregopt;

TEST_CASE("solve_cubic_tau recovers exact roots") {
  CHECK(solve_cubic_tau(1.0, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(solve_cubic_tau(1.0, 4.0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(solve_cubic_tau(2.0, 9.0) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("solve_cubic_tau matches the bisection oracle") {
  // Positive root of z^3 - 1.5 z^2 - 7.3 = 0, frozen from the oracle.
  const double z = solve_cubic_tau(1.5, 7.3);
  CHECK(z == doctest::Approx(2.5890420539526255).epsilon(1e-13));
  CHECK(z == doctest::Approx(oracles::bisect_cubic(1.5, 7.3)).epsilon(1e-10));
}

TEST_CASE("solve_cubic_tau residual property on random inputs") {
  Rng rng(7);
  for (int k = 0; k < 10000; ++k) {
    const double sigma = rng.uniform(1e-6, 1e3);
    const double c = rng.uniform(0.0, 1e9);
    const double z = solve_cubic_tau(sigma, c);
    REQUIRE(z >= sigma);
    REQUIRE(std::abs(z * z * (z - sigma) - c) <= 1e-10 * std::max(1.0, c));
  }
}

TEST_CASE("solve_cubic_tau rejects bad input") {
  CHECK_THROWS_AS(solve_cubic_tau(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(solve_cubic_tau(-1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(solve_cubic_tau(1.0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(solve_cubic_tau(std::nan(""), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(solve_cubic_tau(1.0, std::numeric_limits<double>::infinity()),
                  std::invalid_argument);
}

TEST_CASE("kernel_value on hand-checked inputs") {
  Rng rng(11);
  const Matrix X = oracles::random_matrix(rng, 5, 3);

  KernelParams quad{0.0, 0.0, 2.0};
  CHECK(kernel_value(quad, X) == doctest::Approx(X.squaredNorm()).epsilon(1e-14));

  Matrix one(1, 1);
  one(0, 0) = 1.0;
  CHECK(kernel_value({4.0, 0.0, 2.0}, one) == doctest::Approx(2.0));

  Matrix ones(2, 1);
  ones << 1.0, 1.0;
  CHECK(kernel_value({4.0, 4.0, 2.0}, ones) == doctest::Approx(10.0));
}

TEST_CASE("kernel_gradient closed forms") {
  KernelParams p{1.0, 0.0, 1.0};
  const Matrix Z = Matrix::Zero(3, 2);
  CHECK(kernel_gradient(p, Z).norm() == 0.0);

  Matrix ones(2, 1);
  ones << 1.0, 1.0;
  CHECK((kernel_gradient(p, ones) - 3.0 * ones).norm() < 1e-14);
}

TEST_CASE("kernel_gradient matches finite differences") {
  Rng rng(23);
  for (int k = 0; k < 100; ++k) {
    const int n = 2 + static_cast<int>(rng.uniform() * 48);
    const int r = 1 + static_cast<int>(rng.uniform() * std::min(n, 10));
    KernelParams p{rng.uniform(0.0, 3.0), rng.uniform(0.0, 3.0),
                   rng.uniform(0.1, 3.0)};
    const Matrix X = oracles::random_matrix(rng, n, r);
    const Matrix G = kernel_gradient(p, X);
    const Matrix FD = oracles::fd_gradient(
        [&](const Matrix& Y) { return kernel_value(p, Y); }, X, 1e-5);
    REQUIRE((G - FD).norm() <= 1e-5 * std::max(1.0, G.norm()));
  }
}

TEST_CASE("bregman_distance separation and special cases") {
  Rng rng(31);
  const Matrix X = oracles::random_matrix(rng, 4, 2);
  const Matrix Y = oracles::random_matrix(rng, 4, 2);
  KernelParams p{2.0, 1.0, 1.5};

  CHECK(bregman_distance(p, X, X) == 0.0);

  KernelParams quad{0.0, 0.0, 2.0};
  CHECK(bregman_distance(quad, X, Y) ==
        doctest::Approx((X - Y).squaredNorm()).epsilon(1e-13));

  Matrix bad(3, 2);
  CHECK_THROWS_AS(bregman_distance(p, X, bad), std::invalid_argument);
}

TEST_CASE("bregman_distance dominates the strong-convexity bound") {
  Rng rng(37);
  for (int k = 0; k < 200; ++k) {
    KernelParams p{rng.uniform(0.0, 4.0), rng.uniform(0.0, 4.0),
                   rng.uniform(0.1, 4.0)};
    const Matrix X = oracles::random_matrix(rng, 6, 3, -2.0, 2.0);
    const Matrix Y = oracles::random_matrix(rng, 6, 3, -2.0, 2.0);
    const double d = bregman_distance(p, X, Y);
    REQUIRE(d >= 0.0);
    REQUIRE(d >= 0.5 * p.sigma * (X - Y).squaredNorm() - 1e-12);
    if ((X - Y).norm() > 1e-12) REQUIRE(d > 0.0);
  }
}

TEST_CASE("universal_map fixed point at stationary input") {
  Rng rng(41);
  KernelParams p{3.0, 0.0, 0.7};
  const Matrix X = oracles::random_matrix(rng, 5, 2);
  const Matrix T = universal_map(p, X, Matrix::Zero(5, 2), 2.0, false);
  CHECK((T - X).norm() <= 1e-12 * std::max(1.0, X.norm()));
}

TEST_CASE("universal_map scalar instance against the cubic oracle") {
  // alpha = sigma = 1, X = [1], grad_f = [-1], lambda = 1 gives U = [3];
  // the root of z^2 (z - 1) = 9 is z = 2.4723678633273989 (oracle), so
  // T = 3 / z = 1.2134116627622296.
  KernelParams p{1.0, 0.0, 1.0};
  Matrix X(1, 1), g(1, 1);
  X(0, 0) = 1.0;
  g(0, 0) = -1.0;
  const Matrix T = universal_map(p, X, g, 1.0, true);
  CHECK(T(0, 0) == doctest::Approx(1.2134116627622296).epsilon(1e-13));
  CHECK(T(0, 0) ==
        doctest::Approx(3.0 / oracles::bisect_cubic(1.0, 9.0)).epsilon(1e-10));
}

TEST_CASE("universal_map with fully negative pre-image returns zero") {
  KernelParams p{1.0, 0.0, 1.0};
  const Matrix X = Matrix::Constant(3, 2, -1.0);
  const Matrix T = universal_map(p, X, Matrix::Zero(3, 2), 1.0, true);
  CHECK(T.norm() == 0.0);
}

TEST_CASE("universal_map inverts the kernel gradient") {
  Rng rng(43);
  for (int k = 0; k < 200; ++k) {
    const int n = 2 + static_cast<int>(rng.uniform() * 30);
    const int r = 1 + static_cast<int>(rng.uniform() * std::min(n, 6));
    KernelParams p{rng.uniform(0.01, 10.0), 0.0, rng.uniform(0.01, 10.0)};
    const Matrix V = oracles::random_matrix(rng, n, r, -5.0, 5.0);
    // X = 0 and grad_f = -V / lambda make the pre-image exactly V.
    const Matrix T = universal_map(p, Matrix::Zero(n, r), -V, 1.0, false);
    const double res = (kernel_gradient(p, T) - V).norm();
    REQUIRE(res <= 1e-8 * std::max(1.0, V.norm()));
  }
}

TEST_CASE("universal_map satisfies the step optimality condition") {
  Rng rng(47);
  for (int k = 0; k < 100; ++k) {
    const int n = 2 + static_cast<int>(rng.uniform() * 20);
    const int r = 1 + static_cast<int>(rng.uniform() * std::min(n, 5));
    KernelParams p{rng.uniform(0.1, 5.0), 0.0, rng.uniform(0.1, 5.0)};
    const Matrix X = oracles::random_matrix(rng, n, r, -2.0, 2.0);
    const Matrix g = oracles::random_matrix(rng, n, r, -2.0, 2.0);
    const double lambda = rng.uniform(0.05, 5.0);
    const Matrix T = universal_map(p, X, g, lambda, false);
    const Matrix lhs = kernel_gradient(p, T) + lambda * g - kernel_gradient(p, X);
    REQUIRE(lhs.norm() <= 1e-8 * std::max(1.0, kernel_gradient(p, X).norm()));
  }
}

TEST_CASE("universal_map rejects bad arguments") {
  KernelParams p{1.0, 0.0, 1.0};
  const Matrix X = Matrix::Zero(2, 2);
  CHECK_THROWS_AS(universal_map(p, X, X, 0.0, false), std::invalid_argument);
  CHECK_THROWS_AS(universal_map(p, X, X, -1.0, false), std::invalid_argument);
  KernelParams gram{1.0, 1.0, 1.0};
  CHECK_THROWS_AS(universal_map(gram, X, X, 1.0, false), std::invalid_argument);
}
