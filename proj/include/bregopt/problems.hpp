#pragma once

#include <Eigen/SparseCore>
#include <cstdint>
#include <utility>
#include <vector>

#include "bregopt/kernel.hpp"
#include "bregopt/solver.hpp"

namespace bregopt {

/// Symmetric sparse nonnegative matrix; off-diagonal entries are stored in
/// both triangles so products and norms need no special casing.
class SparseSymmetric {
 public:
  SparseSymmetric() = default;

  /// Builds from coordinate triplets (0-based). Entries may name either or
  /// both orientations of a pair; the missing mirror is filled in, mirror
  /// values must agree to 1e-12 relative, and duplicate coordinates are
  /// rejected. Values must be finite and >= 0.
  static SparseSymmetric from_triplets(
      int n, const std::vector<Eigen::Triplet<double>>& entries);

  int dim() const { return static_cast<int>(mat_.rows()); }
  std::int64_t nnz() const { return mat_.nonZeros(); }
  double frobenius_norm() const { return mat_.norm(); }
  double value_sum() const;
  Matrix multiply(const Matrix& X) const { return mat_ * X; }
  Matrix dense() const { return Matrix(mat_); }
  const Eigen::SparseMatrix<double>& matrix() const { return mat_; }

 private:
  Eigen::SparseMatrix<double> mat_;
};

// ---------------------------------------------------------------------------
// Symmetric nonnegative matrix factorization:
//   minimize (1/2) ||M - X X^T||_F^2  subject to  X >= 0.
// ---------------------------------------------------------------------------

struct SymNmfProblem {
  SparseSymmetric M;
  int rank = 1;
  double norm_m = 0.0;     // ||M||_F, cached
  double norm_m_sq = 0.0;  // ||M||_F^2, cached
  double mean_entry = 0.0;  // mean of stored entries (initialization scale)

  static SymNmfProblem create(SparseSymmetric m, int rank);
};

/// (1/2)(||M||^2 - 2 <MX, X> + ||X^T X||^2), clamped at zero; O(p r + n r^2).
double symnmf_objective(const SymNmfProblem& prob, const Matrix& X);

/// 2 (X (X^T X) - M X).
Matrix symnmf_gradient(const SymNmfProblem& prob, const Matrix& X);

/// alpha = 6, beta = 0, sigma = 2 ||M||_F; f is then 1-smooth relative to
/// the kernel.
KernelParams symnmf_kernel_params(const SymNmfProblem& prob);

/// Entries i.i.d. uniform(0,1) scaled by sqrt(mean stored entry / rank).
Matrix symnmf_initial_factor(const SymNmfProblem& prob, std::uint64_t seed);

/// ProblemSpec wiring f, grad f, the nonnegativity penalty and the kernel
/// above. The problem must outlive the returned spec.
ProblemSpec make_symnmf_spec(const SymNmfProblem& prob);

// ---------------------------------------------------------------------------
// Euclidean distance matrix completion:
//   minimize (1/2) sum_{(i,j) in Omega} (||X_i - X_j||^2 - d_ij)^2.
// ---------------------------------------------------------------------------

struct EdmcProblem {
  int n = 0;
  int r = 0;
  std::vector<std::pair<int, int>> omega;  // unordered pairs, stored i < j
  std::vector<double> d;                   // observed squared distances
  int max_degree = 0;
  double mean_d = 0.0;

  /// Validates indices, rejects duplicates and self-pairs, requires d >= 0.
  static EdmcProblem create(int n, int r,
                            std::vector<std::pair<int, int>> omega,
                            std::vector<double> d);
};

double edmc_objective(const EdmcProblem& prob, const Matrix& X);

/// Row i accumulates 2 (||X_i - X_j||^2 - d_ij)(X_i - X_j) over incident
/// pairs, with the opposite sign for the other endpoint; O(|Omega| r).
Matrix edmc_gradient(const EdmcProblem& prob, const Matrix& X);

/// L_EDM = 9 max-degree of Omega; alpha = 6 L_EDM, beta = use_gram ? 6 L_EDM : 0,
/// sigma = 2 ||P_Omega(D)||_F (each pair counted twice, clamped at 1e-8).
KernelParams edmc_kernel_params(const EdmcProblem& prob, bool use_gram);

/// Entries i.i.d. Gaussian scaled by sqrt(mean observed d) / sqrt(2 r).
Matrix edmc_initial_factor(const EdmcProblem& prob, std::uint64_t seed);

ProblemSpec make_edmc_spec(const EdmcProblem& prob, bool use_gram);

/// kappa(Y)_{ij} = Y_ii + Y_jj - 2 Y_ij; maps a Gram matrix to the squared
/// distance matrix of its factors. The diagonal of the result is zero.
Matrix kappa(const Matrix& Y);

/// || Delta(X) - Delta(truth) ||_F / || Delta(truth) ||_F over the full
/// squared-distance matrices; invariant to rigid motions of either argument.
double normalized_rmse(const Matrix& truth, const Matrix& X);

}  // namespace bregopt
