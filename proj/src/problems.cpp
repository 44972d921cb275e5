#include "bregopt/problems.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "bregopt/rng.hpp"

namespace bregopt {

SparseSymmetric SparseSymmetric::from_triplets(
    int n, const std::vector<Eigen::Triplet<double>>& entries) {
  if (n < 1) throw std::invalid_argument("SparseSymmetric: n must be >= 1");

  struct Slot {
    double value = 0.0;
    bool lower_seen = false;  // (i, j) with i >= j
    bool upper_seen = false;
  };
  std::map<std::pair<int, int>, Slot> slots;  // keyed by (min, max)

  for (const auto& t : entries) {
    const int i = t.row(), j = t.col();
    const double v = t.value();
    if (i < 0 || i >= n || j < 0 || j >= n)
      throw std::invalid_argument("SparseSymmetric: index out of range");
    if (!std::isfinite(v))
      throw std::invalid_argument("SparseSymmetric: non-finite value");
    if (v < 0.0)
      throw std::invalid_argument("SparseSymmetric: negative value");
    auto& slot = slots[{std::min(i, j), std::max(i, j)}];
    const bool lower = i >= j;
    bool& seen = lower ? slot.lower_seen : slot.upper_seen;
    if (seen) throw std::invalid_argument("SparseSymmetric: duplicate entry");
    if (slot.lower_seen || slot.upper_seen) {
      if (std::abs(v - slot.value) > 1e-12 * std::max(1.0, std::abs(slot.value)))
        throw std::invalid_argument("SparseSymmetric: asymmetric pair");
      slot.value = 0.5 * (slot.value + v);
    } else {
      slot.value = v;
    }
    seen = true;
  }

  std::vector<Eigen::Triplet<double>> full;
  full.reserve(2 * slots.size());
  for (const auto& [key, slot] : slots) {
    if (slot.value == 0.0) continue;
    full.emplace_back(key.first, key.second, slot.value);
    if (key.first != key.second)
      full.emplace_back(key.second, key.first, slot.value);
  }
  SparseSymmetric out;
  out.mat_.resize(n, n);
  out.mat_.setFromTriplets(full.begin(), full.end());
  out.mat_.makeCompressed();
  return out;
}

double SparseSymmetric::value_sum() const {
  double acc = 0.0;
  for (int k = 0; k < mat_.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(mat_, k); it; ++it)
      acc += it.value();
  return acc;
}

// ---------------------------------------------------------------------------
// SymNMF
// ---------------------------------------------------------------------------

SymNmfProblem SymNmfProblem::create(SparseSymmetric m, int rank) {
  if (rank < 1 || rank > m.dim())
    throw std::invalid_argument("SymNmfProblem: need 1 <= rank <= n");
  SymNmfProblem prob;
  prob.rank = rank;
  prob.norm_m = m.frobenius_norm();
  prob.norm_m_sq = prob.norm_m * prob.norm_m;
  prob.mean_entry = m.nnz() > 0 ? m.value_sum() / static_cast<double>(m.nnz()) : 0.0;
  prob.M = std::move(m);
  return prob;
}

namespace {
void check_shape(int n, int r, const Matrix& X, const char* who) {
  if (X.rows() != n || X.cols() != r)
    throw std::invalid_argument(std::string(who) + ": shape mismatch");
}
}  // namespace

double symnmf_objective(const SymNmfProblem& prob, const Matrix& X) {
  check_shape(prob.M.dim(), prob.rank, X, "symnmf_objective");
  const Matrix MX = prob.M.multiply(X);
  const double cross = (MX.array() * X.array()).sum();
  const double gram = (X.transpose() * X).squaredNorm();
  return std::max(0.5 * (prob.norm_m_sq - 2.0 * cross + gram), 0.0);
}

Matrix symnmf_gradient(const SymNmfProblem& prob, const Matrix& X) {
  check_shape(prob.M.dim(), prob.rank, X, "symnmf_gradient");
  return 2.0 * (X * (X.transpose() * X) - prob.M.multiply(X));
}

KernelParams symnmf_kernel_params(const SymNmfProblem& prob) {
  return {6.0, 0.0, std::max(2.0 * prob.norm_m, 1e-8)};
}

Matrix symnmf_initial_factor(const SymNmfProblem& prob, std::uint64_t seed) {
  Rng rng(seed);
  const double scale =
      std::sqrt(std::max(prob.mean_entry, 0.0) / static_cast<double>(prob.rank));
  Matrix X(prob.M.dim(), prob.rank);
  for (int i = 0; i < X.rows(); ++i)
    for (int j = 0; j < X.cols(); ++j) X(i, j) = scale * rng.uniform();
  return X;
}

ProblemSpec make_symnmf_spec(const SymNmfProblem& prob) {
  ProblemSpec spec;
  spec.objective = [&prob](const Matrix& X) { return symnmf_objective(prob, X); };
  spec.gradient = [&prob](const Matrix& X) { return symnmf_gradient(prob, X); };
  spec.penalty = PenaltyKind::nonneg_indicator;
  spec.kernel = symnmf_kernel_params(prob);
  spec.rel_lipschitz = 1.0;
  spec.rows = prob.M.dim();
  spec.cols = prob.rank;
  return spec;
}

// ---------------------------------------------------------------------------
// EDMC
// ---------------------------------------------------------------------------

EdmcProblem EdmcProblem::create(int n, int r,
                                std::vector<std::pair<int, int>> omega,
                                std::vector<double> d) {
  if (n < 1 || r < 1 || r > n)
    throw std::invalid_argument("EdmcProblem: need 1 <= r <= n");
  if (omega.size() != d.size())
    throw std::invalid_argument("EdmcProblem: omega and d length mismatch");

  std::vector<int> degree(n, 0);
  for (auto& [i, j] : omega) {
    if (i == j) throw std::invalid_argument("EdmcProblem: self-pair in omega");
    if (i < 0 || i >= n || j < 0 || j >= n)
      throw std::invalid_argument("EdmcProblem: index out of range");
    if (i > j) std::swap(i, j);
  }
  double d_sum = 0.0;
  for (double v : d) {
    if (!std::isfinite(v) || v < 0.0)
      throw std::invalid_argument("EdmcProblem: distances must be finite and >= 0");
    d_sum += v;
  }
  {
    std::vector<std::pair<int, int>> sorted = omega;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw std::invalid_argument("EdmcProblem: duplicate pair in omega");
  }
  for (const auto& [i, j] : omega) {
    ++degree[i];
    ++degree[j];
  }

  EdmcProblem prob;
  prob.n = n;
  prob.r = r;
  prob.omega = std::move(omega);
  prob.d = std::move(d);
  prob.max_degree =
      prob.omega.empty() ? 0 : *std::max_element(degree.begin(), degree.end());
  prob.mean_d = prob.d.empty() ? 0.0 : d_sum / static_cast<double>(prob.d.size());
  return prob;
}

double edmc_objective(const EdmcProblem& prob, const Matrix& X) {
  check_shape(prob.n, prob.r, X, "edmc_objective");
  double acc = 0.0;
  for (std::size_t k = 0; k < prob.omega.size(); ++k) {
    const auto& [i, j] = prob.omega[k];
    const double gap = (X.row(i) - X.row(j)).squaredNorm() - prob.d[k];
    acc += 0.5 * gap * gap;
  }
  return acc;
}

Matrix edmc_gradient(const EdmcProblem& prob, const Matrix& X) {
  check_shape(prob.n, prob.r, X, "edmc_gradient");
  Matrix G = Matrix::Zero(prob.n, prob.r);
  for (std::size_t k = 0; k < prob.omega.size(); ++k) {
    const auto& [i, j] = prob.omega[k];
    const Eigen::RowVectorXd diff = X.row(i) - X.row(j);
    const double coef = 2.0 * (diff.squaredNorm() - prob.d[k]);
    G.row(i) += coef * diff;
    G.row(j) -= coef * diff;
  }
  return G;
}

KernelParams edmc_kernel_params(const EdmcProblem& prob, bool use_gram) {
  if (prob.omega.empty())
    throw std::invalid_argument("edmc_kernel_params: omega is empty");
  const double l_edm = 9.0 * static_cast<double>(prob.max_degree);
  double d_sq = 0.0;
  for (double v : prob.d) d_sq += v * v;
  // P_Omega(D) is a symmetric matrix, so its Frobenius norm counts each
  // unordered pair twice.
  const double sigma = std::max(2.0 * std::sqrt(2.0 * d_sq), 1e-8);
  return {6.0 * l_edm, use_gram ? 6.0 * l_edm : 0.0, sigma};
}

Matrix edmc_initial_factor(const EdmcProblem& prob, std::uint64_t seed) {
  Rng rng(seed);
  const double scale =
      std::sqrt(std::max(prob.mean_d, 0.0)) / std::sqrt(2.0 * prob.r);
  Matrix X(prob.n, prob.r);
  for (int i = 0; i < X.rows(); ++i)
    for (int j = 0; j < X.cols(); ++j) X(i, j) = scale * rng.normal();
  return X;
}

ProblemSpec make_edmc_spec(const EdmcProblem& prob, bool use_gram) {
  ProblemSpec spec;
  spec.objective = [&prob](const Matrix& X) { return edmc_objective(prob, X); };
  spec.gradient = [&prob](const Matrix& X) { return edmc_gradient(prob, X); };
  spec.penalty = PenaltyKind::none;
  spec.kernel = edmc_kernel_params(prob, use_gram);
  spec.rel_lipschitz = 1.0;
  spec.rows = prob.n;
  spec.cols = prob.r;
  return spec;
}

Matrix kappa(const Matrix& Y) {
  if (Y.rows() != Y.cols())
    throw std::invalid_argument("kappa: matrix must be square");
  const Vector diag = Y.diagonal();
  Matrix K = (-2.0) * Y;
  K.colwise() += diag;
  K.rowwise() += diag.transpose();
  K.diagonal().setZero();
  return K;
}

double normalized_rmse(const Matrix& truth, const Matrix& X) {
  if (truth.rows() != X.rows())
    throw std::invalid_argument("normalized_rmse: row counts differ");
  const Matrix delta_truth = kappa(truth * truth.transpose());
  const Matrix delta_x = kappa(X * X.transpose());
  const double denom = delta_truth.norm();
  if (denom == 0.0)
    throw std::invalid_argument("normalized_rmse: degenerate reference cloud");
  return (delta_x - delta_truth).norm() / denom;
}

}  // namespace bregopt
