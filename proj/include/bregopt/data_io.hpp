#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "bregopt/problems.hpp"
#include "bregopt/solver.hpp"

namespace bregopt {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Modality { text_tf, image_raw, generic };

struct DenseDataset {
  Matrix vectors;  // one sample per row
  Modality modality = Modality::generic;
};

struct PointCloud {
  Matrix points;  // n x r coordinates
  Vector t;       // generator parameters when applicable (empty otherwise)
};

/// Dense pairwise similarity matrix: cosine similarity of rows for text_tf
/// (0 when either row is zero), self-tuning Gaussian kernel otherwise with
/// local scale s_i = distance to the min(7, n-1)-th nearest neighbor.
/// Entries lie in [0, 1]; the result is symmetric with zero diagonal.
Matrix similarity_graph(const DenseDataset& data);

/// floor(log2 n) + 1, the default sparsification parameter.
int default_knn(int n);

/// Keeps entry (i, j) iff j is among the k largest similarities of row i or
/// i is among those of row j (symmetric union); zero entries are dropped.
SparseSymmetric knn_sparsify(const Matrix& W, int k);

/// Dg^{-1/2} A Dg^{-1/2} with Dg = diag(row sums); vertices with zero degree
/// get unit self-degree so the scaling stays defined.
SparseSymmetric normalize_adjacency(const SparseSymmetric& A);

/// Helix point at parameter t: (cos 3t, sin 3t, 2t).
Eigen::RowVector3d helix_point(double t);

/// n helix points with t_i ~ U[0, 2 pi) from the seeded stream.
PointCloud helix_generate(int n, std::uint64_t seed);

/// Includes each of the n(n-1)/2 unordered pairs independently with
/// probability `rate`, observing the exact squared distance. Resamples from
/// a fresh stream when some vertex ends up with no observed pair.
EdmcProblem sample_distances(const PointCloud& cloud, double rate,
                             std::uint64_t seed);

/// Matrix Market coordinate reader (real/integer, general or symmetric,
/// square). Symmetric files carry the lower triangle and are mirrored on
/// read; general files must contain exactly matching mirror entries.
SparseSymmetric read_matrix_market(const std::string& path);

/// Writes coordinate real symmetric format (lower triangle, 1-based,
/// 17 significant digits).
void write_matrix_market(const SparseSymmetric& m, const std::string& path);

/// Columns exactly: iter,objective,step_size,elapsed_s,residual,halvings.
/// UTF-8, LF line endings, 17 significant digits.
void write_trace_csv(const RunTrace& trace, const std::string& path);

/// Rectangular numeric CSV (no header). Throws IoError on ragged rows or
/// unparsable fields.
Matrix read_csv_matrix(const std::string& path);
void write_csv_matrix(const Matrix& m, const std::string& path);

}  // namespace bregopt
