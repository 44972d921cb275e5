#include "bregopt/data_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <vector>

#include "bregopt/rng.hpp"

namespace bregopt {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

double parse_double(const std::string& tok, const std::string& context) {
  double v = 0.0;
  const char* begin = tok.data();
  const char* end = begin + tok.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    throw IoError(context + ": cannot parse number '" + tok + "'");
  return v;
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string tok;
  std::istringstream ss(line);
  while (std::getline(ss, tok, delim)) out.push_back(tok);
  return out;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Matrix similarity_graph(const DenseDataset& data) {
  const int n = static_cast<int>(data.vectors.rows());
  if (n < 2) throw std::invalid_argument("similarity_graph: need n >= 2");
  if (!data.vectors.allFinite())
    throw std::invalid_argument("similarity_graph: non-finite features");

  Matrix W = Matrix::Zero(n, n);
  if (data.modality == Modality::text_tf) {
    if ((data.vectors.array() < 0.0).any())
      throw std::invalid_argument("similarity_graph: text_tf features must be >= 0");
    Vector norms = data.vectors.rowwise().norm();
    Matrix N = data.vectors;
    for (int i = 0; i < n; ++i)
      if (norms[i] > 0.0) N.row(i) /= norms[i];
    W = N * N.transpose();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        W(i, j) = (i == j || norms[i] == 0.0 || norms[j] == 0.0)
                      ? 0.0
                      : std::clamp(W(i, j), 0.0, 1.0);
    return W;
  }

  // Self-tuning Gaussian: s_i is the distance to the kth nearest neighbor.
  const int kth = std::min(7, n - 1);
  Matrix sq_dist(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j)
      sq_dist(i, j) = (data.vectors.row(i) - data.vectors.row(j)).squaredNorm();
  }
  Vector scale(n);
  std::vector<double> row(n - 1);
  for (int i = 0; i < n; ++i) {
    int m = 0;
    for (int j = 0; j < n; ++j)
      if (j != i) row[m++] = sq_dist(i, j);
    std::nth_element(row.begin(), row.begin() + (kth - 1), row.end());
    scale[i] = std::sqrt(row[kth - 1]);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double ss = scale[i] * scale[j];
      W(i, j) = ss > 0.0 ? std::exp(-sq_dist(i, j) / ss)
                         : (sq_dist(i, j) == 0.0 ? 1.0 : 0.0);
    }
  }
  return W;
}

int default_knn(int n) {
  if (n < 2) throw std::invalid_argument("default_knn: need n >= 2");
  return static_cast<int>(std::floor(std::log2(static_cast<double>(n)))) + 1;
}

SparseSymmetric knn_sparsify(const Matrix& W, int k) {
  const int n = static_cast<int>(W.rows());
  if (W.cols() != n) throw std::invalid_argument("knn_sparsify: W must be square");
  if (k < 1) throw std::invalid_argument("knn_sparsify: k must be >= 1");
  if (k >= n) throw std::invalid_argument("knn_sparsify: k must be < n");
  const double scale = std::max(1.0, W.norm());
  if ((W - W.transpose()).norm() > 1e-12 * scale)
    throw std::invalid_argument("knn_sparsify: W must be symmetric");
  if (W.diagonal().cwiseAbs().maxCoeff() > 0.0)
    throw std::invalid_argument("knn_sparsify: W must have zero diagonal");

  // "Among the k largest" is read inclusively: everything tied with the
  // k-th largest similarity of a row is kept, so equal-weight neighbors are
  // never dropped by an arbitrary ordering.
  std::vector<std::pair<int, int>> kept;
  std::vector<double> row(n - 1);
  for (int i = 0; i < n; ++i) {
    int m = 0;
    for (int j = 0; j < n; ++j)
      if (j != i) row[m++] = W(i, j);
    std::nth_element(row.begin(), row.begin() + (k - 1), row.end(),
                     std::greater<double>());
    const double cutoff = row[k - 1];
    for (int j = 0; j < n; ++j) {
      if (j == i || W(i, j) <= 0.0 || W(i, j) < cutoff) continue;
      kept.emplace_back(std::min(i, j), std::max(i, j));
    }
  }
  std::sort(kept.begin(), kept.end());
  kept.erase(std::unique(kept.begin(), kept.end()), kept.end());

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(kept.size());
  for (const auto& [i, j] : kept) triplets.emplace_back(i, j, W(i, j));
  return SparseSymmetric::from_triplets(n, triplets);
}

SparseSymmetric normalize_adjacency(const SparseSymmetric& A) {
  const int n = A.dim();
  Vector deg = Vector::Zero(n);
  const auto& mat = A.matrix();
  for (int c = 0; c < mat.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(mat, c); it; ++it)
      deg[it.row()] += it.value();
  for (int i = 0; i < n; ++i)
    if (deg[i] <= 0.0) deg[i] = 1.0;

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(mat.nonZeros()));
  for (int c = 0; c < mat.outerSize(); ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(mat, c); it; ++it) {
      const int i = static_cast<int>(it.row());
      const int j = static_cast<int>(it.col());
      if (i > j) continue;
      triplets.emplace_back(i, j, it.value() / std::sqrt(deg[i] * deg[j]));
    }
  }
  return SparseSymmetric::from_triplets(n, triplets);
}

Eigen::RowVector3d helix_point(double t) {
  return {std::cos(3.0 * t), std::sin(3.0 * t), 2.0 * t};
}

PointCloud helix_generate(int n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("helix_generate: need n >= 2");
  Rng rng(seed);
  PointCloud cloud;
  cloud.points.resize(n, 3);
  cloud.t.resize(n);
  for (int i = 0; i < n; ++i) {
    const double t = rng.uniform(0.0, 2.0 * M_PI);
    cloud.t[i] = t;
    cloud.points.row(i) = helix_point(t);
  }
  return cloud;
}

EdmcProblem sample_distances(const PointCloud& cloud, double rate,
                             std::uint64_t seed) {
  if (!(rate > 0.0 && rate <= 1.0))
    throw std::invalid_argument("sample_distances: rate must be in (0, 1]");
  const int n = static_cast<int>(cloud.points.rows());
  const int r = static_cast<int>(cloud.points.cols());
  if (n < 2) throw std::invalid_argument("sample_distances: need n >= 2");

  for (int attempt = 0; attempt < 64; ++attempt) {
    Rng rng(seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(attempt));
    std::vector<std::pair<int, int>> omega;
    std::vector<double> d;
    std::vector<int> degree(n, 0);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (rng.uniform() >= rate) continue;
        omega.emplace_back(i, j);
        d.push_back((cloud.points.row(i) - cloud.points.row(j)).squaredNorm());
        ++degree[i];
        ++degree[j];
      }
    }
    if (std::all_of(degree.begin(), degree.end(), [](int g) { return g > 0; }))
      return EdmcProblem::create(n, r, std::move(omega), std::move(d));
  }
  throw std::runtime_error(
      "sample_distances: no draw covered every vertex; increase the rate");
}

SparseSymmetric read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("read_matrix_market: cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line))
    throw IoError("read_matrix_market: empty file '" + path + "'");
  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (lower(banner) != "%%matrixmarket" || lower(object) != "matrix" ||
      lower(format) != "coordinate")
    throw IoError("read_matrix_market: malformed header in '" + path + "'");
  field = lower(field);
  symmetry = lower(symmetry);
  if (field != "real" && field != "integer")
    throw IoError("read_matrix_market: unsupported field type '" + field + "'");
  if (symmetry != "general" && symmetry != "symmetric")
    throw IoError("read_matrix_market: unsupported symmetry '" + symmetry + "'");
  const bool symmetric = symmetry == "symmetric";

  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '%') break;
  }
  std::istringstream sizes(line);
  long rows = 0, cols = 0, nnz = 0;
  if (!(sizes >> rows >> cols >> nnz) || rows < 1 || cols < 1 || nnz < 0)
    throw IoError("read_matrix_market: malformed size line in '" + path + "'");
  if (rows != cols)
    throw IoError("read_matrix_market: matrix must be square in '" + path + "'");

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(nnz));
  long seen = 0;
  while (seen < nnz && std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    long i = 0, j = 0;
    double v = 0.0;
    if (!(row >> i >> j >> v))
      throw IoError("read_matrix_market: malformed entry in '" + path + "'");
    if (i < 1 || i > rows || j < 1 || j > cols)
      throw IoError("read_matrix_market: index out of range in '" + path + "'");
    if (!std::isfinite(v))
      throw IoError("read_matrix_market: non-finite value in '" + path + "'");
    if (v < 0.0)
      throw IoError("read_matrix_market: negative value in '" + path + "'");
    if (symmetric && i < j)
      throw IoError(
          "read_matrix_market: upper-triangle entry in symmetric file '" +
          path + "'");
    entries.emplace_back(static_cast<int>(i - 1), static_cast<int>(j - 1), v);
    ++seen;
  }
  if (seen != nnz)
    throw IoError("read_matrix_market: expected " + std::to_string(nnz) +
                  " entries, found " + std::to_string(seen) + " in '" + path + "'");

  try {
    return SparseSymmetric::from_triplets(static_cast<int>(rows), entries);
  } catch (const std::invalid_argument& e) {
    throw IoError("read_matrix_market: " + std::string(e.what()) + " in '" +
                  path + "'");
  }
}

void write_matrix_market(const SparseSymmetric& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_matrix_market: cannot open '" + path + "'");
  const auto& mat = m.matrix();
  long count = 0;
  for (int c = 0; c < mat.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(mat, c); it; ++it)
      if (it.row() >= it.col()) ++count;
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  out << m.dim() << " " << m.dim() << " " << count << "\n";
  for (int c = 0; c < mat.outerSize(); ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(mat, c); it; ++it) {
      if (it.row() < it.col()) continue;
      out << (it.row() + 1) << " " << (it.col() + 1) << " " << fmt17(it.value())
          << "\n";
    }
  }
  if (!out) throw IoError("write_matrix_market: write failed for '" + path + "'");
}

void write_trace_csv(const RunTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_trace_csv: cannot open '" + path + "'");
  out << "iter,objective,step_size,elapsed_s,residual,halvings\n";
  for (const auto& row : trace.rows) {
    out << row.iter << "," << fmt17(row.objective) << "," << fmt17(row.step_size)
        << "," << fmt17(row.elapsed_s) << "," << fmt17(row.residual) << ","
        << row.halvings << "\n";
  }
  if (!out) throw IoError("write_trace_csv: write failed for '" + path + "'");
}

Matrix read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("read_csv_matrix: cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto toks = split(line, ',');
    std::vector<double> row;
    row.reserve(toks.size());
    for (const auto& tok : toks) row.push_back(parse_double(tok, "read_csv_matrix"));
    if (!rows.empty() && row.size() != rows.front().size())
      throw IoError("read_csv_matrix: ragged rows in '" + path + "'");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("read_csv_matrix: no data in '" + path + "'");
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

void write_csv_matrix(const Matrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_csv_matrix: cannot open '" + path + "'");
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ",";
      out << fmt17(m(i, j));
    }
    out << "\n";
  }
  if (!out) throw IoError("write_csv_matrix: write failed for '" + path + "'");
}

}  // namespace bregopt
