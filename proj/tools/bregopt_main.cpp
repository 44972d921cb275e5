// bregopt: Bregman proximal gradient solvers for low-rank factorization
// problems (symmetric NMF, Euclidean distance matrix completion), plus data
// generation utilities.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "bregopt/data_io.hpp"
#include "bregopt/problems.hpp"
#include "bregopt/solver.hpp"

namespace fs = std::filesystem;
using namespace bregopt;

namespace {

struct SolveOpts {
  std::string algo = "nolips";
  std::string step = "dynamic";
  double lambda_max = 0.0;  // 0 -> solver default 1e4/L
  double tol = 1e-6;
  int max_iters = 10000;
  int seeds = 1;
  std::int64_t seed = -1;  // >= 0 selects a single seed
  std::string out_dir = ".";
  std::string timing = "off";

  bool wall_timing() const { return timing == "wall"; }
};

void add_solver_flags(CLI::App* cmd, SolveOpts& o, bool with_algo = true) {
  if (with_algo)
    cmd->add_option("--algo", o.algo, "solver: nolips or pg")
        ->check(CLI::IsMember({"nolips", "pg"}));
  cmd->add_option("--step", o.step, "step-size rule for nolips")
      ->check(CLI::IsMember({"dynamic", "fixed"}));
  cmd->add_option("--lambda-max", o.lambda_max,
                  "step-size cap (0 = solver default)");
  cmd->add_option("--tol", o.tol, "stationarity tolerance");
  cmd->add_option("--max-iters", o.max_iters, "iteration cap");
  auto* seeds = cmd->add_option("--seeds", o.seeds, "run seeds 0..N-1")
                    ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "run a single seed")
      ->check(CLI::NonNegativeNumber)
      ->excludes(seeds);
  cmd->add_option("--out-dir", o.out_dir, "directory for trace CSV files");
  cmd->add_option("--timing", o.timing,
                  "elapsed_s column: wall clock or 0 (byte-reproducible)")
      ->check(CLI::IsMember({"wall", "off"}));
}

std::vector<std::uint64_t> seed_list(const SolveOpts& o) {
  if (o.seed >= 0) return {static_cast<std::uint64_t>(o.seed)};
  std::vector<std::uint64_t> v;
  for (int s = 0; s < o.seeds; ++s) v.push_back(static_cast<std::uint64_t>(s));
  return v;
}

SolverConfig make_config(const SolveOpts& o, KernelKind kind,
                         std::uint64_t seed) {
  SolverConfig cfg;
  cfg.step_mode = o.step == "fixed" ? StepMode::fixed : StepMode::dynamic;
  cfg.kernel_kind = kind;
  cfg.lambda_max = o.lambda_max;
  cfg.tol = o.tol;
  cfg.max_iters = o.max_iters;
  cfg.seed = seed;
  return cfg;
}

SolveResult run_algo(const SolveOpts& o, const ProblemSpec& spec,
                     const SolverConfig& cfg, const Matrix& X0) {
  if (o.algo == "pg") return projected_gradient_armijo(spec, cfg, X0);
  GramMapWorkspace ws;
  return dyn_nolips(spec, cfg, X0, &ws);
}

void write_trace(const RunTrace& trace, bool wall, const std::string& path) {
  if (wall) {
    write_trace_csv(trace, path);
    return;
  }
  RunTrace t = trace;
  for (auto& row : t.rows) row.elapsed_s = 0.0;
  write_trace_csv(t, path);
}

const char* termination_name(Termination t) {
  switch (t) {
    case Termination::tol_reached: return "tol_reached";
    case Termination::max_iters: return "max_iters";
    case Termination::inner_failure: return "inner_failure";
  }
  return "unknown";
}

struct RunStats {
  double obj_sum = 0.0;
  double obj_min = std::numeric_limits<double>::infinity();
  double iters_sum = 0.0;
  double time_sum = 0.0;
  int count = 0;
  bool any_failure = false;

  void add(const SolveResult& r) {
    const auto& last = r.trace.rows.back();
    obj_sum += last.objective;
    obj_min = std::min(obj_min, last.objective);
    iters_sum += last.iter;
    time_sum += last.elapsed_s;
    ++count;
    any_failure = any_failure || r.termination == Termination::inner_failure;
  }
};

// --------------------------------------------------------------------------
// symnmf
// --------------------------------------------------------------------------

struct SymnmfArgs {
  std::string input;
  int rank = 2;
  SolveOpts opts;
};

int run_symnmf(const SymnmfArgs& a) {
  const auto M = read_matrix_market(a.input);
  const auto prob = SymNmfProblem::create(M, a.rank);
  const auto spec = make_symnmf_spec(prob);
  fs::create_directories(a.opts.out_dir);

  RunStats stats;
  for (const auto seed : seed_list(a.opts)) {
    const auto cfg = make_config(a.opts, KernelKind::universal, seed);
    const Matrix X0 = symnmf_initial_factor(prob, seed);
    const auto result = run_algo(a.opts, spec, cfg, X0);
    const std::string path =
        (fs::path(a.opts.out_dir) /
         ("symnmf_trace_seed" + std::to_string(seed) + ".csv"))
            .string();
    write_trace(result.trace, a.opts.wall_timing(), path);
    const auto& last = result.trace.rows.back();
    std::printf(
        "seed=%llu objective=%.17g iters=%d elapsed_s=%.6g termination=%s\n",
        static_cast<unsigned long long>(seed), last.objective, last.iter,
        last.elapsed_s, termination_name(result.termination));
    stats.add(result);
  }
  std::printf(
      "summary runs=%d objective_mean=%.17g objective_min=%.17g "
      "iters_mean=%.6g elapsed_s_mean=%.6g\n",
      stats.count, stats.obj_sum / stats.count, stats.obj_min,
      stats.iters_sum / stats.count, stats.time_sum / stats.count);
  return stats.any_failure ? 3 : 0;
}

// --------------------------------------------------------------------------
// edmc
// --------------------------------------------------------------------------

struct EdmcArgs {
  std::string points;
  std::string problem;
  int rank = 0;  // 0 -> dimension of the point cloud
  double sample_rate = 0.1;
  std::int64_t sample_seed = 0;
  std::string kernel = "universal";
  SolveOpts opts;
};

EdmcProblem problem_from_matrix(const SparseSymmetric& D, int rank) {
  const auto& mat = D.matrix();
  std::vector<std::pair<int, int>> omega;
  std::vector<double> d;
  for (int c = 0; c < mat.outerSize(); ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(mat, c); it; ++it) {
      if (it.row() <= it.col()) continue;  // strict lower triangle
      omega.emplace_back(static_cast<int>(it.col()),
                         static_cast<int>(it.row()));
      d.push_back(it.value());
    }
  }
  return EdmcProblem::create(D.dim(), rank, std::move(omega), std::move(d));
}

int run_edmc(const EdmcArgs& a) {
  Matrix truth;
  bool have_truth = false;
  EdmcProblem prob;
  if (!a.points.empty()) {
    PointCloud cloud;
    cloud.points = read_csv_matrix(a.points);
    truth = cloud.points;
    have_truth = true;
    prob = sample_distances(cloud, a.sample_rate,
                            static_cast<std::uint64_t>(a.sample_seed));
    if (a.rank > 0) prob.r = a.rank;
  } else {
    if (a.rank < 1)
      throw std::invalid_argument("edmc: --rank is required with --problem");
    prob = problem_from_matrix(read_matrix_market(a.problem), a.rank);
  }
  const bool use_gram = a.kernel == "gram";
  const auto spec = make_edmc_spec(prob, use_gram);
  fs::create_directories(a.opts.out_dir);

  RunStats stats;
  double rmse_sum = 0.0;
  for (const auto seed : seed_list(a.opts)) {
    const auto cfg = make_config(
        a.opts, use_gram ? KernelKind::gram : KernelKind::universal, seed);
    const Matrix X0 = edmc_initial_factor(prob, seed);
    const auto result = run_algo(a.opts, spec, cfg, X0);
    const std::string path =
        (fs::path(a.opts.out_dir) /
         ("edmc_trace_seed" + std::to_string(seed) + ".csv"))
            .string();
    write_trace(result.trace, a.opts.wall_timing(), path);
    const auto& last = result.trace.rows.back();
    if (have_truth) {
      const double rmse = normalized_rmse(truth, result.x);
      rmse_sum += rmse;
      std::printf(
          "seed=%llu objective=%.17g rmse=%.17g iters=%d elapsed_s=%.6g "
          "termination=%s\n",
          static_cast<unsigned long long>(seed), last.objective, rmse,
          last.iter, last.elapsed_s, termination_name(result.termination));
    } else {
      std::printf(
          "seed=%llu objective=%.17g iters=%d elapsed_s=%.6g termination=%s\n",
          static_cast<unsigned long long>(seed), last.objective, last.iter,
          last.elapsed_s, termination_name(result.termination));
    }
    stats.add(result);
  }
  if (have_truth) {
    std::printf(
        "summary runs=%d objective_mean=%.17g objective_min=%.17g "
        "rmse_mean=%.17g iters_mean=%.6g elapsed_s_mean=%.6g\n",
        stats.count, stats.obj_sum / stats.count, stats.obj_min,
        rmse_sum / stats.count, stats.iters_sum / stats.count,
        stats.time_sum / stats.count);
  } else {
    std::printf(
        "summary runs=%d objective_mean=%.17g objective_min=%.17g "
        "iters_mean=%.6g elapsed_s_mean=%.6g\n",
        stats.count, stats.obj_sum / stats.count, stats.obj_min,
        stats.iters_sum / stats.count, stats.time_sum / stats.count);
  }
  return stats.any_failure ? 3 : 0;
}

// --------------------------------------------------------------------------
// helix-gen / simgraph
// --------------------------------------------------------------------------

struct HelixArgs {
  int n = 100;
  std::int64_t seed = 0;
  std::string out;
};

int run_helix_gen(const HelixArgs& a) {
  const PointCloud cloud =
      helix_generate(a.n, static_cast<std::uint64_t>(a.seed));
  write_csv_matrix(cloud.points, a.out);
  std::printf("wrote %d helix points to %s\n", a.n, a.out.c_str());
  return 0;
}

struct SimgraphArgs {
  std::string features;
  std::string modality = "generic";
  int k = 0;  // 0 -> floor(log2 n) + 1
  std::string out;
};

int run_simgraph(const SimgraphArgs& a) {
  DenseDataset data;
  data.vectors = read_csv_matrix(a.features);
  data.modality = a.modality == "text"    ? Modality::text_tf
                  : a.modality == "image" ? Modality::image_raw
                                          : Modality::generic;
  const int n = static_cast<int>(data.vectors.rows());
  const int k = a.k > 0 ? a.k : default_knn(n);
  const Matrix W = similarity_graph(data);
  const auto M = normalize_adjacency(knn_sparsify(W, k));
  write_matrix_market(M, a.out);
  std::printf("wrote %d x %d similarity matrix (%lld nonzeros, k=%d) to %s\n",
              n, n, static_cast<long long>(M.nnz()), k, a.out.c_str());
  return 0;
}

// --------------------------------------------------------------------------
// bench
// --------------------------------------------------------------------------

struct BenchArgs {
  std::string input;
  std::string points;
  int rank = 0;
  double sample_rate = 0.1;
  std::int64_t sample_seed = 0;
  std::vector<std::string> algos{"nolips"};
  std::vector<std::string> kernels{"universal"};
  std::string out = "bench.csv";
  SolveOpts opts;
};

int run_bench(const BenchArgs& a) {
  // Build the problem once; every (algo, kernel, seed) cell shares it.
  SymNmfProblem symnmf;
  EdmcProblem edmc;
  const bool is_symnmf = !a.input.empty();
  if (is_symnmf) {
    if (a.rank < 1) throw std::invalid_argument("bench: --rank is required");
    symnmf = SymNmfProblem::create(read_matrix_market(a.input), a.rank);
  } else {
    PointCloud cloud;
    cloud.points = read_csv_matrix(a.points);
    edmc = sample_distances(cloud, a.sample_rate,
                            static_cast<std::uint64_t>(a.sample_seed));
    if (a.rank > 0) edmc.r = a.rank;
  }

  std::ofstream out(a.out, std::ios::binary);
  if (!out) throw IoError("bench: cannot open '" + a.out + "'");
  out << "algo,kernel,seed,iter,objective,step_size,elapsed_s,residual,"
         "halvings\n";

  char buf[256];
  bool any_failure = false;
  for (const auto& algo : a.algos) {
    for (const auto& kernel : a.kernels) {
      const bool use_gram = kernel == "gram";
      if (is_symnmf && use_gram)
        throw std::invalid_argument(
            "bench: the gram kernel needs an unconstrained problem; symnmf "
            "supports universal only");
      const ProblemSpec spec =
          is_symnmf ? make_symnmf_spec(symnmf) : make_edmc_spec(edmc, use_gram);
      SolveOpts cell = a.opts;
      cell.algo = algo;
      for (const auto seed : seed_list(a.opts)) {
        const auto cfg = make_config(
            cell, use_gram ? KernelKind::gram : KernelKind::universal, seed);
        const Matrix X0 = is_symnmf ? symnmf_initial_factor(symnmf, seed)
                                    : edmc_initial_factor(edmc, seed);
        const auto result = run_algo(cell, spec, cfg, X0);
        any_failure =
            any_failure || result.termination == Termination::inner_failure;
        for (const auto& row : result.trace.rows) {
          const double elapsed = a.opts.wall_timing() ? row.elapsed_s : 0.0;
          std::snprintf(buf, sizeof buf,
                        "%s,%s,%llu,%d,%.17g,%.17g,%.17g,%.17g,%d\n",
                        algo.c_str(), kernel.c_str(),
                        static_cast<unsigned long long>(seed), row.iter,
                        row.objective, row.step_size, elapsed, row.residual,
                        row.halvings);
          out << buf;
        }
      }
    }
  }
  std::printf(
      "wrote bench results for %zu algo(s) x %zu kernel(s) x %zu seed(s) to "
      "%s\n",
      a.algos.size(), a.kernels.size(), seed_list(a.opts).size(),
      a.out.c_str());
  return any_failure ? 3 : 0;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << " (residual " << e.residual << ")\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bregman proximal gradient solvers for low-rank problems"};
  app.require_subcommand(1);

  SymnmfArgs symnmf;
  auto* symnmf_cmd = app.add_subcommand(
      "symnmf", "symmetric nonnegative matrix factorization");
  symnmf_cmd->add_option("--input", symnmf.input, "similarity matrix (.mtx)")
      ->required();
  symnmf_cmd->add_option("--rank", symnmf.rank, "factor rank")
      ->required()
      ->check(CLI::PositiveNumber);
  add_solver_flags(symnmf_cmd, symnmf.opts);

  EdmcArgs edmc;
  auto* edmc_cmd =
      app.add_subcommand("edmc", "Euclidean distance matrix completion");
  auto* points_opt = edmc_cmd->add_option("--points", edmc.points,
                                          "ground-truth points (.csv)");
  edmc_cmd->add_option("--problem", edmc.problem, "observed distances (.mtx)")
      ->excludes(points_opt);
  edmc_cmd->add_option("--rank", edmc.rank, "embedding dimension");
  edmc_cmd->add_option("--sample-rate", edmc.sample_rate,
                       "fraction of pairs observed (with --points)");
  edmc_cmd->add_option("--sample-seed", edmc.sample_seed,
                       "seed for the pair sampling (with --points)");
  edmc_cmd->add_option("--kernel", edmc.kernel, "kernel geometry")
      ->check(CLI::IsMember({"universal", "gram"}));
  add_solver_flags(edmc_cmd, edmc.opts);

  HelixArgs helix;
  auto* helix_cmd =
      app.add_subcommand("helix-gen", "generate a helix point cloud");
  helix_cmd->add_option("--n", helix.n, "number of points")
      ->required()
      ->check(CLI::PositiveNumber);
  helix_cmd->add_option("--seed", helix.seed)->check(CLI::NonNegativeNumber);
  helix_cmd->add_option("--out", helix.out, "output points CSV")->required();

  SimgraphArgs simgraph;
  auto* simgraph_cmd =
      app.add_subcommand("simgraph", "build a sparse similarity matrix");
  simgraph_cmd->add_option("--features", simgraph.features, "feature CSV")
      ->required();
  simgraph_cmd->add_option("--modality", simgraph.modality)
      ->check(CLI::IsMember({"text", "image", "generic"}));
  simgraph_cmd->add_option("--k", simgraph.k,
                           "neighbors kept per row (0 = auto)");
  simgraph_cmd->add_option("--out", simgraph.out, "output .mtx")->required();

  BenchArgs bench;
  auto* bench_cmd =
      app.add_subcommand("bench", "run an algo x kernel x seed comparison");
  auto* bench_input =
      bench_cmd->add_option("--input", bench.input, "symnmf .mtx");
  bench_cmd->add_option("--points", bench.points, "edmc points CSV")
      ->excludes(bench_input);
  bench_cmd->add_option("--rank", bench.rank);
  bench_cmd->add_option("--sample-rate", bench.sample_rate);
  bench_cmd->add_option("--sample-seed", bench.sample_seed);
  bench_cmd->add_option("--algos", bench.algos, "comma list")->delimiter(',');
  bench_cmd->add_option("--kernels", bench.kernels, "comma list")
      ->delimiter(',');
  bench_cmd->add_option("--out", bench.out, "combined CSV path");
  add_solver_flags(bench_cmd, bench.opts, /*with_algo=*/false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (app.got_subcommand(symnmf_cmd))
    return guarded([&] { return run_symnmf(symnmf); });
  if (app.got_subcommand(edmc_cmd)) {
    if (edmc.points.empty() && edmc.problem.empty()) {
      std::cerr << "error: edmc needs --points or --problem\n";
      return 2;
    }
    return guarded([&] { return run_edmc(edmc); });
  }
  if (app.got_subcommand(helix_cmd))
    return guarded([&] { return run_helix_gen(helix); });
  if (app.got_subcommand(simgraph_cmd))
    return guarded([&] { return run_simgraph(simgraph); });
  if (app.got_subcommand(bench_cmd)) {
    if (bench.input.empty() && bench.points.empty()) {
      std::cerr << "error: bench needs --input or --points\n";
      return 2;
    }
    return guarded([&] { return run_bench(bench); });
  }
  return 0;
}
