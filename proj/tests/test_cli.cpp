#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bregopt/data_io.hpp"
#include "bregopt/problems.hpp"
#include "bregopt/rng.hpp"

using namespace bregopt;
namespace fs = std::filesystem;

namespace {

struct CmdResult {
  int code = -1;
  std::string out;
};

CmdResult run_cli(const std::string& args) {
  const std::string cmd =
      std::string(BREGOPT_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::string out;
  while (fgets(buf, sizeof buf, pipe)) out += buf;
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("bregopt_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::vector<std::string>> parse_csv(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) row.push_back(tok);
    rows.push_back(std::move(row));
  }
  return rows;
}

// 4 x 4 exactly factorizable nonnegative similarity matrix.
std::string write_toy_matrix(const TempDir& tmp) {
  Rng rng(12345);
  Matrix Xs(4, 2);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 2; ++j) Xs(i, j) = rng.uniform();
  const Matrix M = Xs * Xs.transpose();
  std::vector<Eigen::Triplet<double>> entries;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j <= i; ++j) entries.emplace_back(i, j, M(i, j));
  const std::string path = tmp.file("toy.mtx");
  write_matrix_market(SparseSymmetric::from_triplets(4, entries), path);
  return path;
}

}  // namespace

TEST_CASE("symnmf solves an exactly factorizable toy matrix") {
  TempDir tmp;
  const std::string mtx = write_toy_matrix(tmp);
  const auto res = run_cli("symnmf --input " + mtx +
                           " --rank 2 --seeds 3 --max-iters 2000 --tol 1e-10"
                           " --out-dir " +
                           tmp.file("out"));
  CHECK(res.code == 0);
  CHECK(res.out.find("summary runs=3") != std::string::npos);
  for (int seed = 0; seed < 3; ++seed) {
    const auto rows = parse_csv(tmp.file("out/symnmf_trace_seed" +
                                         std::to_string(seed) + ".csv"));
    REQUIRE(rows.size() >= 2);
    CHECK(rows[0] == std::vector<std::string>({"iter", "objective", "step_size",
                                               "elapsed_s", "residual",
                                               "halvings"}));
    CHECK(std::stod(rows.back()[1]) <= 1e-6);
  }
}

TEST_CASE("pg baseline emits the same trace schema") {
  TempDir tmp;
  const std::string mtx = write_toy_matrix(tmp);
  const auto res = run_cli("symnmf --input " + mtx +
                           " --rank 2 --algo pg --seed 0 --max-iters 50"
                           " --tol 1e-12 --out-dir " +
                           tmp.file("out"));
  CHECK(res.code == 0);
  const auto rows = parse_csv(tmp.file("out/symnmf_trace_seed0.csv"));
  CHECK(rows[0] == std::vector<std::string>({"iter", "objective", "step_size",
                                             "elapsed_s", "residual",
                                             "halvings"}));
}

TEST_CASE("fixed step mode pins the step column to 1") {
  TempDir tmp;
  const std::string mtx = write_toy_matrix(tmp);
  const auto res = run_cli("symnmf --input " + mtx +
                           " --rank 2 --step fixed --seed 0 --max-iters 100"
                           " --tol 1e-12 --out-dir " +
                           tmp.file("out"));
  CHECK(res.code == 0);
  const auto rows = parse_csv(tmp.file("out/symnmf_trace_seed0.csv"));
  REQUIRE(rows.size() >= 3);
  for (std::size_t i = 1; i < rows.size(); ++i)
    CHECK(std::stod(rows[i][2]) == 1.0);
}

TEST_CASE("identical invocations byte-reproduce trace files") {
  TempDir tmp;
  const std::string mtx = write_toy_matrix(tmp);
  const std::string invocation = "symnmf --input " + mtx +
                                 " --rank 2 --seeds 2 --max-iters 200 --tol "
                                 "1e-10 --out-dir ";
  CHECK(run_cli(invocation + tmp.file("a")).code == 0);
  CHECK(run_cli(invocation + tmp.file("b")).code == 0);
  for (int seed = 0; seed < 2; ++seed) {
    const std::string name = "symnmf_trace_seed" + std::to_string(seed) + ".csv";
    CHECK(slurp(tmp.file("a/" + name)) == slurp(tmp.file("b/" + name)));
  }
}

TEST_CASE("helix generation is byte-deterministic") {
  TempDir tmp;
  CHECK(run_cli("helix-gen --n 10 --seed 0 --out " + tmp.file("a.csv")).code == 0);
  CHECK(run_cli("helix-gen --n 10 --seed 0 --out " + tmp.file("b.csv")).code == 0);
  CHECK(slurp(tmp.file("a.csv")) == slurp(tmp.file("b.csv")));
  CHECK(run_cli("helix-gen --n 10 --seed 1 --out " + tmp.file("c.csv")).code == 0);
  CHECK(slurp(tmp.file("a.csv")) != slurp(tmp.file("c.csv")));
}

TEST_CASE("simgraph on identical text rows yields the normalized complete graph") {
  TempDir tmp;
  {
    std::ofstream out(tmp.file("feat.csv"));
    for (int i = 0; i < 8; ++i) out << "1,2,0.5\n";
  }
  const auto res = run_cli("simgraph --features " + tmp.file("feat.csv") +
                           " --modality text --out " + tmp.file("m.mtx"));
  CHECK(res.code == 0);
  const auto M = read_matrix_market(tmp.file("m.mtx")).dense();
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      if (i == j)
        CHECK(M(i, j) == 0.0);
      else
        CHECK(M(i, j) == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
    }
}

TEST_CASE("edmc runs with both kernels and reports rmse") {
  TempDir tmp;
  CHECK(run_cli("helix-gen --n 30 --seed 0 --out " + tmp.file("pts.csv")).code ==
        0);
  for (const std::string kernel : {"universal", "gram"}) {
    const auto res = run_cli("edmc --points " + tmp.file("pts.csv") +
                             " --sample-rate 0.5 --kernel " + kernel +
                             " --seed 0 --max-iters 300 --out-dir " +
                             tmp.file("out_" + kernel));
    CHECK(res.code == 0);
    CHECK(res.out.find("rmse=") != std::string::npos);
    // Monotone objective column.
    const auto rows =
        parse_csv(tmp.file("out_" + kernel + "/edmc_trace_seed0.csv"));
    for (std::size_t i = 2; i < rows.size(); ++i)
      CHECK(std::stod(rows[i][1]) <=
            std::stod(rows[i - 1][1]) * (1.0 + 1e-9) + 1e-12);
  }
}

TEST_CASE("bench produces one trace group per algo x seed cell") {
  TempDir tmp;
  const std::string mtx = write_toy_matrix(tmp);
  const std::string out = tmp.file("bench.csv");
  const auto res = run_cli("bench --input " + mtx +
                           " --rank 2 --algos nolips,pg --seeds 2"
                           " --max-iters 50 --tol 1e-12 --out " +
                           out);
  CHECK(res.code == 0);
  const auto rows = parse_csv(out);
  REQUIRE(rows.size() > 1);
  CHECK(rows[0][0] == "algo");
  std::set<std::pair<std::string, std::string>> groups;
  for (std::size_t i = 1; i < rows.size(); ++i)
    groups.insert({rows[i][0], rows[i][2]});
  CHECK(groups.size() == 4);

  // Determinism of the combined CSV.
  const std::string out2 = tmp.file("bench2.csv");
  run_cli("bench --input " + mtx +
          " --rank 2 --algos nolips,pg --seeds 2 --max-iters 50 --tol 1e-12 "
          "--out " +
          out2);
  CHECK(slurp(out) == slurp(out2));
}

TEST_CASE("error exits") {
  TempDir tmp;
  CHECK(run_cli("symnmf --input " + tmp.file("missing.mtx") + " --rank 2").code ==
        2);
  CHECK(run_cli("edmc --rank 2").code == 2);  // neither --points nor --problem
  CHECK(run_cli("symnmf --input x.mtx --rank 2 --bogus-flag").code != 0);
  CHECK(run_cli("symnmf").code != 0);      // missing required flags
  CHECK(run_cli("").code != 0);            // missing subcommand
  CHECK(run_cli("--help").code == 0);
  CHECK(run_cli("symnmf --help").code == 0);
  CHECK(run_cli("edmc --help").code == 0);
  CHECK(run_cli("helix-gen --help").code == 0);
  CHECK(run_cli("simgraph --help").code == 0);
  CHECK(run_cli("bench --help").code == 0);
}
