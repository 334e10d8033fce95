#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "siglqc/errors.hpp"
#include "siglqc/experiment.hpp"

using namespace siglqc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("siglqc_test_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p);
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

const char* kBrownianProblem = R"({
  "model": {"N": 1, "K": 1, "D": 1, "T": 1.0,
            "x0": [10.0], "b0": [1.0], "b1": [[1.0]], "b2": [[1.0]],
            "sigma0": [[1.0]], "sigma2": [[[1.0]]]},
  "cost": {"degree": 0, "A": [[[0.0]]], "B": [[[1.0]]], "C": [[0.0]], "D": [[0.0]],
           "E": [[1.0]], "G": [0.0]}
})";

std::string experiment_json(const std::string& problem_file, const std::string& outdir,
                            const std::string& extra = "") {
  return std::string(R"({
  "problem_file": ")") + problem_file + R"(",
  "driver": {"kind": "brownian", "steps": 40},
  "L_values": [2, 3],
  "M_values": [0, 1],
  "n_paths": 200,
  "expected_signature": {"source": "fawcett"},
  "output_dir": ")" + outdir + R"(",
  "seed": 99)" + extra + "\n}";
}

}  // namespace

TEST_CASE("config loading and validation messages") {
  TempDir dir;
  write_file(dir.path / "problem.json", kBrownianProblem);
  write_file(dir.path / "cfg.json", experiment_json("problem.json", (dir.path / "out").string()));

  ExperimentConfig cfg = load_experiment_config((dir.path / "cfg.json").string());
  CHECK(cfg.problem.model.x0[0] == 10.0);
  CHECK(!cfg.config_hash.empty());

  // the (L=5, M=3) instance of the Brownian experiment validates cleanly
  cfg.L_values = {5};
  cfg.M_values = {3};
  CHECK(validate(cfg).empty());

  // M = L triggers the overfit warning
  cfg.L_values = {3};
  cfg.M_values = {3};
  auto msgs = validate(cfg);
  REQUIRE(msgs.size() == 1);
  CHECK(!msgs[0].is_error);
  CHECK(msgs[0].text.find("overfit") != std::string::npos);

  // B0 = 0 is a positivity error
  ExperimentConfig bad = cfg;
  bad.problem.cost.B[0](0, 0) = 0.0;
  bool found = false;
  for (const auto& m : validate(bad))
    if (m.is_error && m.text.find("positive definite") != std::string::npos) found = true;
  CHECK(found);

  // seed override changes the hash
  ExperimentConfig cfg2 = load_experiment_config((dir.path / "cfg.json").string(), 123);
  CHECK(cfg2.seed == 123);
  CHECK(cfg2.config_hash != cfg.config_hash);

  CHECK_THROWS_AS(load_experiment_config((dir.path / "missing.json").string()), ConfigError);
  write_file(dir.path / "broken.json", "{");
  CHECK_THROWS_AS(load_experiment_config((dir.path / "broken.json").string()), ConfigError);
}

TEST_CASE("run_experiment: shape, reproducibility, worker independence") {
  TempDir dir;
  write_file(dir.path / "problem.json", kBrownianProblem);
  write_file(dir.path / "cfg.json", experiment_json("problem.json", (dir.path / "out").string()));
  ExperimentConfig cfg = load_experiment_config((dir.path / "cfg.json").string());

  ExperimentResult res = run_experiment(cfg, 1);
  CHECK(res.rows.size() == 4);  // |L| x |M|
  CHECK(res.has_riccati);
  CHECK(res.riccati_value > 0);

  std::string csv1 = read_file(dir.path / "out" / "results.csv");
  CHECK(csv1 == res.csv);
  // every data row carries the config hash
  std::size_t rows = 0;
  for (std::size_t pos = csv1.find('\n'); pos != std::string::npos;) {
    std::size_t next = csv1.find('\n', pos + 1);
    if (next == std::string::npos) break;
    CHECK(csv1.substr(pos + 1, cfg.config_hash.size()) == cfg.config_hash);
    ++rows;
    pos = next;
  }
  CHECK(rows == 4);

  // rerun with a different worker count: byte-identical outputs
  ExperimentResult res2 = run_experiment(cfg, 2);
  CHECK(res2.csv == res.csv);
  CHECK(read_file(dir.path / "out" / "summary.json") != "");

  // control dumps exist and parse back at the control level
  TruncatedTensor u = tensor_from_text(read_file(dir.path / "out" / "control_L3_M1_k1.txt"), 2, 1);
  CHECK(!u.is_zero());
  CHECK(read_file(dir.path / "out" / "expected_signature.txt") != "");

  // solve_single reproduces the sweep's control for that cell
  ControlTensor single = solve_single(cfg, 3, 1, 2);
  CHECK(single.coord[0] == u);
}

TEST_CASE("degenerate problem: control cannot help, optimum is zero") {
  TempDir dir;
  std::string problem = R"({
    "model": {"N": 1, "K": 1, "D": 1, "T": 1.0,
              "x0": [10.0], "b0": [1.0], "b1": [[0.0]], "b2": [[1.0]],
              "sigma0": [[1.0]], "sigma2": [[[1.0]]]},
    "cost": {"degree": 0, "A": [[[0.0]]], "B": [[[1.0]]], "C": [[0.0]], "D": [[0.0]],
             "E": [[1.0]], "G": [0.0]}
  })";
  write_file(dir.path / "problem.json", problem);
  write_file(dir.path / "cfg.json", experiment_json("problem.json", (dir.path / "out").string()));
  ExperimentConfig cfg = load_experiment_config((dir.path / "cfg.json").string());
  cfg.L_values = {3};
  cfg.M_values = {1};
  ExperimentResult res = run_experiment(cfg, 0);
  REQUIRE(res.rows.size() == 1);

  // with b1 = 0 and D = 0 the control only incurs cost, so the optimizer
  // returns the zero control and the estimate is the uncontrolled cost
  TruncatedTensor u = tensor_from_text(read_file(dir.path / "out" / "control_L3_M1_k1.txt"), 2, 1);
  CHECK(u.is_zero());
  CHECK(res.rows[0].cost.mean == res.benchmark_cost.mean);  // Riccati feedback is zero too
  ExperimentResult res_again = run_experiment(cfg, 2);
  CHECK(res_again.rows[0].cost.mean == res.rows[0].cost.mean);
}

TEST_CASE("fbm experiment rows have no benchmark columns") {
  TempDir dir;
  std::string problem = R"({
    "model": {"N": 1, "K": 1, "D": 1, "T": 1.0,
              "x0": [0.0], "b0": [0.0], "b1": [[1.0]], "b2": [[1.0]],
              "sigma0": [[0.0]], "sigma2": [[[1.0]]]},
    "cost": {"degree": 0, "A": [[[1.0]]], "B": [[[1.0]]], "C": [[0.0]], "D": [[0.0]],
             "E": [[0.0]], "G": [0.0]}
  })";
  write_file(dir.path / "problem.json", problem);
  std::string cfg_text = R"({
    "problem_file": "problem.json",
    "driver": {"kind": "fbm", "hurst": 0.25, "steps": 32},
    "L_values": [2], "M_values": [1],
    "n_paths": 64,
    "expected_signature": {"source": "mc", "n_sig_paths": 64},
    "output_dir": ")" + (dir.path / "out").string() + R"(",
    "seed": 5
  })";
  write_file(dir.path / "cfg.json", cfg_text);
  ExperimentConfig cfg = load_experiment_config((dir.path / "cfg.json").string());
  ExperimentResult res = run_experiment(cfg, 0);
  CHECK(!res.has_riccati);
  REQUIRE(res.rows.size() == 1);
  CHECK(!res.rows[0].has_benchmark);
  CHECK(res.csv.find(",nan,nan,nan,") != std::string::npos);
  CHECK(res.csv.find("fbm") != std::string::npos);
}
