#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "siglqc/lq_model.hpp"
#include "siglqc/optimizer.hpp"
#include "siglqc/simulation.hpp"

namespace siglqc {

struct ExpectedSignatureSource {
  enum class Kind { fawcett, mc };
  Kind kind = Kind::fawcett;
  std::int64_t n_sig_paths = 0;  // mc only
};

// One experiment file drives the full sweep; everything except the seed and
// worker-count overrides lives here so runs are file-reproducible.
struct ExperimentConfig {
  std::string problem_file;
  LQProblem problem;
  DriverKind driver_kind = DriverKind::brownian;
  double hurst = 0.5;
  int steps = 1000;
  std::vector<int> L_values;
  std::vector<int> M_values;
  std::int64_t n_paths = 0;
  ExpectedSignatureSource es_source;
  std::string output_dir;
  std::uint64_t seed = 0;
  bool dump_quadratic = false;
  bool record_wall_time = false;  // keeps outputs byte-reproducible when off

  std::string config_hash;  // hex FNV-1a of config + problem file + seed
};

ExperimentConfig load_experiment_config(const std::string& path,
                                        std::optional<std::uint64_t> seed_override = std::nullopt);

struct ValidationMessage {
  bool is_error = false;
  std::string text;
};

// Configuration checks: dimensions, PD of B(t), PSD of A(t), driver fields,
// and the overfit warning when max(M) reaches min(L) - 1.
std::vector<ValidationMessage> validate(const ExperimentConfig& cfg);

struct ExperimentRow {
  int L = 0, M = 0;
  MCEstimate cost;
  MCEstimate dist;           // vs the Riccati feedback; zero when unavailable
  bool has_benchmark = false;
  double predicted_cost = 0.0;  // minimized truncated cost <J^L(u*), ES>
  double min_eigenvalue = 0.0;
  std::int64_t flagged = 0;
  double wall_time_s = 0.0;
};

struct ExperimentResult {
  std::vector<ExperimentRow> rows;
  bool has_riccati = false;
  double riccati_value = 0.0;      // V(0, x0)
  MCEstimate benchmark_cost;       // MC cost of the Riccati feedback, common noise
  std::int64_t benchmark_flagged = 0;
  std::string csv;                 // the results table as written to disk
};

// Runs the sweep: expected signature, per-(L,M) quadratic extraction and
// minimization, Monte-Carlo evaluation against the benchmark, and writes
// results.csv, summary.json and the control tensor dumps into output_dir.
ExperimentResult run_experiment(const ExperimentConfig& cfg, int workers = 0);

// Solves a single (L, M) instance and returns the optimal control.
ControlTensor solve_single(const ExperimentConfig& cfg, int L, int M, int workers = 0);

}  // namespace siglqc
