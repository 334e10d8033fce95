#include "siglqc/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "siglqc/errors.hpp"
#include "siglqc/rng.hpp"

namespace siglqc {

namespace {

using nlohmann::json;

std::uint64_t fnv1a(std::uint64_t h, const std::string& s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open file: " + path);
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  SubstreamRng r(seed, tag);
  return r.next_u64();
}

constexpr std::uint64_t kSigSeedTag = 0x5349474eull;   // expected-signature paths
constexpr std::uint64_t kEvalSeedTag = 0x4556414cull;  // evaluation paths

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path, std::optional<std::uint64_t> seed_override) {
  std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    cfg.problem_file = j.at("problem_file").get<std::string>();
    std::string driver = j.at("driver").at("kind").get<std::string>();
    if (driver == "brownian")
      cfg.driver_kind = DriverKind::brownian;
    else if (driver == "fbm")
      cfg.driver_kind = DriverKind::fbm;
    else
      throw ConfigError("driver.kind must be brownian or fbm");
    cfg.hurst = j["driver"].value("hurst", 0.5);
    cfg.steps = j.at("driver").at("steps").get<int>();
    cfg.L_values = j.at("L_values").get<std::vector<int>>();
    cfg.M_values = j.at("M_values").get<std::vector<int>>();
    cfg.n_paths = j.at("n_paths").get<std::int64_t>();
    std::string es = j.at("expected_signature").at("source").get<std::string>();
    if (es == "fawcett") {
      cfg.es_source.kind = ExpectedSignatureSource::Kind::fawcett;
    } else if (es == "mc") {
      cfg.es_source.kind = ExpectedSignatureSource::Kind::mc;
      cfg.es_source.n_sig_paths = j["expected_signature"].at("n_sig_paths").get<std::int64_t>();
    } else {
      throw ConfigError("expected_signature.source must be fawcett or mc");
    }
    cfg.output_dir = j.at("output_dir").get<std::string>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.dump_quadratic = j.value("dump_quadratic", false);
    cfg.record_wall_time = j.value("record_wall_time", false);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field error: ") + e.what());
  }
  if (seed_override) cfg.seed = *seed_override;

  // Resolve the problem file relative to the config's directory.
  std::filesystem::path pf(cfg.problem_file);
  if (pf.is_relative()) pf = std::filesystem::path(path).parent_path() / pf;
  cfg.problem_file = pf.string();
  std::string problem_text = read_file(cfg.problem_file);
  cfg.problem = parse_problem(problem_text);

  std::uint64_t h = 14695981039346656037ull;
  h = fnv1a(h, j.dump());  // canonical: nlohmann orders object keys
  h = fnv1a(h, problem_text);
  h = fnv1a(h, std::to_string(cfg.seed));
  std::ostringstream os;
  os << std::hex << h;
  cfg.config_hash = os.str();
  return cfg;
}

std::vector<ValidationMessage> validate(const ExperimentConfig& cfg) {
  std::vector<ValidationMessage> out;
  auto error = [&](const std::string& m) { out.push_back({true, m}); };
  auto warn = [&](const std::string& m) { out.push_back({false, m}); };

  try {
    cfg.problem.model.validate();
    cfg.problem.cost.validate(cfg.problem.model.N, cfg.problem.model.K);
  } catch (const std::exception& e) {
    error(e.what());
    return out;
  }
  if (cfg.L_values.empty()) error("L_values is empty");
  if (cfg.M_values.empty()) error("M_values is empty");
  for (int L : cfg.L_values)
    if (L < 0) error("state truncation level must be >= 0");
  for (int M : cfg.M_values)
    if (M < 0) error("control truncation level must be >= 0");
  if (cfg.n_paths < 2) error("n_paths must be >= 2");
  if (cfg.steps < 1) error("driver.steps must be >= 1");
  if (cfg.driver_kind == DriverKind::fbm && !(cfg.hurst > 0.0 && cfg.hurst < 1.0))
    error("Hurst index must lie in (0, 1)");
  if (cfg.es_source.kind == ExpectedSignatureSource::Kind::mc && cfg.es_source.n_sig_paths < 2)
    error("expected_signature.n_sig_paths must be >= 2");

  PositivityReport pos = check_cost_positivity(cfg.problem.cost, cfg.problem.model.T);
  if (!pos.b_pd) error("B(t) not positive definite on [0, T] (min eigenvalue " + format_double(pos.min_eig_B) + ")");
  if (!pos.a_psd) error("A(t) not positive semi-definite on [0, T] (min eigenvalue " + format_double(pos.min_eig_A) + ")");

  if (!cfg.L_values.empty() && !cfg.M_values.empty()) {
    int maxM = *std::max_element(cfg.M_values.begin(), cfg.M_values.end());
    int minL = *std::min_element(cfg.L_values.begin(), cfg.L_values.end());
    if (maxM >= minL - 1)
      warn("control level M reaches L-1 for some sweep combinations: the overfit regime, where the "
           "truncated cost is optimized beyond its accuracy and performance may degrade");
  }
  return out;
}

namespace {

struct Pipeline {
  TruncatedTensor expected_signature{2, 0};
  std::vector<SampledPath> eval_paths;
  bool has_riccati = false;
  RiccatiSolution riccati;
};

void require_valid(const ExperimentConfig& cfg) {
  auto msgs = validate(cfg);
  std::string errors;
  for (const auto& m : msgs)
    if (m.is_error) errors += (errors.empty() ? "" : "; ") + m.text;
  if (!errors.empty()) throw ConfigError(errors);
}

int max_cost_level(const ExperimentConfig& cfg) {
  int out = 0;
  for (int L : cfg.L_values)
    for (int M : cfg.M_values) out = std::max(out, cost_tensor_level(L, M, cfg.problem.cost.degree));
  return out;
}

DriverConfig driver_config(const ExperimentConfig& cfg, std::uint64_t seed_tag) {
  DriverConfig d;
  d.kind = cfg.driver_kind;
  d.hurst = cfg.hurst;
  d.D = cfg.problem.model.D;
  d.steps = cfg.steps;
  d.T = cfg.problem.model.T;
  d.seed = derive_seed(cfg.seed, seed_tag);
  return d;
}

TruncatedTensor compute_expected_signature(const ExperimentConfig& cfg, int level, int workers) {
  if (cfg.es_source.kind == ExpectedSignatureSource::Kind::fawcett)
    return fawcett_expected_signature(cfg.problem.model.T, cfg.problem.model.D, level);
  std::vector<SampledPath> paths = generate_paths(driver_config(cfg, kSigSeedTag), cfg.es_source.n_sig_paths, workers);
  return mc_expected_signature(paths, level, workers).mean;
}

Pipeline prepare(const ExperimentConfig& cfg, int workers) {
  Pipeline pl;
  pl.expected_signature = compute_expected_signature(cfg, max_cost_level(cfg), workers);
  pl.eval_paths = generate_paths(driver_config(cfg, kEvalSeedTag), cfg.n_paths, workers);
  const LQModel& m = cfg.problem.model;
  if (m.N == 1 && m.K == 1 && m.D == 1 && cfg.driver_kind == DriverKind::brownian) {
    pl.riccati = riccati_solve(m, cfg.problem.cost, cfg.steps);
    pl.has_riccati = true;
  }
  return pl;
}

struct SolvedControl {
  ControlTensor u;
  QuadraticForm Q;
  MinimizeResult min;
};

SolvedControl solve_lm(const ExperimentConfig& cfg, const Pipeline& pl, int L, int M, int workers) {
  ControlBasis basis(cfg.problem.model.K, cfg.problem.model.D + 1, M);
  CostEvaluator ev = make_cost_evaluator(cfg.problem.model, cfg.problem.cost, L, pl.expected_signature);
  QuadraticForm Q = extract_quadratic(ev, basis, workers);
  MinimizeResult min;
  try {
    min = minimize_quadratic(Q);
  } catch (const NumericError& e) {
    throw NumericError("(L=" + std::to_string(L) + ", M=" + std::to_string(M) + ") " + e.what());
  }
  return {to_control_tensor(min.v, basis), std::move(Q), std::move(min)};
}

}  // namespace

ControlTensor solve_single(const ExperimentConfig& cfg, int L, int M, int workers) {
  require_valid(cfg);
  int level = cost_tensor_level(L, M, cfg.problem.cost.degree);
  TruncatedTensor es = compute_expected_signature(cfg, level, workers);
  Pipeline pl;
  pl.expected_signature = es;
  return solve_lm(cfg, pl, L, M, workers).u;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, int workers) {
  require_valid(cfg);
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);

  Pipeline pl = prepare(cfg, workers);
  {
    std::ofstream es(fs::path(cfg.output_dir) / "expected_signature.txt");
    es << tensor_to_text(pl.expected_signature);
  }

  ExperimentResult result;
  std::unique_ptr<RiccatiFeedback> bench_policy;
  if (pl.has_riccati) {
    result.has_riccati = true;
    result.riccati_value = pl.riccati.value(cfg.problem.model.x0[0]);
    bench_policy = std::make_unique<RiccatiFeedback>(pl.riccati);
    result.benchmark_cost = estimate_cost(cfg.problem.model, cfg.problem.cost, *bench_policy, pl.eval_paths,
                                          workers, &result.benchmark_flagged);
  }

  std::ostringstream csv;
  csv << "run_id,driver,H,T,L,M,n_paths,steps,cost_mean,cost_stderr,dist_mean,dist_stderr,"
         "benchmark_cost,flagged_paths,wall_time_s\n";
  const std::string driver_name = cfg.driver_kind == DriverKind::brownian ? "brownian" : "fbm";

  for (int L : cfg.L_values) {
    for (int M : cfg.M_values) {
      auto t0 = std::chrono::steady_clock::now();
      SolvedControl sc = solve_lm(cfg, pl, L, M, workers);

      ExperimentRow row;
      row.L = L;
      row.M = M;
      row.predicted_cost = sc.min.value;
      row.min_eigenvalue = check_strict_convexity(sc.Q).min_eigenvalue;

      SignatureControl policy(sc.u);
      row.cost = estimate_cost(cfg.problem.model, cfg.problem.cost, policy, pl.eval_paths, workers, &row.flagged);
      if (pl.has_riccati) {
        row.has_benchmark = true;
        std::int64_t dist_flagged = 0;
        row.dist = estimate_control_distance(cfg.problem.model, policy, *bench_policy, pl.eval_paths,
                                             workers, &dist_flagged);
        row.flagged = std::max(row.flagged, dist_flagged);
      }
      row.wall_time_s =
          cfg.record_wall_time
              ? std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()
              : 0.0;

      for (int k = 0; k < cfg.problem.model.K; ++k) {
        std::ofstream f(fs::path(cfg.output_dir) /
                        ("control_L" + std::to_string(L) + "_M" + std::to_string(M) + "_k" +
                         std::to_string(k + 1) + ".txt"));
        f << tensor_to_text(sc.u.coord[k]);
      }
      if (cfg.dump_quadratic) {
        std::ofstream f(fs::path(cfg.output_dir) /
                        ("quadratic_L" + std::to_string(L) + "_M" + std::to_string(M) + ".csv"));
        f << quadratic_to_csv(sc.Q);
      }

      csv << cfg.config_hash << ',' << driver_name << ','
          << (cfg.driver_kind == DriverKind::fbm ? format_double(cfg.hurst) : "") << ','
          << format_double(cfg.problem.model.T) << ',' << L << ',' << M << ',' << cfg.n_paths << ','
          << cfg.steps << ',' << format_double(row.cost.mean) << ',' << format_double(row.cost.stderr_)
          << ',';
      if (row.has_benchmark)
        csv << format_double(row.dist.mean) << ',' << format_double(row.dist.stderr_) << ','
            << format_double(result.benchmark_cost.mean);
      else
        csv << "nan,nan,nan";
      csv << ',' << row.flagged << ','
          << (cfg.record_wall_time ? format_double(row.wall_time_s) : "0") << '\n';

      result.rows.push_back(std::move(row));
    }
  }
  result.csv = csv.str();
  {
    std::ofstream f(fs::path(cfg.output_dir) / "results.csv");
    f << result.csv;
  }

  const ExperimentRow* best = nullptr;
  for (const auto& r : result.rows)
    if (!best || r.cost.mean < best->cost.mean) best = &r;
  nlohmann::json summary;
  summary["config_hash"] = cfg.config_hash;
  summary["driver"] = driver_name;
  summary["T"] = cfg.problem.model.T;
  summary["rows"] = result.rows.size();
  summary["best"] = {{"L", best->L}, {"M", best->M}, {"cost_mean", best->cost.mean},
                     {"cost_stderr", best->cost.stderr_}};
  if (result.has_riccati) {
    summary["riccati_value"] = result.riccati_value;
    summary["benchmark_cost_mc"] = result.benchmark_cost.mean;
    summary["benchmark_cost_stderr"] = result.benchmark_cost.stderr_;
    summary["best_gap_vs_riccati_value"] = best->cost.mean / result.riccati_value - 1.0;
  }
  nlohmann::json jrows = nlohmann::json::array();
  for (const auto& r : result.rows)
    jrows.push_back({{"L", r.L},
                     {"M", r.M},
                     {"cost_mean", r.cost.mean},
                     {"cost_stderr", r.cost.stderr_},
                     {"predicted_cost", r.predicted_cost},
                     {"min_eigenvalue", r.min_eigenvalue},
                     {"dist_mean", r.has_benchmark ? r.dist.mean : std::nan("")},
                     {"flagged", r.flagged}});
  summary["sweep"] = std::move(jrows);
  {
    std::ofstream f(fs::path(cfg.output_dir) / "summary.json");
    f << summary.dump(2) << '\n';
  }
  return result;
}

}  // namespace siglqc
