#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "siglqc/errors.hpp"
#include "siglqc/experiment.hpp"

using namespace siglqc;

namespace {

struct CommonArgs {
  std::string config;
  std::int64_t seed = -1;
  int workers = 0;
};

ExperimentConfig load(const CommonArgs& args) {
  std::optional<std::uint64_t> seed;
  if (args.seed >= 0) seed = static_cast<std::uint64_t>(args.seed);
  return load_experiment_config(args.config, seed);
}

int cmd_run(const CommonArgs& args) {
  ExperimentConfig cfg = load(args);
  for (const auto& m : validate(cfg))
    if (!m.is_error) std::cerr << "warning: " << m.text << '\n';
  ExperimentResult res = run_experiment(cfg, args.workers);
  std::cout << res.csv;
  if (res.has_riccati)
    std::cout << "# riccati value V(0, x0) = " << res.riccati_value
              << ", benchmark MC cost = " << res.benchmark_cost.mean << " +- "
              << res.benchmark_cost.stderr_ << '\n';
  std::cout << "# wrote results.csv, summary.json and control dumps to " << cfg.output_dir << '\n';
  return 0;
}

int cmd_validate(const CommonArgs& args) {
  ExperimentConfig cfg = load(args);
  auto msgs = validate(cfg);
  bool bad = false;
  for (const auto& m : msgs) {
    std::cout << (m.is_error ? "error: " : "warning: ") << m.text << '\n';
    bad = bad || m.is_error;
  }
  if (msgs.empty()) std::cout << "config ok\n";
  return bad ? 1 : 0;
}

int cmd_dump_tensor(const CommonArgs& args, int L, int M, int coord) {
  ExperimentConfig cfg = load(args);
  ControlTensor u = solve_single(cfg, L, M, args.workers);
  if (coord < 1 || coord > u.K()) throw ConfigError("coord must lie in 1..K");
  std::cout << tensor_to_text(u.coord[coord - 1]);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Signature-based linear-quadratic stochastic control"};
  app.require_subcommand(1);

  CommonArgs args;
  int L = 0, M = 0, coord = 1;

  auto add_common = [&](CLI::App* sub, bool with_workers = true) {
    sub->add_option("--config", args.config, "experiment config file")->required();
    sub->add_option("--seed", args.seed, "seed override");
    if (with_workers) sub->add_option("--workers", args.workers, "worker threads (0 = auto)");
  };

  CLI::App* run = app.add_subcommand("run", "run the experiment sweep");
  add_common(run);
  CLI::App* val = app.add_subcommand("validate", "check a config and report warnings/errors");
  add_common(val, false);
  CLI::App* dump = app.add_subcommand("dump-tensor", "solve one (L, M) instance and print a control tensor");
  add_common(dump);
  dump->add_option("--level-state", L, "state truncation level L")->required();
  dump->add_option("--level-control", M, "control truncation level M")->required();
  dump->add_option("--coord", coord, "control coordinate (1-based)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(args);
    if (val->parsed()) return cmd_validate(args);
    if (dump->parsed()) return cmd_dump_tensor(args, L, M, coord);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
