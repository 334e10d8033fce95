// Timing comparison between the OpenMP kernels and the serial reference
// implementations on a mid-size workload.
#include <omp.h>

#include <cstdio>
#include <vector>

#include "siglqc/reference.hpp"

using namespace siglqc;

namespace {

double time_once(const char* name, double serial_s, double parallel_s) {
  std::printf("%-28s serial %8.3f s   omp(%d) %8.3f s   speedup %.2fx\n", name, serial_s,
              omp_get_max_threads(), parallel_s, serial_s / parallel_s);
  return serial_s / parallel_s;
}

}  // namespace

int main(int argc, char** argv) {
  int n_paths = argc > 1 ? std::atoi(argv[1]) : 512;
  int steps = argc > 2 ? std::atoi(argv[2]) : 500;
  int level = argc > 3 ? std::atoi(argv[3]) : 8;

  DriverConfig cfg;
  cfg.kind = DriverKind::brownian;
  cfg.D = 1;
  cfg.steps = steps;
  cfg.T = 1.0;
  cfg.seed = 7;

  std::printf("workload: %d paths, %d steps, signature level %d\n", n_paths, steps, level);

  double t0 = omp_get_wtime();
  std::vector<SampledPath> paths_serial = generate_paths(cfg, n_paths, 1);
  double t1 = omp_get_wtime();
  std::vector<SampledPath> paths = generate_paths(cfg, n_paths, 0);
  double t2 = omp_get_wtime();
  time_once("generate_paths", t1 - t0, t2 - t1);

  t0 = omp_get_wtime();
  ExpectedSignatureEstimate ref = reference::mc_expected_signature(paths, level);
  t1 = omp_get_wtime();
  ExpectedSignatureEstimate par = mc_expected_signature(paths, level, 0);
  t2 = omp_get_wtime();
  time_once("mc_expected_signature", t1 - t0, t2 - t1);

  double max_rel = 0.0;
  for (const auto& e : ref.mean.entries()) {
    double v = par.mean.coeff_key(e.key);
    max_rel = std::max(max_rel, std::abs(v - e.c) / (1.0 + std::abs(e.c)));
  }
  std::printf("  mean agreement vs reference: max rel diff %.3e\n", max_rel);

  LQModel model;
  model.N = model.K = model.D = 1;
  model.T = 1.0;
  model.x0 = Eigen::VectorXd::Constant(1, 10.0);
  model.b0 = Eigen::VectorXd::Constant(1, 1.0);
  model.b1 = Eigen::MatrixXd::Constant(1, 1, 1.0);
  model.b2 = Eigen::MatrixXd::Constant(1, 1, 1.0);
  model.sigma0 = Eigen::MatrixXd::Constant(1, 1, 1.0);
  model.sigma2 = {Eigen::MatrixXd::Constant(1, 1, 1.0)};
  CostSpec cost;
  cost.degree = 0;
  cost.A = {Eigen::MatrixXd::Zero(1, 1)};
  cost.B = {Eigen::MatrixXd::Constant(1, 1, 1.0)};
  cost.C = {Eigen::VectorXd::Zero(1)};
  cost.D = {Eigen::VectorXd::Zero(1)};
  cost.E = Eigen::MatrixXd::Constant(1, 1, 1.0);
  cost.G = Eigen::VectorXd::Zero(1);

  ControlTensor u = ControlTensor::zero(1, 2, 2);
  u.coord[0].set(Word{}, -4.0);
  u.coord[0].set(Word{1}, 1.0);
  SignatureControl policy(u);

  t0 = omp_get_wtime();
  MCEstimate ref_cost = reference::estimate_cost(model, cost, policy, paths);
  t1 = omp_get_wtime();
  MCEstimate par_cost = estimate_cost(model, cost, policy, paths, 0);
  t2 = omp_get_wtime();
  time_once("estimate_cost", t1 - t0, t2 - t1);
  std::printf("  cost mean: reference %.6f, omp %.6f\n", ref_cost.mean, par_cost.mean);
  return 0;
}
