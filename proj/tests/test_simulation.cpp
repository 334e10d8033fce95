#include <doctest.h>

#include <cmath>

#include "siglqc/errors.hpp"
#include "siglqc/reference.hpp"
#include "siglqc/rng.hpp"
#include "siglqc/simulation.hpp"
#include "test_models.hpp"

using namespace siglqc;
using namespace siglqc::testing;

namespace {

DriverConfig brownian_cfg(int steps, std::uint64_t seed, double T = 1.0) {
  DriverConfig c;
  c.kind = DriverKind::brownian;
  c.D = 1;
  c.steps = steps;
  c.T = T;
  c.seed = seed;
  return c;
}

DriverConfig fbm_cfg(double hurst, int steps, std::uint64_t seed, double T = 1.0) {
  DriverConfig c = brownian_cfg(steps, seed, T);
  c.kind = DriverKind::fbm;
  c.hurst = hurst;
  return c;
}

SampledPath zero_path(int steps, double T) {
  SampledPath p;
  p.dim = 1;
  for (int i = 0; i <= steps; ++i) {
    p.times.push_back(T * i / steps);
    p.values.push_back(0.0);
  }
  return p;
}

// Every other sample of a path: the same noise on a grid twice as coarse.
SampledPath coarsen(const SampledPath& p) {
  SampledPath q;
  q.dim = p.dim;
  for (int i = 0; i < p.samples(); i += 2) {
    q.times.push_back(p.times[i]);
    for (int d = 0; d < p.dim; ++d) q.values.push_back(p.value(i, d));
  }
  return q;
}

}  // namespace

TEST_CASE("strat_to_ito_drift") {
  // sigma2 = 0: no correction
  LQModel additive = scalar_model(0, 0.5, 1, 0.25, 1, 0);
  ItoDrift d0 = strat_to_ito_drift(additive);
  CHECK(d0.b0[0] == 0.5);
  CHECK(d0.b2(0, 0) == 0.25);

  // sigma0 = sigma2 = 1: drift becomes (b0 + 1/2) + (b2 + 1/2) x
  LQModel mult = scalar_model(0, 0.5, 1, 0.25, 1, 1);
  ItoDrift d1 = strat_to_ito_drift(mult);
  CHECK(d1.b0[0] == 1.0);
  CHECK(d1.b2(0, 0) == 0.75);

  // additive noise, sigma2 = 0 but sigma0 = 1: still no correction
  LQModel add2 = scalar_model(0, 0, 1, 0, 1, 0);
  ItoDrift d2 = strat_to_ito_drift(add2);
  CHECK(d2.b0[0] == 0.0);
  CHECK(d2.b2(0, 0) == 0.0);
}

TEST_CASE("brownian increments have variance dt") {
  DriverConfig cfg = brownian_cfg(1, 101);
  auto paths = generate_paths(cfg, 20000, 0);
  double sum = 0, sumsq = 0;
  for (const auto& p : paths) {
    double w = p.value(1, 0);
    sum += w * w;
    sumsq += w * w * w * w;
  }
  double mean = sum / paths.size();
  double se = std::sqrt((sumsq / paths.size() - mean * mean) / paths.size());
  CHECK(std::abs(mean - 1.0) <= 3 * se);
}

TEST_CASE("fbm with H = 1/2 reduces to Brownian covariance") {
  DriverConfig cfg = fbm_cfg(0.5, 64, 7);
  DriverSampler sampler(cfg);
  CHECK(!sampler.used_cholesky_fallback());
  const int n = 4000;
  std::vector<std::pair<int, int>> probes{{16, 16}, {16, 48}, {48, 48}, {32, 64}};
  for (auto [i, j] : probes) {
    double sum = 0, sumsq = 0;
    for (int p = 0; p < n; ++p) {
      SampledPath path = sampler.sample(p);
      double v = path.value(i, 0) * path.value(j, 0);
      sum += v;
      sumsq += v * v;
    }
    double mean = sum / n;
    double se = std::sqrt((sumsq / n - mean * mean) / n);
    double expect = std::min(cfg.T * i / 64, cfg.T * j / 64);
    CHECK(std::abs(mean - expect) <= 4 * se);
  }
}

TEST_CASE("fbm with H = 1/4 has variance t^(1/2)") {
  DriverConfig cfg = fbm_cfg(0.25, 64, 11);
  DriverSampler sampler(cfg);
  CHECK(!sampler.used_cholesky_fallback());
  const int n = 4000;
  for (int idx : {16, 32, 64}) {
    double sum = 0, sumsq = 0;
    for (int p = 0; p < n; ++p) {
      SampledPath path = sampler.sample(p);
      double v = path.value(idx, 0) * path.value(idx, 0);
      sum += v;
      sumsq += v * v;
    }
    double mean = sum / n;
    double se = std::sqrt((sumsq / n - mean * mean) / n);
    double t = cfg.T * idx / 64;
    CHECK(std::abs(mean - std::sqrt(t)) <= 3 * se);
  }
}

TEST_CASE("path generation is bit-stable across worker counts") {
  for (auto cfg : {brownian_cfg(50, 3), fbm_cfg(0.25, 50, 3)}) {
    auto a = generate_paths(cfg, 33, 1);
    auto b = generate_paths(cfg, 33, 2);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].values == b[i].values);
  }
}

TEST_CASE("simulate_state: deterministic ODE limit") {
  LQModel m = scalar_model(1, 0, 1, 1, 0, 0);
  ConstantControl zero(Eigen::VectorXd::Zero(1));
  Trajectory t = simulate_state(m, zero, zero_path(1000, 1.0));
  REQUIRE(t.finite);
  CHECK(std::abs(t.states(1000, 0) - std::exp(1.0)) < 1e-2);
}

TEST_CASE("simulate_state: additive case is the path plus x0") {
  LQModel m = scalar_model(0.5, 0, 1, 0, 1, 0);
  ConstantControl zero(Eigen::VectorXd::Zero(1));
  DriverSampler sampler{brownian_cfg(200, 5)};
  SampledPath p = sampler.sample(0);
  Trajectory t = simulate_state(m, zero, p);
  REQUIRE(t.finite);
  for (int i = 0; i <= 200; ++i) CHECK(t.states(i, 0) == doctest::Approx(0.5 + p.value(i, 0)).epsilon(1e-12));
}

TEST_CASE("simulate_state: Stratonovich exponential mean") {
  LQModel m = scalar_model(1, 0, 1, 0, 0, 1);
  ConstantControl zero(Eigen::VectorXd::Zero(1));
  auto paths = generate_paths(brownian_cfg(200, 17), 20000, 0);
  double sum = 0, sumsq = 0;
  for (const auto& p : paths) {
    Trajectory t = simulate_state(m, zero, p);
    REQUIRE(t.finite);
    double x = t.states(200, 0);
    sum += x;
    sumsq += x * x;
  }
  double mean = sum / paths.size();
  double se = std::sqrt((sumsq / paths.size() - mean * mean) / paths.size());
  CHECK(std::abs(mean - std::exp(0.5)) <= 3 * se);
}

TEST_CASE("estimate_cost examples") {
  // zero everything
  LQModel mz = scalar_model(0, 0, 0, 0, 0, 0);
  ConstantControl zero(Eigen::VectorXd::Zero(1));
  auto paths2 = generate_paths(brownian_cfg(20, 23), 2, 0);
  MCEstimate z = estimate_cost(mz, scalar_cost(0, 0, 0, 0, 0, 0), zero, paths2);
  CHECK(z.mean == 0.0);
  CHECK(z.stderr_ == 0.0);

  // B0 = 1, constant control c: cost c^2 T per path, zero spread
  const double c = -1.25, T = 2.0;
  LQModel m = scalar_model(0, 0, 1, 0, 1, 0, T);
  auto paths = generate_paths(brownian_cfg(64, 29, T), 2, 0);
  ConstantControl cc(Eigen::VectorXd::Constant(1, c));
  MCEstimate e = estimate_cost(m, scalar_cost(0, 1, 0, 0, 0, 0), cc, paths);
  CHECK(e.mean == doctest::Approx(c * c * T).epsilon(1e-12));
  CHECK(e.stderr_ == 0.0);
  CHECK(e.ci95.first == e.mean);

  // E = 1, additive x0 = 0: E[W_T^2] = T
  LQModel madd = scalar_model(0, 0, 1, 0, 1, 0);
  auto mpaths = generate_paths(brownian_cfg(100, 31), 20000, 0);
  MCEstimate t = estimate_cost(madd, scalar_cost(0, 0, 0, 0, 1, 0), zero, mpaths, 0);
  CHECK(std::abs(t.mean - 1.0) <= 3 * t.stderr_);
}

TEST_CASE("estimate_cost agrees with the serial reference") {
  LQModel m = brownian_model();
  CostSpec cost = brownian_cost();
  auto paths = generate_paths(brownian_cfg(50, 37), 300, 0);
  ControlTensor u = constant_control(-4.0, 1);
  u.coord[0].set(Word{1}, 2.0);
  SignatureControl policy(u);
  MCEstimate par = estimate_cost(m, cost, policy, paths, 0);
  MCEstimate ser = estimate_cost(m, cost, policy, paths, 1);
  CHECK(par.mean == ser.mean);
  CHECK(par.stderr_ == ser.stderr_);
  MCEstimate ref = reference::estimate_cost(m, cost, policy, paths);
  CHECK(par.mean == doctest::Approx(ref.mean).epsilon(1e-12));
}

TEST_CASE("estimate_cost aborts when every path explodes") {
  LQModel m = scalar_model(1, 0, 1, 1e300, 0, 0);
  ConstantControl zero(Eigen::VectorXd::Zero(1));
  auto paths = generate_paths(brownian_cfg(16, 41), 8, 0);
  CHECK_THROWS_AS(estimate_cost(m, scalar_cost(0, 1, 0, 0, 1, 0), zero, paths), NumericError);
}

TEST_CASE("riccati closed form: pure control of the terminal state") {
  // A=C=D=G=0, sigma2=0, b2=0, b1=B=E=1: P(t) = 1/(1 + (T - t))
  LQModel m = scalar_model(1, 0, 1, 0, 1, 0, 1.0);
  CostSpec cost = scalar_cost(0, 1, 0, 0, 1, 0);
  RiccatiSolution sol = riccati_solve(m, cost, 400);
  for (int i = 0; i <= 400; i += 25) {
    double t = sol.grid[i];
    CHECK(std::abs(sol.P[i] - 1.0 / (2.0 - t)) <= 1e-6);
  }
  CHECK(sol.P[400] == 1.0);
  CHECK(sol.psi[400] == 0.0);
  CHECK(sol.chi[400] == 0.0);
}

TEST_CASE("riccati with zero cost matrices is identically zero") {
  LQModel m = brownian_model();
  CostSpec cost = scalar_cost(0, 1, 0, 0, 0, 0);  // B must stay PD
  RiccatiSolution sol = riccati_solve(m, cost, 100);
  for (int i = 0; i <= 100; i += 10) {
    CHECK(sol.P[i] == 0.0);
    CHECK(sol.psi[i] == 0.0);
    CHECK(sol.chi[i] == 0.0);
    CHECK(sol.feedback(sol.grid[i], 3.7) == 0.0);
  }
}

TEST_CASE("riccati feedback cost is self-consistent with V(0, x0)") {
  LQModel m = brownian_model();
  CostSpec cost = brownian_cost();
  RiccatiSolution sol = riccati_solve(m, cost, 1000);
  RiccatiFeedback fb(sol);
  auto paths = generate_paths(brownian_cfg(1000, 43), 5000, 0);
  MCEstimate e = estimate_cost(m, cost, fb, paths, 0);
  double V = sol.value(10.0);
  CHECK(V > 0);
  CHECK(e.ci95.first <= V);
  CHECK(V <= e.ci95.second + 0.02 * V);  // Euler bias allowance at 1000 steps
}

TEST_CASE("riccati rejects non-positive B(t)") {
  LQModel m = brownian_model();
  CostSpec cost = scalar_cost(0, 0, 0, 0, 1, 0);
  CHECK_THROWS_AS(riccati_solve(m, cost, 100), NumericError);
}

TEST_CASE("non-anticipativity: splicing the future does not move past controls") {
  LQModel m = brownian_model();
  ControlTensor u = constant_control(0.5, 2);
  u.coord[0].set(Word{1, 2}, -1.0);
  u.coord[0].set(Word{2}, 0.3);
  SignatureControl policy(u);

  DriverSampler sampler{brownian_cfg(60, 47)};
  SampledPath a = sampler.sample(0);
  SampledPath b = a;
  for (int i = 31; i <= 60; ++i) b.values[i] = a.values[i] + std::sin(i * 0.7);  // rewrite the future

  Trajectory ta = simulate_state(m, policy, a);
  Trajectory tb = simulate_state(m, policy, b);
  for (int i = 0; i <= 30; ++i) CHECK(ta.controls(i, 0) == tb.controls(i, 0));
  CHECK(ta.controls(31, 0) != tb.controls(31, 0));
}

TEST_CASE("benchmark dominates signature controls on common noise") {
  LQModel m = brownian_model();
  CostSpec cost = brownian_cost();
  RiccatiSolution sol = riccati_solve(m, cost, 500);
  RiccatiFeedback fb(sol);
  auto paths = generate_paths(brownian_cfg(500, 53), 3000, 0);
  MCEstimate bench = estimate_cost(m, cost, fb, paths, 0);
  for (double c : {-6.0, -4.0, 0.0}) {
    ConstantControl cc(Eigen::VectorXd::Constant(1, c));
    MCEstimate e = estimate_cost(m, cost, cc, paths, 0);
    CHECK(bench.mean <= e.mean + 2.0 * std::sqrt(bench.stderr_ * bench.stderr_ + e.stderr_ * e.stderr_));
  }
}

TEST_CASE("halving the step changes cost estimates by less than 1%") {
  LQModel m = brownian_model();
  CostSpec cost = brownian_cost();
  auto fine = generate_paths(brownian_cfg(2000, 59), 3000, 0);
  std::vector<SampledPath> coarse;
  coarse.reserve(fine.size());
  for (const auto& p : fine) coarse.push_back(coarsen(p));

  RiccatiSolution sol = riccati_solve(m, cost, 2000);
  RiccatiFeedback fb(sol);
  MCEstimate ef = estimate_cost(m, cost, fb, fine, 0);
  MCEstimate ec = estimate_cost(m, cost, fb, coarse, 0);
  CHECK(std::abs(ef.mean - ec.mean) / ec.mean < 0.01);

  ControlTensor u = constant_control(-4.0, 1);
  u.coord[0].set(Word{1}, 1.0);
  SignatureControl policy(u);
  MCEstimate sf = estimate_cost(m, cost, policy, fine, 0);
  MCEstimate sc = estimate_cost(m, cost, policy, coarse, 0);
  CHECK(std::abs(sf.mean - sc.mean) / sc.mean < 0.01);
}

TEST_CASE("estimate_control_distance examples") {
  LQModel m = brownian_model();
  auto paths = generate_paths(brownian_cfg(80, 61, 2.0), 64, 0);

  ConstantControl a(Eigen::VectorXd::Constant(1, 0.7));
  MCEstimate same = estimate_control_distance(m, a, a, paths, 0);
  CHECK(same.mean == 0.0);
  CHECK(same.stderr_ == 0.0);

  ConstantControl b(Eigen::VectorXd::Constant(1, -0.55));
  MCEstimate diff = estimate_control_distance(m, a, b, paths, 0);
  CHECK(diff.mean == doctest::Approx(1.25 * 1.25 * 2.0).epsilon(1e-12));
  CHECK(diff.stderr_ <= 1e-12);
}

TEST_CASE("estimates are bit-stable across worker counts") {
  LQModel m = brownian_model();
  CostSpec cost = brownian_cost();
  auto paths = generate_paths(brownian_cfg(100, 67), 257, 0);
  ControlTensor u = constant_control(-4.0, 1);
  u.coord[0].set(Word{2}, 0.5);
  SignatureControl policy(u);
  MCEstimate a = estimate_cost(m, cost, policy, paths, 1);
  MCEstimate b = estimate_cost(m, cost, policy, paths, 2);
  CHECK(a.mean == b.mean);
  CHECK(a.stderr_ == b.stderr_);
}
