#include "siglqc/simulation.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>

#include "siglqc/errors.hpp"
#include "siglqc/parallel.hpp"
#include "siglqc/rng.hpp"

namespace siglqc {

void DriverConfig::validate() const {
  if (steps < 1) throw ConfigError("driver steps must be >= 1");
  if (D < 1) throw ConfigError("driver dimension must be >= 1");
  if (!(T > 0.0)) throw ConfigError("driver horizon must be positive");
  if (kind == DriverKind::fbm && !(hurst > 0.0 && hurst < 1.0))
    throw ConfigError("Hurst index must lie in (0, 1)");
}

MCEstimate MCEstimate::from_sums(double sum, double sumsq, std::int64_t n) {
  MCEstimate e;
  e.n_paths = n;
  e.mean = sum / n;
  double var = n > 1 ? (sumsq - n * e.mean * e.mean) / (n - 1.0) : 0.0;
  e.stderr_ = var > 0.0 ? std::sqrt(var / n) : 0.0;
  e.ci95 = {e.mean - 1.96 * e.stderr_, e.mean + 1.96 * e.stderr_};
  return e;
}

namespace {

std::mutex fftw_plan_mutex;

double fgn_autocov(int k, double two_h) {
  double kk = k;
  return 0.5 * (std::pow(kk + 1.0, two_h) - 2.0 * std::pow(kk, two_h) +
                (k > 0 ? std::pow(kk - 1.0, two_h) : std::pow(1.0, two_h)));
}

}  // namespace

// Spectral (or Cholesky) data for unit-spacing fractional Gaussian noise of
// length steps; one instance is shared by all samples of a DriverSampler.
struct DriverSampler::FbmState {
  int n = 0;
  bool cholesky = false;
  std::vector<double> sqrt_lambda;  // size 2n (embedding route)
  Eigen::MatrixXd chol;             // n x n lower factor (fallback route)
  fftw_plan plan = nullptr;         // backward c2c of size 2n, unaligned

  ~FbmState() {
    if (plan) {
      std::lock_guard<std::mutex> lock(fftw_plan_mutex);
      fftw_destroy_plan(plan);
    }
  }

  explicit FbmState(int steps, double hurst) : n(steps) {
    const int M = 2 * n;
    const double two_h = 2.0 * hurst;
    std::vector<std::complex<double>> c(M), lam(M);
    for (int k = 0; k <= n; ++k) c[k] = fgn_autocov(k, two_h);
    for (int k = n + 1; k < M; ++k) c[k] = c[M - k];
    {
      std::lock_guard<std::mutex> lock(fftw_plan_mutex);
      fftw_plan fwd = fftw_plan_dft_1d(M, reinterpret_cast<fftw_complex*>(c.data()),
                                       reinterpret_cast<fftw_complex*>(lam.data()), FFTW_FORWARD,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
      fftw_execute(fwd);
      fftw_destroy_plan(fwd);
    }
    double max_lam = 0.0, min_lam = 0.0;
    for (const auto& l : lam) {
      max_lam = std::max(max_lam, l.real());
      min_lam = std::min(min_lam, l.real());
    }
    if (min_lam < -1e-10 * std::max(1.0, max_lam)) {
      // Embedding not nonnegative definite on this grid: exact Cholesky of
      // the n x n autocovariance instead.
      cholesky = true;
      Eigen::MatrixXd cov(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) cov(i, j) = fgn_autocov(std::abs(i - j), two_h);
      Eigen::LLT<Eigen::MatrixXd> llt(cov);
      if (llt.info() != Eigen::Success) throw NumericError("fGn covariance is not positive definite");
      chol = llt.matrixL();
      return;
    }
    sqrt_lambda.resize(M);
    for (int k = 0; k < M; ++k) sqrt_lambda[k] = std::sqrt(std::max(0.0, lam[k].real()));
    std::vector<std::complex<double>> in(M), out(M);
    std::lock_guard<std::mutex> lock(fftw_plan_mutex);
    plan = fftw_plan_dft_1d(M, reinterpret_cast<fftw_complex*>(in.data()),
                            reinterpret_cast<fftw_complex*>(out.data()), FFTW_BACKWARD,
                            FFTW_ESTIMATE | FFTW_UNALIGNED);
  }

  // Unit-spacing fGn sample of length n; consumes 2n normals (embedding) or
  // n normals (Cholesky).
  void sample_fgn(SubstreamRng& rng, std::vector<double>& out) const {
    out.resize(n);
    if (cholesky) {
      Eigen::VectorXd z(n);
      for (int i = 0; i < n; ++i) z[i] = rng.next_normal();
      Eigen::VectorXd y = chol * z;
      for (int i = 0; i < n; ++i) out[i] = y[i];
      return;
    }
    const int M = 2 * n;
    const double inv_sqrt_m = 1.0 / std::sqrt(static_cast<double>(M));
    const double half = 1.0 / std::sqrt(2.0 * M);
    std::vector<std::complex<double>> a(M), x(M);
    a[0] = sqrt_lambda[0] * inv_sqrt_m * rng.next_normal();
    a[n] = sqrt_lambda[n] * inv_sqrt_m * rng.next_normal();
    for (int k = 1; k < n; ++k) {
      double zr = rng.next_normal();
      double zi = rng.next_normal();
      a[k] = sqrt_lambda[k] * half * std::complex<double>(zr, zi);
      a[M - k] = std::conj(a[k]);
    }
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(a.data()),
                     reinterpret_cast<fftw_complex*>(x.data()));
    for (int i = 0; i < n; ++i) out[i] = x[i].real();
  }
};

DriverSampler::DriverSampler(const DriverConfig& cfg) : cfg_(cfg) {
  cfg.validate();
  if (cfg.kind == DriverKind::fbm) fbm_ = std::make_shared<const FbmState>(cfg.steps, cfg.hurst);
}

DriverSampler::~DriverSampler() = default;

bool DriverSampler::used_cholesky_fallback() const { return fbm_ && fbm_->cholesky; }

SampledPath DriverSampler::sample(std::int64_t path_index) const {
  const int n = cfg_.steps;
  const double dt = cfg_.T / n;
  SampledPath p;
  p.dim = cfg_.D;
  p.times.resize(n + 1);
  for (int i = 0; i <= n; ++i) p.times[i] = cfg_.T * i / n;
  p.values.assign(static_cast<std::size_t>(n + 1) * cfg_.D, 0.0);
  SubstreamRng rng(cfg_.seed, static_cast<std::uint64_t>(path_index));

  if (cfg_.kind == DriverKind::brownian) {
    const double s = std::sqrt(dt);
    for (int i = 0; i < n; ++i)
      for (int d = 0; d < cfg_.D; ++d)
        p.values[static_cast<std::size_t>(i + 1) * cfg_.D + d] =
            p.values[static_cast<std::size_t>(i) * cfg_.D + d] + s * rng.next_normal();
    return p;
  }

  const double scale = std::pow(dt, cfg_.hurst);
  std::vector<double> fgn;
  for (int d = 0; d < cfg_.D; ++d) {
    fbm_->sample_fgn(rng, fgn);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      acc += scale * fgn[i];
      p.values[static_cast<std::size_t>(i + 1) * cfg_.D + d] = acc;
    }
  }
  return p;
}

std::vector<SampledPath> generate_paths(const DriverConfig& cfg, std::int64_t n, int workers) {
  if (n < 1) throw ConfigError("need at least one path");
  DriverSampler sampler(cfg);
  std::vector<SampledPath> out(n);
  parallel_for_index(n, workers, [&](std::int64_t i) { out[i] = sampler.sample(i); });
  return out;
}

ItoDrift strat_to_ito_drift(const LQModel& model) {
  ItoDrift out;
  out.b0 = model.b0;
  out.b2 = model.b2;
  for (int d = 0; d < model.D; ++d) {
    const Eigen::MatrixXd& s2 = model.sigma2[d];
    out.b0 += 0.5 * s2 * model.sigma0.col(d);
    out.b2 += 0.5 * s2 * s2;
  }
  return out;
}

double RiccatiSolution::B_at(double t) const {
  double out = Bm[0], f = 1.0;
  for (std::size_t m = 1; m < Bm.size(); ++m) {
    f *= t / m;
    out += f * Bm[m];
  }
  return out;
}

double RiccatiSolution::D_at(double t) const {
  double out = Dm[0], f = 1.0;
  for (std::size_t m = 1; m < Dm.size(); ++m) {
    f *= t / m;
    out += f * Dm[m];
  }
  return out;
}

double RiccatiSolution::feedback(double t, double x) const {
  const int steps = static_cast<int>(grid.size()) - 1;
  double s = std::clamp(t / T * steps, 0.0, static_cast<double>(steps));
  int i = std::min(static_cast<int>(s), steps - 1);
  double w = s - i;
  double Pt = (1.0 - w) * P[i] + w * P[i + 1];
  double psit = (1.0 - w) * psi[i] + w * psi[i + 1];
  return -(b1 * (Pt * x + psit) + D_at(t)) / B_at(t);
}

RiccatiSolution riccati_solve(const LQModel& model, const CostSpec& cost, int grid_steps) {
  if (model.N != 1 || model.K != 1 || model.D != 1)
    throw std::invalid_argument("Riccati benchmark requires N = K = D = 1");
  cost.validate(1, 1);
  ItoDrift ito = strat_to_ito_drift(model);
  const double beta0 = ito.b0[0], beta2 = ito.b2(0, 0);
  const double b1 = model.b1(0, 0), s0 = model.sigma0(0, 0), s2 = model.sigma2[0](0, 0);

  RiccatiSolution sol;
  sol.b1 = b1;
  sol.T = model.T;
  for (int m = 0; m <= cost.degree; ++m) {
    sol.Bm.push_back(cost.B[m](0, 0));
    sol.Dm.push_back(cost.D[m][0]);
  }
  auto a_at = [&](double t) { return cost.A_at(t)(0, 0); };
  auto c_at = [&](double t) { return cost.C_at(t)[0]; };
  for (int i = 0; i <= grid_steps; ++i) {
    double t = model.T * i / grid_steps;
    if (!(sol.B_at(t) > 1e-12)) throw NumericError("B(t) not positive on the Riccati grid");
  }

  auto rhs = [&](double t, const Eigen::Vector3d& y) {
    double P = y[0], psi = y[1];
    double Bt = sol.B_at(t), Dt = sol.D_at(t);
    Eigen::Vector3d d;
    d[0] = b1 * b1 * P * P / Bt - 2.0 * beta2 * P - s2 * s2 * P - a_at(t);
    d[1] = b1 * b1 * P * psi / Bt + b1 * P * Dt / Bt - beta0 * P - beta2 * psi - P * s0 * s2 - c_at(t);
    d[2] = (b1 * psi + Dt) * (b1 * psi + Dt) / Bt - 2.0 * beta0 * psi - P * s0 * s0;
    return d;
  };

  const double h = model.T / grid_steps;
  std::vector<Eigen::Vector3d> ys(grid_steps + 1);
  ys[grid_steps] = {cost.E(0, 0), cost.G[0], 0.0};
  for (int i = grid_steps; i > 0; --i) {
    double t = model.T * i / grid_steps;
    const Eigen::Vector3d& y = ys[i];
    Eigen::Vector3d k1 = rhs(t, y);
    Eigen::Vector3d k2 = rhs(t - h / 2, y - (h / 2) * k1);
    Eigen::Vector3d k3 = rhs(t - h / 2, y - (h / 2) * k2);
    Eigen::Vector3d k4 = rhs(t - h, y - h * k3);
    ys[i - 1] = y - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  sol.grid.resize(grid_steps + 1);
  sol.P.resize(grid_steps + 1);
  sol.psi.resize(grid_steps + 1);
  sol.chi.resize(grid_steps + 1);
  for (int i = 0; i <= grid_steps; ++i) {
    sol.grid[i] = model.T * i / grid_steps;
    sol.P[i] = ys[i][0];
    sol.psi[i] = ys[i][1];
    sol.chi[i] = ys[i][2];
  }
  return sol;
}

SignatureControl::SignatureControl(ControlTensor u) : level_(u.level()) {
  for (const auto& c : u.coord) plans_.emplace_back(c, level_);
}

void SignatureControl::eval(double, const SignatureState& sig, const Eigen::VectorXd&,
                            Eigen::VectorXd& u_out) const {
  u_out.resize(static_cast<int>(plans_.size()));
  for (std::size_t k = 0; k < plans_.size(); ++k) u_out[k] = plans_[k].eval(sig.dense());
}

namespace {

// Runs one path with several policies on shared noise and one shared
// streaming signature.  The sink sees each grid point after the controls for
// that point are evaluated; returns false if any state went non-finite.
template <class Sink>
bool run_joint(const LQModel& model, const ItoDrift& ito,
               const std::vector<const ControlPolicy*>& policies, const SampledPath& path, Sink&& sink) {
  int sig_level = 0;
  for (const auto* p : policies) sig_level = std::max(sig_level, p->signature_level());
  const std::size_t np = policies.size();

  SignatureState sig(model.D, sig_level);
  std::vector<Eigen::VectorXd> x(np, model.x0), u(np, Eigen::VectorXd::Zero(model.K));
  std::vector<double> dw(model.D);

  const int steps = path.samples() - 1;
  for (int i = 0; i <= steps; ++i) {
    const double t = path.times[i];
    for (std::size_t j = 0; j < np; ++j) {
      policies[j]->eval(t, sig, x[j], u[j]);
      if (!u[j].allFinite()) return false;
    }
    sink(i, t, x, u);
    if (i == steps) break;
    const double dt = path.times[i + 1] - t;
    for (int d = 0; d < model.D; ++d) dw[d] = path.value(i + 1, d) - path.value(i, d);
    for (std::size_t j = 0; j < np; ++j) {
      Eigen::VectorXd drift = ito.b0 + model.b1 * u[j] + ito.b2 * x[j];
      Eigen::VectorXd next = x[j] + dt * drift;
      for (int d = 0; d < model.D; ++d) next += dw[d] * (model.sigma0.col(d) + model.sigma2[d] * x[j]);
      if (!next.allFinite()) return false;
      x[j] = next;
    }
    sig.advance(dt, dw);
  }
  return true;
}

double running_integrand(const CostSpec& cost, double t, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& u) {
  return x.dot(cost.A_at(t) * x) + u.dot(cost.B_at(t) * u) + 2.0 * cost.C_at(t).dot(x) +
         2.0 * cost.D_at(t).dot(u);
}

struct BlockSums {
  double sum = 0.0;
  double sumsq = 0.0;
  std::int64_t ok = 0;
  std::int64_t flagged = 0;
};

// Deterministic MC reduction: per-path values are accumulated sequentially
// within fixed-size blocks, blocks combined in index order.
template <class PerPath>
MCEstimate mc_reduce(std::int64_t n, int workers, std::int64_t* flagged_out, PerPath&& per_path) {
  const std::int64_t nblocks = reduction_block_count(n);
  std::vector<BlockSums> blocks(nblocks);
  parallel_for_index(nblocks, workers, [&](std::int64_t b) {
    BlockSums bs;
    const std::int64_t lo = b * kReductionBlock, hi = std::min(n, lo + kReductionBlock);
    for (std::int64_t i = lo; i < hi; ++i) {
      double v;
      if (per_path(i, v)) {
        bs.sum += v;
        bs.sumsq += v * v;
        ++bs.ok;
      } else {
        ++bs.flagged;
      }
    }
    blocks[b] = bs;
  });
  BlockSums total;
  for (const auto& b : blocks) {
    total.sum += b.sum;
    total.sumsq += b.sumsq;
    total.ok += b.ok;
    total.flagged += b.flagged;
  }
  if (flagged_out) *flagged_out = total.flagged;
  if (total.flagged * 1000 > n)
    throw NumericError("more than 0.1% of paths hit non-finite states; estimates would be biased");
  if (total.ok == 0) throw NumericError("all paths were flagged non-finite");
  return MCEstimate::from_sums(total.sum, total.sumsq, total.ok);
}

}  // namespace

Trajectory simulate_state(const LQModel& model, const ControlPolicy& control, const SampledPath& path) {
  path.validate();
  if (path.dim != model.D) throw std::invalid_argument("path dimension mismatch");
  ItoDrift ito = strat_to_ito_drift(model);
  Trajectory traj;
  traj.times = path.times;
  traj.states.resize(path.samples(), model.N);
  traj.controls.resize(path.samples(), model.K);
  std::vector<const ControlPolicy*> ps{&control};
  traj.finite = run_joint(model, ito, ps, path,
                          [&](int i, double, const std::vector<Eigen::VectorXd>& x,
                              const std::vector<Eigen::VectorXd>& u) {
                            traj.states.row(i) = x[0];
                            traj.controls.row(i) = u[0];
                          });
  return traj;
}

MCEstimate estimate_cost(const LQModel& model, const CostSpec& cost, const ControlPolicy& control,
                         const std::vector<SampledPath>& paths, int workers, std::int64_t* flagged_out) {
  if (paths.size() < 2) throw std::invalid_argument("need at least 2 paths");
  ItoDrift ito = strat_to_ito_drift(model);
  std::vector<const ControlPolicy*> ps{&control};
  return mc_reduce(static_cast<std::int64_t>(paths.size()), workers, flagged_out,
                   [&](std::int64_t i, double& out) {
                     const SampledPath& path = paths[i];
                     double run = 0.0, prev = 0.0, xterm = 0.0;
                     bool ok = run_joint(model, ito, ps, path,
                                         [&](int s, double t, const std::vector<Eigen::VectorXd>& x,
                                             const std::vector<Eigen::VectorXd>& u) {
                                           double f = running_integrand(cost, t, x[0], u[0]);
                                           if (s > 0) run += 0.5 * (prev + f) * (t - path.times[s - 1]);
                                           prev = f;
                                           if (s == path.samples() - 1)
                                             xterm = x[0].dot(cost.E * x[0]) + 2.0 * cost.G.dot(x[0]);
                                         });
                     out = run + xterm;
                     return ok && std::isfinite(out);
                   });
}

MCEstimate estimate_control_distance(const LQModel& model, const ControlPolicy& control_a,
                                     const ControlPolicy& control_b, const std::vector<SampledPath>& paths,
                                     int workers, std::int64_t* flagged_out) {
  if (paths.size() < 2) throw std::invalid_argument("need at least 2 paths");
  ItoDrift ito = strat_to_ito_drift(model);
  std::vector<const ControlPolicy*> ps{&control_a, &control_b};
  return mc_reduce(static_cast<std::int64_t>(paths.size()), workers, flagged_out,
                   [&](std::int64_t i, double& out) {
                     const SampledPath& path = paths[i];
                     double run = 0.0, prev = 0.0;
                     bool ok = run_joint(model, ito, ps, path,
                                         [&](int s, double t, const std::vector<Eigen::VectorXd>&,
                                             const std::vector<Eigen::VectorXd>& u) {
                                           double f = (u[0] - u[1]).squaredNorm();
                                           if (s > 0) run += 0.5 * (prev + f) * (t - path.times[s - 1]);
                                           prev = f;
                                         });
                     out = run;
                     return ok && std::isfinite(out);
                   });
}

}  // namespace siglqc
