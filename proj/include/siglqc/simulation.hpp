#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <vector>

#include "siglqc/lq_model.hpp"
#include "siglqc/signature.hpp"

namespace siglqc {

enum class DriverKind { brownian, fbm };

struct DriverConfig {
  DriverKind kind = DriverKind::brownian;
  double hurst = 0.5;  // fbm only
  int D = 1;
  int steps = 1000;
  double T = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct MCEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::int64_t n_paths = 0;
  std::pair<double, double> ci95{0.0, 0.0};

  static MCEstimate from_sums(double sum, double sumsq, std::int64_t n);
};

// Generates one path per index, reproducibly: path i consumes only the
// substream (seed, i).  fBm uses the Davies-Harte circulant embedding with a
// Cholesky fallback when the embedding has negative eigenvalues.
class DriverSampler {
 public:
  explicit DriverSampler(const DriverConfig& cfg);
  ~DriverSampler();

  const DriverConfig& config() const { return cfg_; }
  bool used_cholesky_fallback() const;
  SampledPath sample(std::int64_t path_index) const;

 private:
  DriverConfig cfg_;
  struct FbmState;
  std::shared_ptr<const FbmState> fbm_;  // per-dimension spectral data, shared across samples
};

std::vector<SampledPath> generate_paths(const DriverConfig& cfg, std::int64_t n, int workers = 0);

// Ito-corrected drift for simulating the Stratonovich dynamics:
//   b0 -> b0 + 1/2 sum_{d,n'} sigma2^(n,d,n') sigma0^(n',d)
//   b2 -> b2 + 1/2 sum_{d,n'} sigma2^(n,d,n') sigma2^(n',d, .)
struct ItoDrift {
  Eigen::VectorXd b0;
  Eigen::MatrixXd b2;
};
ItoDrift strat_to_ito_drift(const LQModel& model);

// A control evaluated along a simulated path.  The signature argument holds
// the driver's time-extended signature up to the current grid point only.
class ControlPolicy {
 public:
  virtual ~ControlPolicy() = default;
  virtual int signature_level() const = 0;
  virtual void eval(double t, const SignatureState& sig, const Eigen::VectorXd& x,
                    Eigen::VectorXd& u_out) const = 0;
};

class SignatureControl final : public ControlPolicy {
 public:
  explicit SignatureControl(ControlTensor u);
  int signature_level() const override { return level_; }
  void eval(double t, const SignatureState& sig, const Eigen::VectorXd& x,
            Eigen::VectorXd& u_out) const override;

 private:
  int level_;
  std::vector<PairingPlan> plans_;
};

class ConstantControl final : public ControlPolicy {
 public:
  explicit ConstantControl(Eigen::VectorXd u) : u_(std::move(u)) {}
  int signature_level() const override { return 0; }
  void eval(double, const SignatureState&, const Eigen::VectorXd&, Eigen::VectorXd& u_out) const override {
    u_out = u_;
  }

 private:
  Eigen::VectorXd u_;
};

// Backward Riccati solution for the 1-d problem; value function
// V(t,x) = P x^2 + 2 psi x + chi, feedback u*(t,x) = -(b1(Px+psi)+D(t))/B(t).
struct RiccatiSolution {
  std::vector<double> grid;
  std::vector<double> P, psi, chi;
  double b1 = 0.0;
  double T = 0.0;
  std::vector<double> Bm, Dm;  // scalar cost polynomial coefficients

  double B_at(double t) const;
  double D_at(double t) const;
  double value(double x0) const { return P[0] * x0 * x0 + 2.0 * psi[0] * x0 + chi[0]; }
  double feedback(double t, double x) const;  // linear interpolation in t
};

RiccatiSolution riccati_solve(const LQModel& model, const CostSpec& cost, int grid_steps);

class RiccatiFeedback final : public ControlPolicy {
 public:
  explicit RiccatiFeedback(const RiccatiSolution& sol) : sol_(&sol) {}
  int signature_level() const override { return 0; }
  void eval(double t, const SignatureState&, const Eigen::VectorXd& x, Eigen::VectorXd& u_out) const override {
    u_out.resize(1);
    u_out[0] = sol_->feedback(t, x[0]);
  }

 private:
  const RiccatiSolution* sol_;
};

struct Trajectory {
  bool finite = true;
  std::vector<double> times;
  Eigen::MatrixXd states;    // (steps+1) x N
  Eigen::MatrixXd controls;  // (steps+1) x K
};

// Euler-Maruyama on the Ito-corrected dynamics.  At each grid point the
// signature is current up to that point and the control is evaluated before
// the step consumes the next increment (non-anticipative).
Trajectory simulate_state(const LQModel& model, const ControlPolicy& control, const SampledPath& path);

// Per-path cost: trapezoidal running integrand plus terminal term.
// Non-finite paths are excluded and counted; throws NumericError when more
// than 0.1% of paths are flagged.
MCEstimate estimate_cost(const LQModel& model, const CostSpec& cost, const ControlPolicy& control,
                         const std::vector<SampledPath>& paths, int workers = 0,
                         std::int64_t* flagged_out = nullptr);

// MC estimate of E int_0^T |u_a - u_b|^2 dt on common noise; each control
// rides its own simulated state.
MCEstimate estimate_control_distance(const LQModel& model, const ControlPolicy& control_a,
                                     const ControlPolicy& control_b, const std::vector<SampledPath>& paths,
                                     int workers = 0, std::int64_t* flagged_out = nullptr);

}  // namespace siglqc
