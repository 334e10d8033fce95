#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "siglqc/tensor.hpp"

namespace siglqc {

// Constant-coefficient controlled linear SDE in Stratonovich form:
//   dX^(n) = [b0^(n) + sum_k b1^(n,k) u^(k) + sum_n' b2^(n,n') X^(n')] dt
//          + sum_d [sigma0^(n,d) + sum_n' sigma2^(n,d,n') X^(n')] o dW^(d).
struct LQModel {
  int N = 0, K = 0, D = 0;
  Eigen::VectorXd x0;                  // N
  Eigen::VectorXd b0;                  // N
  Eigen::MatrixXd b1;                  // N x K
  Eigen::MatrixXd b2;                  // N x N
  Eigen::MatrixXd sigma0;              // N x D
  std::vector<Eigen::MatrixXd> sigma2; // D matrices, each N x N: sigma2[d](n,n')
  double T = 0.0;

  void validate() const;
};

// Polynomial-in-time cost matrices: A(t) = sum_m t^m/m! A_m, etc.  Running
// cost x'A(t)x + u'B(t)u + 2C(t)'x + 2D(t)'u, terminal x'Ex + 2G'x.
struct CostSpec {
  int degree = 0;                    // highest polynomial index M_poly
  std::vector<Eigen::MatrixXd> A;    // degree+1 of N x N, symmetric
  std::vector<Eigen::MatrixXd> B;    // degree+1 of K x K, symmetric
  std::vector<Eigen::VectorXd> C;    // degree+1 of N
  std::vector<Eigen::VectorXd> D;    // degree+1 of K
  Eigen::MatrixXd E;                 // N x N, symmetric
  Eigen::VectorXd G;                 // N

  Eigen::MatrixXd A_at(double t) const;
  Eigen::MatrixXd B_at(double t) const;
  Eigen::VectorXd C_at(double t) const;
  Eigen::VectorXd D_at(double t) const;
  void validate(int N, int K) const;
};

struct LQProblem {
  LQModel model;
  CostSpec cost;
};

// Loads { "model": {...}, "cost": {...} } from a JSON file; dimension and
// symmetry errors are reported with the offending field name.
LQProblem load_problem(const std::string& path);
LQProblem parse_problem(const std::string& json_text);

// Positive-definiteness report for A(t) (PSD) and B(t) (PD), sampled on an
// equispaced grid of 101 points on [0, T].
struct PositivityReport {
  bool a_psd = true;
  bool b_pd = true;
  double min_eig_A = 0.0;
  double min_eig_B = 0.0;
};
PositivityReport check_cost_positivity(const CostSpec& cost, double T);

// Per-coordinate control tensors u^(k), k = 1..K, all of one level M.
struct ControlTensor {
  std::vector<TruncatedTensor> coord;

  static ControlTensor zero(int K, int alphabet_size, int level);
  int K() const { return static_cast<int>(coord.size()); }
  int level() const { return coord.front().level(); }
  int alphabet_size() const { return coord.front().alphabet_size(); }
};

// Per-coordinate state tensors x^(n), n = 1..N.
struct StateTensor {
  std::vector<TruncatedTensor> coord;

  int N() const { return static_cast<int>(coord.size()); }
};

// The inhomogeneous part p and the level-1 feedback part q of the state
// tensor equation x^(n) = p^(n) + sum_n' x^(n') (x) q^(n,n').
struct StateEquation {
  std::vector<TruncatedTensor> p;               // N entries, level <= M+1
  std::vector<std::vector<TruncatedTensor>> q;  // q[n][n'], pure level 1
};

StateEquation build_pq(const LQModel& model, const ControlTensor& u);

// Unique solution of the state tensor equation up to word length L, built
// level by level (each coefficient only reads strictly shorter words).
StateTensor solve_state_tensor(const StateEquation& eq, int level);

// Checks |x^(n,v)| <= C^|v| for every stored word, with C taken as the max
// of the low-level rate (levels up to the length of p) and the max row sum
// of q.  Returns the constant through C_out when given.
bool growth_bound_check(const StateTensor& x, const StateEquation& eq, double* C_out = nullptr);

// The truncated cost tensor J^L(u); pair it with the expected signature at
// the horizon to get the cost.  level_J should be at least
// max(2*state level, 2*control level) + cost degree + 1 so that no term is
// truncated away.
TruncatedTensor build_cost_tensor(const LQModel& model, const CostSpec& cost, const ControlTensor& u,
                                  const StateTensor& x, int level_J);

double evaluate_cost(const TruncatedTensor& J_tensor, const TruncatedTensor& expected_signature);

// No-loss cost tensor depth for state level L, control level M.
inline int cost_tensor_level(int L, int M, int degree) { return std::max(2 * L, 2 * M) + degree + 1; }

}  // namespace siglqc
