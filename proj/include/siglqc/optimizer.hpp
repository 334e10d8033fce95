#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "siglqc/lq_model.hpp"

namespace siglqc {

// Ordered coordinates of the control parameter space: coordinate k in 1..K
// crossed with every word of length <= level, coordinate-major, words in
// canonical order.
class ControlBasis {
 public:
  ControlBasis(int K, int alphabet_size, int level);

  int K() const { return K_; }
  int alphabet_size() const { return alphabet_; }
  int level() const { return level_; }
  const std::vector<Word>& words() const { return words_; }
  int dim() const { return K_ * static_cast<int>(words_.size()); }

  // Flat index of (coordinate k, word index w).
  int index(int k, int w) const { return k * static_cast<int>(words_.size()) + w; }

 private:
  int K_, alphabet_, level_;
  std::vector<Word> words_;
};

ControlTensor to_control_tensor(const Eigen::VectorXd& v, const ControlBasis& basis);
Eigen::VectorXd flatten(const ControlTensor& u, const ControlBasis& basis);

// v' H v + g' v + c0 with H symmetric.
struct QuadraticForm {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  double c0 = 0.0;

  double value(const Eigen::VectorXd& v) const { return v.dot(H * v) + g.dot(v) + c0; }
};

using CostEvaluator = std::function<double(const ControlTensor&)>;

// Recovers the quadratic form of an exactly quadratic evaluator from
// 1 + 2P + P(P-1)/2 black-box probes: the constant from the zero control,
// diagonal and linear terms from +/- basis probes, and cross terms from
// pair probes with the linear parts subtracted.  Probes may run in
// parallel; the result does not depend on evaluation order.
QuadraticForm extract_quadratic(const CostEvaluator& evaluator, const ControlBasis& basis, int workers = 0);

// Builds the evaluator u -> <J^L(u), ES> for the given problem.
CostEvaluator make_cost_evaluator(const LQModel& model, const CostSpec& cost, int state_level,
                                  const TruncatedTensor& expected_signature);

// Direct assembly of the same quadratic from the affine dependence of the
// state tensor on the control coefficients; used as a cross-check of the
// probing route.
QuadraticForm assemble_quadratic_direct(const LQModel& model, const CostSpec& cost, int state_level,
                                        const TruncatedTensor& expected_signature, const ControlBasis& basis);

struct ConvexityReport {
  bool strictly_convex = false;
  double min_eigenvalue = 0.0;
  double threshold = 0.0;
};

// Strict convexity iff the smallest eigenvalue of H exceeds 1e-10 (1 + |H|).
ConvexityReport check_strict_convexity(const QuadraticForm& Q);

struct MinimizeResult {
  Eigen::VectorXd v;
  double value = 0.0;
  double residual = 0.0;   // |2 H v + g|
  bool used_fallback = false;
};

// Solves the first-order condition 2 H v = -g by an SPD factorization, with
// a least-squares pseudo-inverse fallback when the spectrum is within 10x of
// the PD threshold.  Throws NumericError when H is not positive definite.
MinimizeResult minimize_quadratic(const QuadraticForm& Q);

// H (dense), g, c0 as CSV for external inspection.
std::string quadratic_to_csv(const QuadraticForm& Q);

}  // namespace siglqc
