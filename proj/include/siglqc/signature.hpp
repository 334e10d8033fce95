#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "siglqc/tensor.hpp"

namespace siglqc {

// A sampled D-dimensional driver path on a strictly increasing grid starting
// at 0.  Values are stored row-major: values[i * dim + d].
struct SampledPath {
  int dim = 0;
  std::vector<double> times;
  std::vector<double> values;

  int samples() const { return static_cast<int>(times.size()); }
  double value(int i, int d) const { return values[static_cast<std::size_t>(i) * dim + d]; }
  void validate() const;
};

// Streaming truncated signature of the time-extended path t -> (t, W_t),
// updated per increment via Chen's identity.  The stored tensor is
// group-like: the empty-word coefficient is exactly 1 and the pure time
// words carry t^m/m!.
class SignatureState {
 public:
  SignatureState(int driver_dim, int level);

  int driver_dim() const { return dim_; }
  int alphabet_size() const { return dim_ + 1; }
  int level() const { return level_; }
  double current_time() const { return time_; }

  // In-place Chen update with a linear segment (dt, dw).  dw has driver_dim
  // entries; dt must be positive.
  void advance(double dt, std::span<const double> dw);

  double coeff(const Word& w) const;
  TruncatedTensor tensor() const { return tensor_.to_sparse(); }
  const detail::DenseTensor& dense() const { return tensor_; }

 private:
  int dim_;
  int level_;
  double time_;
  detail::DenseTensor tensor_;
  std::vector<std::vector<double>> seg_;  // scratch: segment exponential levels
};

// Value-semantics Chen step.
SignatureState chen_step(const SignatureState& state, double dt, std::span<const double> dw);

// Fold of chen_step over consecutive increments of the path.
SignatureState signature_of_path(const SampledPath& path, int level);

// Pairing of a sparse tensor against a streaming signature.
double pair(const TruncatedTensor& ell, const SignatureState& sig);

// Precomputed (level, rank, coefficient) triples for repeated pairings of a
// fixed tensor against streaming signatures of one alphabet.
class PairingPlan {
 public:
  PairingPlan() = default;
  PairingPlan(const TruncatedTensor& t, int max_level);
  double eval(const detail::DenseTensor& d) const;

 private:
  struct Term {
    int level;
    std::uint64_t rank;
    double c;
  };
  std::vector<Term> terms_;
};

// Closed-form expected signature of D-dimensional Brownian motion, time
// extended, at horizon T: sum_n T^n/n! (time-letter + 1/2 sum_d a(d+1) (x)
// a(d+1))^{(x)n}, truncated at `level`.
TruncatedTensor fawcett_expected_signature(double T, int D, int level);

struct ExpectedSignatureEstimate {
  TruncatedTensor mean;
  TruncatedTensor stderr_;  // coordinatewise standard error of the mean
};

// Coordinatewise Monte-Carlo mean and standard error of signature_of_path
// over the given paths (identical grids required).  Deterministic for any
// worker count: per-path signatures are accumulated into fixed-size blocks
// combined in index order.
ExpectedSignatureEstimate mc_expected_signature(const std::vector<SampledPath>& paths, int level,
                                                int workers = 0);

// Path CSV: header "t,w1,...,wD", one row per sample.
void write_path_csv(std::ostream& os, const SampledPath& path);
SampledPath read_path_csv(std::istream& is);

}  // namespace siglqc
