#pragma once

#include "siglqc/lq_model.hpp"
#include "siglqc/signature.hpp"
#include "siglqc/simulation.hpp"

// Serial reference implementations. Slower, independently coded routes kept
// for testing the production kernels and for the benchmark target.
namespace siglqc::reference {

// Shuffle via the deshuffle coproduct: the coefficient of word w is the sum
// over position subsets S of a^{w[S]} b^{w[S^c]}.  Exponential in |w|; test
// sizes only.
TruncatedTensor shuffle(const TruncatedTensor& a, const TruncatedTensor& b, int level);

// Signature via sparse tensor arithmetic: each segment's exponential summed
// term by term, segments combined with the sparse concatenation product.
TruncatedTensor signature_of_path(const SampledPath& path, int level);

// Plain sequential loop, naive accumulation order.
ExpectedSignatureEstimate mc_expected_signature(const std::vector<SampledPath>& paths, int level);

// Plain sequential per-path cost loop.
MCEstimate estimate_cost(const LQModel& model, const CostSpec& cost, const ControlPolicy& control,
                         const std::vector<SampledPath>& paths);

}  // namespace siglqc::reference
