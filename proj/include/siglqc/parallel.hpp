#pragma once

#include <cstdint>
#include <omp.h>

namespace siglqc {

// Paths per reduction block.  Partial sums are accumulated sequentially
// within each block and blocks are combined in index order, so results are
// bit-identical for any worker count.
inline constexpr std::int64_t kReductionBlock = 32;

inline int effective_workers(int workers) { return workers > 0 ? workers : omp_get_max_threads(); }

template <class F>
void parallel_for_index(std::int64_t n, int workers, F&& body) {
  const int w = effective_workers(workers);
#pragma omp parallel for schedule(dynamic, 1) num_threads(w)
  for (std::int64_t i = 0; i < n; ++i) body(i);
}

inline std::int64_t reduction_block_count(std::int64_t n) {
  return (n + kReductionBlock - 1) / kReductionBlock;
}

}  // namespace siglqc
