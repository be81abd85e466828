#ifndef GESTALT_CORE_PARALLEL_HPP_
#define GESTALT_CORE_PARALLEL_HPP_

#include <cstdint>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gestalt {

namespace detail {
inline int& worker_count_storage() {
  static int n = 0;  // 0 = not set yet, resolve to hardware concurrency
  return n;
}
}  // namespace detail

/// Worker parallelism degree. Defaults to the available cores; the CLI
/// exposes it as --threads. Results are bit-identical for any setting:
/// parallel regions only ever write disjoint outputs, and all cross-item
/// reductions happen sequentially in index order.
inline int worker_count() {
  int n = detail::worker_count_storage();
  if (n > 0) return n;
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

inline void set_worker_count(int n) { detail::worker_count_storage() = n; }

/// Runs fn(i) for i in [0, n). fn must not touch shared mutable state
/// except through disjoint writes.
template <typename F>
void parallel_for(std::int64_t n, F&& fn) {
#ifdef _OPENMP
  if (worker_count() > 1 && n > 1) {
#pragma omp parallel for schedule(static) num_threads(worker_count())
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
#endif
  for (std::int64_t i = 0; i < n; ++i) fn(i);
}

}  // namespace gestalt

#endif  // GESTALT_CORE_PARALLEL_HPP_
