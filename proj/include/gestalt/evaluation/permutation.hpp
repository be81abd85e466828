#ifndef GESTALT_EVALUATION_PERMUTATION_HPP_
#define GESTALT_EVALUATION_PERMUTATION_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "gestalt/core/rng.hpp"
#include "gestalt/ensemble/aggregate.hpp"

namespace gestalt {

struct PermutationResult {
  int k = 0;
  std::int64_t draws = 0;
  double observed = 0.0;  // top-K accuracy on the true labels
  double mean = 0.0;      // over permuted label assignments
  double sd = 0.0;        // sample standard deviation
  double p_value = 1.0;   // add-one estimator, never exactly 0
};

namespace detail {

/// Top-K membership masks per sample, over a compact class-id space; lets a
/// permutation draw run in O(N).
struct TopKMasks {
  std::size_t n = 0;
  std::size_t words = 0;
  std::vector<std::uint64_t> bits;  // n * words
  std::vector<int> label_ids;       // true label per sample

  bool hit(std::size_t sample, int cls) const {
    return (bits[sample * words + cls / 64] >> (cls % 64)) & 1u;
  }
};

inline TopKMasks build_topk_masks(const std::vector<RankedList>& ranked,
                                  const std::vector<std::string>& labels,
                                  int K) {
  if (ranked.size() != labels.size())
    throw LengthMismatch("permutation: " + std::to_string(ranked.size()) +
                         " lists vs " + std::to_string(labels.size()) +
                         " labels");
  std::map<std::string, int> ids;
  for (const auto& rl : ranked)
    for (const auto& [label, score] : rl.entries)
      ids.emplace(label, 0);
  for (const auto& label : labels) ids.emplace(label, 0);
  int next = 0;
  for (auto& [label, id] : ids) id = next++;

  TopKMasks m;
  m.n = ranked.size();
  m.words = (ids.size() + 63) / 64;
  m.bits.assign(m.n * m.words, 0);
  for (std::size_t i = 0; i < m.n; ++i) {
    const auto& entries = ranked[i].entries;
    const std::size_t limit = std::min<std::size_t>(K, entries.size());
    for (std::size_t k = 0; k < limit; ++k) {
      const int cls = ids.at(entries[k].first);
      m.bits[i * m.words + cls / 64] |= 1ull << (cls % 64);
    }
  }
  for (const auto& label : labels) m.label_ids.push_back(ids.at(label));
  return m;
}

inline std::int64_t count_hits(const TopKMasks& m, const std::vector<int>& labels) {
  std::int64_t hits = 0;
  for (std::size_t i = 0; i < m.n; ++i) hits += m.hit(i, labels[i]) ? 1 : 0;
  return hits;
}

}  // namespace detail

/// Null distribution of top-K accuracy under label permutation: the
/// predictions stay fixed, the test-set labels are permuted uniformly
/// `draws` times, and the accuracy statistic is collected per draw. Each
/// draw runs from its own seed derived from the master, so results are
/// reproducible and independent of any execution order. Returns the sample
/// mean, sample sd, and the add-one p-value
///   p = (1 + #{draws >= observed}) / (draws + 1),
/// which is never exactly zero.
inline PermutationResult permutation_test(
    const std::vector<RankedList>& ranked_lists,
    const std::vector<std::string>& labels, int K,
    std::int64_t draws = 1000000, std::uint64_t seed = 0) {
  if (draws < 1) throw DataError("permutation test needs draws >= 1");
  const detail::TopKMasks masks = detail::build_topk_masks(ranked_lists, labels, K);
  const std::int64_t n = static_cast<std::int64_t>(masks.n);
  if (n == 0) throw LengthMismatch("permutation test on empty input");

  PermutationResult result;
  result.k = K;
  result.draws = draws;
  const std::int64_t observed_hits = detail::count_hits(masks, masks.label_ids);
  result.observed = static_cast<double>(observed_hits) / n;

  // integer hit counts make the reduction exact and order-free
  std::int64_t sum_hits = 0;
  __int128 sum_sq = 0;
  std::int64_t at_least = 0;
  std::vector<int> permuted = masks.label_ids;
  for (std::int64_t d = 0; d < draws; ++d) {
    Rng rng(derive_seed(seed, {0x9e47, static_cast<std::uint64_t>(d)}));
    rng.shuffle(permuted);
    const std::int64_t hits = detail::count_hits(masks, permuted);
    sum_hits += hits;
    sum_sq += static_cast<__int128>(hits) * hits;
    if (hits >= observed_hits) ++at_least;
  }
  const double mean_hits = static_cast<double>(sum_hits) / draws;
  result.mean = mean_hits / n;
  if (draws > 1) {
    const double var_hits =
        (static_cast<double>(sum_sq) - draws * mean_hits * mean_hits) /
        (draws - 1);
    result.sd = std::sqrt(std::max(0.0, var_hits)) / n;
  }
  result.p_value = static_cast<double>(1 + at_least) / (draws + 1);
  if (result.p_value <= 0.0 || result.p_value > 1.0)
    throw InternalError("p-value outside (0,1]");
  return result;
}

/// Exact mean of the permutation null via the closed form
///   E[acc] = (1/N^2) * sum_i sum_{c in topK(i)} n_c,
/// with n_c the multiplicity of label c in the test set. Oracle for the
/// sampled estimate.
inline double permutation_exact_mean(const std::vector<RankedList>& ranked_lists,
                                     const std::vector<std::string>& labels,
                                     int K) {
  const detail::TopKMasks masks = detail::build_topk_masks(ranked_lists, labels, K);
  std::map<int, std::int64_t> counts;
  for (int id : masks.label_ids) counts[id] += 1;
  const double n = static_cast<double>(masks.n);
  double acc = 0.0;
  for (std::size_t i = 0; i < masks.n; ++i)
    for (const auto& [cls, cnt] : counts)
      if (masks.hit(i, cls)) acc += static_cast<double>(cnt);
  return acc / (n * n);
}

/// Brute-force mean over all N! label arrangements; feasible for N <= 8.
inline double permutation_exhaustive_mean(
    const std::vector<RankedList>& ranked_lists,
    const std::vector<std::string>& labels, int K) {
  const detail::TopKMasks masks = detail::build_topk_masks(ranked_lists, labels, K);
  if (masks.n > 8) throw DataError("exhaustive enumeration limited to N <= 8");
  std::vector<int> order(masks.n);
  std::iota(order.begin(), order.end(), 0);
  std::int64_t total_hits = 0, perms = 0;
  std::vector<int> arranged(masks.n);
  do {
    for (std::size_t i = 0; i < masks.n; ++i)
      arranged[i] = masks.label_ids[order[i]];
    total_hits += detail::count_hits(masks, arranged);
    ++perms;
  } while (std::next_permutation(order.begin(), order.end()));
  return static_cast<double>(total_hits) /
         (static_cast<double>(perms) * masks.n);
}

}  // namespace gestalt

#endif  // GESTALT_EVALUATION_PERMUTATION_HPP_
