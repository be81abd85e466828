#ifndef GESTALT_EVALUATION_METRICS_HPP_
#define GESTALT_EVALUATION_METRICS_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gestalt/core/image.hpp"
#include "gestalt/ensemble/aggregate.hpp"

namespace gestalt {

/// Fraction of samples whose true label appears among the first K entries
/// of their ranked list.
inline double topk_accuracy(const std::vector<RankedList>& ranked_lists,
                            const std::vector<std::string>& labels, int K) {
  if (ranked_lists.size() != labels.size())
    throw LengthMismatch("topk: " + std::to_string(ranked_lists.size()) +
                         " lists vs " + std::to_string(labels.size()) +
                         " labels");
  if (K < 1) throw DataError("topk: K must be >= 1");
  if (ranked_lists.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ranked_lists.size(); ++i) {
    const auto& entries = ranked_lists[i].entries;
    const std::size_t limit = std::min<std::size_t>(K, entries.size());
    for (std::size_t k = 0; k < limit; ++k) {
      if (entries[k].first == labels[i]) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / ranked_lists.size();
}

/// Accuracies for several K at once, with the monotonicity invariant
/// enforced at runtime: accuracy(K) can never exceed accuracy(K') for
/// K < K'.
inline std::vector<double> topk_accuracies(
    const std::vector<RankedList>& ranked_lists,
    const std::vector<std::string>& labels, const std::vector<int>& ks) {
  std::vector<double> out;
  for (int k : ks) out.push_back(topk_accuracy(ranked_lists, labels, k));
  for (std::size_t i = 1; i < ks.size(); ++i)
    if (ks[i] > ks[i - 1] && out[i] + 1e-12 < out[i - 1])
      throw InternalError("top-K accuracy not monotone in K");
  return out;
}

/// counts[true][pred] over top-1 predictions; rows sum to class support.
inline std::vector<std::int64_t> confusion_matrix(
    const std::vector<std::string>& predictions,
    const std::vector<std::string>& labels,
    const std::vector<std::string>& class_names) {
  if (predictions.size() != labels.size())
    throw LengthMismatch("confusion: " + std::to_string(predictions.size()) +
                         " predictions vs " + std::to_string(labels.size()) +
                         " labels");
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < class_names.size(); ++i)
    index[class_names[i]] = static_cast<int>(i);
  const std::size_t c = class_names.size();
  std::vector<std::int64_t> counts(c * c, 0);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    auto t = index.find(labels[i]);
    auto p = index.find(predictions[i]);
    if (t == index.end()) throw UnknownLabel(labels[i]);
    if (p == index.end()) throw UnknownLabel(predictions[i]);
    counts[static_cast<std::size_t>(t->second) * c + p->second] += 1;
  }
  return counts;
}

/// Binary cohort metrics. Denominators that cannot be formed stay absent
/// rather than reading as 0; an entirely missing cohort is an error.
struct BinaryMetrics {
  std::int64_t tp = 0, fn = 0, tn = 0, fp = 0;
  std::optional<double> accuracy;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
};

inline BinaryMetrics binary_metrics(const std::vector<bool>& predicted_positive,
                                    const std::vector<bool>& actual_positive) {
  if (predicted_positive.size() != actual_positive.size())
    throw LengthMismatch("binary metrics input lengths differ");
  if (predicted_positive.empty()) throw EmptyCohort("no samples");
  BinaryMetrics m;
  for (std::size_t i = 0; i < predicted_positive.size(); ++i) {
    if (actual_positive[i])
      (predicted_positive[i] ? m.tp : m.fn) += 1;
    else
      (predicted_positive[i] ? m.fp : m.tn) += 1;
  }
  if (m.tp + m.fn == 0) throw EmptyCohort("positive cohort absent");
  if (m.tn + m.fp == 0) throw EmptyCohort("negative cohort absent");
  const std::int64_t n = m.tp + m.fn + m.tn + m.fp;
  m.accuracy = static_cast<double>(m.tp + m.tn) / n;
  m.sensitivity = static_cast<double>(m.tp) / (m.tp + m.fn);
  m.specificity = static_cast<double>(m.tn) / (m.tn + m.fp);
  return m;
}

/// Per-pixel arithmetic mean of aligned cohort images.
inline Image composite_photo(const std::vector<Image>& aligned_images) {
  if (aligned_images.empty()) throw EmptyCohort("composite of no images");
  const Image& first = aligned_images.front();
  Image out(first.width, first.height, first.channels);
  for (const auto& img : aligned_images) {
    if (img.width != first.width || img.height != first.height ||
        img.channels != first.channels)
      throw ShapeMismatch("composite inputs differ in size");
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += img.data[i];
  }
  for (auto& v : out.data) v /= static_cast<float>(aligned_images.size());
  return out;
}

}  // namespace gestalt

#endif  // GESTALT_EVALUATION_METRICS_HPP_
