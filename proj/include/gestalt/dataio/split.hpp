#ifndef GESTALT_DATAIO_SPLIT_HPP_
#define GESTALT_DATAIO_SPLIT_HPP_

#include <cstdint>
#include <sstream>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gestalt/core/image.hpp"
#include "gestalt/core/rng.hpp"
#include "gestalt/dataio/manifest.hpp"

namespace gestalt {

struct IndexSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::string> singleton_classes;  // size-1 classes, sent to train
};

/// Per-class stratified index split shared by manifest- and crop-level
/// splitting. Deterministic given seed; classes with one sample go to train.
template <typename Label>
IndexSplit stratified_split_indices(const std::vector<Label>& labels,
                                    double train_fraction,
                                    std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw DataError("train fraction must be in (0,1), got " +
                    std::to_string(train_fraction));
  std::map<Label, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class[labels[i]].push_back(i);

  IndexSplit result;
  std::uint64_t class_no = 0;
  for (auto& [label, idx] : by_class) {
    Rng rng(derive_seed(seed, {0x5714ULL, class_no++}));
    rng.shuffle(idx);
    std::size_t n_train;
    if (idx.size() == 1) {
      std::ostringstream name;
      name << label;
      result.singleton_classes.push_back(name.str());
      n_train = 1;
    } else {
      n_train = static_cast<std::size_t>(
          std::floor(train_fraction * idx.size() + 0.5));
      if (n_train == 0) n_train = 1;
      if (n_train > idx.size()) n_train = idx.size();
    }
    for (std::size_t k = 0; k < idx.size(); ++k)
      (k < n_train ? result.train : result.val).push_back(idx[k]);
  }
  std::sort(result.train.begin(), result.train.end());
  std::sort(result.val.begin(), result.val.end());
  return result;
}

struct SplitResult {
  Dataset train;
  Dataset val;
  std::vector<std::string> singleton_classes;
};

/// Disjoint, exhaustive, per-class stratified split of a dataset handle.
inline SplitResult split_dataset(const Dataset& dataset, double train_fraction,
                                 std::uint64_t seed) {
  std::vector<std::string> labels;
  labels.reserve(dataset.size());
  for (const auto& r : dataset.records()) labels.push_back(r.label);
  IndexSplit idx = stratified_split_indices(labels, train_fraction, seed);
  SplitResult result;
  result.singleton_classes = std::move(idx.singleton_classes);
  result.train = dataset.subset(idx.train);
  result.val = dataset.subset(idx.val);
  return result;
}

struct DedupReport {
  struct Removal {
    std::string id;
    std::string reason;  // "duplicate-of-train" or "duplicate-in-test"
  };
  std::vector<Removal> removed;
};

using ImageHashFn = std::function<std::uint64_t(const SampleRecord&)>;

/// Drops test records whose decoded grayscale content hash appears in the
/// training set, and all but the first of any identical pair within the
/// test set itself.
inline std::pair<Dataset, DedupReport> deduplicate_and_exclude(
    const Dataset& test_set, const Dataset& train_set,
    const ImageHashFn& hash_fn) {
  std::set<std::uint64_t> train_hashes;
  for (const auto& r : train_set.records()) train_hashes.insert(hash_fn(r));
  DedupReport report;
  std::set<std::uint64_t> seen;
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    const auto& r = test_set.records()[i];
    const std::uint64_t h = hash_fn(r);
    if (train_hashes.count(h)) {
      report.removed.push_back({r.id, "duplicate-of-train"});
    } else if (!seen.insert(h).second) {
      report.removed.push_back({r.id, "duplicate-in-test"});
    } else {
      keep.push_back(i);
    }
  }
  return {test_set.subset(keep), std::move(report)};
}

/// Default hash: load the image from disk and hash decoded gray pixels.
inline ImageHashFn manifest_image_hasher(const Dataset& ds) {
  return [&ds](const SampleRecord& r) {
    return Image::load(ds.resolve(r.image_path)).content_hash();
  };
}

}  // namespace gestalt

#endif  // GESTALT_DATAIO_SPLIT_HPP_
