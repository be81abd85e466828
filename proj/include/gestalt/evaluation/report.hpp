#ifndef GESTALT_EVALUATION_REPORT_HPP_
#define GESTALT_EVALUATION_REPORT_HPP_

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gestalt/core/version.hpp"
#include "gestalt/evaluation/metrics.hpp"
#include "gestalt/evaluation/permutation.hpp"

namespace gestalt {

/// Full evaluation output. Serialized as a line-oriented text document
/// ("gestalt-eval-report v1"); the writer is deterministic so identical
/// runs produce byte-identical reports.
struct EvalReport {
  int sample_count = 0;
  int class_count = 0;
  std::vector<int> k_values;
  std::vector<double> topk;                 // aligned with k_values
  std::vector<PermutationResult> permutation;
  std::vector<std::pair<std::string, double>> per_region_topk;
  int per_region_k = 0;
  std::vector<std::string> class_names;     // confusion axis order
  std::vector<std::int64_t> confusion;      // class_count^2, row-major; may be empty
  std::optional<BinaryMetrics> binary;
  std::vector<std::pair<std::string, std::string>> context;  // seed, config, ...

  void add_context(const std::string& key, const std::string& value) {
    context.emplace_back(key, value);
  }

  std::string serialize() const {
    std::ostringstream out;
    char buf[160];
    out << "gestalt-eval-report v1\n";
    out << "generator: gestalt " << kVersion << "\n";
    out << "samples: " << sample_count << "\n";
    out << "classes: " << class_count << "\n";
    for (std::size_t i = 0; i < k_values.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "top-%d: %.6f\n", k_values[i], topk[i]);
      out << buf;
    }
    for (const auto& p : permutation) {
      std::snprintf(buf, sizeof(buf),
                    "permutation-top-%d: draws=%lld mean=%.6f sd=%.6f "
                    "p=%.9g observed=%.6f\n",
                    p.k, static_cast<long long>(p.draws), p.mean, p.sd,
                    p.p_value, p.observed);
      out << buf;
    }
    for (const auto& [region, acc] : per_region_topk) {
      std::snprintf(buf, sizeof(buf), "region-top-%d %s: %.6f\n",
                    per_region_k, region.c_str(), acc);
      out << buf;
    }
    if (binary) {
      std::snprintf(buf, sizeof(buf),
                    "binary-counts: tp=%lld fn=%lld tn=%lld fp=%lld\n",
                    static_cast<long long>(binary->tp),
                    static_cast<long long>(binary->fn),
                    static_cast<long long>(binary->tn),
                    static_cast<long long>(binary->fp));
      out << buf;
      auto emit = [&](const char* name, const std::optional<double>& v) {
        if (v) {
          std::snprintf(buf, sizeof(buf), "binary-%s: %.6f\n", name, *v);
          out << buf;
        } else {
          out << "binary-" << name << ": absent\n";
        }
      };
      emit("accuracy", binary->accuracy);
      emit("sensitivity", binary->sensitivity);
      emit("specificity", binary->specificity);
    }
    if (!confusion.empty()) {
      out << "confusion-classes:";
      for (const auto& c : class_names) out << " " << c;
      out << "\nconfusion-matrix:\n";
      const std::size_t c = class_names.size();
      for (std::size_t i = 0; i < c; ++i) {
        for (std::size_t j = 0; j < c; ++j)
          out << (j ? " " : "") << confusion[i * c + j];
        out << "\n";
      }
    }
    if (!context.empty()) {
      out << "context:\n";
      for (const auto& [k, v] : context) {
        out << "  " << k << " = ";
        for (char ch : v)
          if (ch == '\n')
            out << "\n  " << k << " = ";
          else
            out << ch;
        out << "\n";
      }
    }
    return out.str();
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write report: " + path);
    out << serialize();
  }
};

// ---------------------------------------------------------------------------
// Plot rendering. Plain grayscale PGM output keeps the artifact hermetic.

/// Confusion heatmap: one cell block per (true, predicted) pair, intensity
/// proportional to the row-normalized count.
inline Image render_confusion_heatmap(const std::vector<std::int64_t>& counts,
                                      std::size_t classes, int cell = 24) {
  if (classes == 0 || counts.size() != classes * classes)
    throw ShapeMismatch("confusion heatmap input");
  const int size = static_cast<int>(classes) * cell;
  Image img(size, size, 1);
  for (std::size_t i = 0; i < classes; ++i) {
    std::int64_t row_total = 0;
    for (std::size_t j = 0; j < classes; ++j) row_total += counts[i * classes + j];
    for (std::size_t j = 0; j < classes; ++j) {
      const float v = row_total
                          ? static_cast<float>(counts[i * classes + j]) / row_total
                          : 0.0f;
      for (int y = 0; y < cell; ++y)
        for (int x = 0; x < cell; ++x)
          img.at(0, static_cast<int>(i) * cell + y,
                 static_cast<int>(j) * cell + x) = v;
    }
  }
  // thin grid lines
  for (std::size_t i = 1; i < classes; ++i) {
    for (int k = 0; k < size; ++k) {
      img.at(0, static_cast<int>(i) * cell, k) = 0.5f;
      img.at(0, k, static_cast<int>(i) * cell) = 0.5f;
    }
  }
  return img;
}

/// Accuracy bar chart: one bar per (label, value in [0,1]) pair.
inline Image render_accuracy_bars(
    const std::vector<std::pair<std::string, double>>& values, int bar_width = 24,
    int height = 120) {
  if (values.empty()) throw EmptyCohort("bar chart of nothing");
  const int gap = 6;
  const int width = static_cast<int>(values.size()) * (bar_width + gap) + gap;
  Image img(width, height, 1);
  for (auto& v : img.data) v = 1.0f;  // white background
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double clamped = std::clamp(values[i].second, 0.0, 1.0);
    const int bar_h = static_cast<int>(clamped * (height - 2));
    const int x0 = gap + static_cast<int>(i) * (bar_width + gap);
    for (int y = height - 1 - bar_h; y < height - 1; ++y)
      for (int x = x0; x < x0 + bar_width; ++x) img.at(0, y, x) = 0.25f;
  }
  return img;
}

}  // namespace gestalt

#endif  // GESTALT_EVALUATION_REPORT_HPP_
