#ifndef GESTALT_ENSEMBLE_AGGREGATE_HPP_
#define GESTALT_ENSEMBLE_AGGREGATE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "gestalt/core/error.hpp"

namespace gestalt {

/// Per-class similarity vector (softmax output). Scores sum to 1 within
/// 1e-6; labels are unique.
struct GestaltScores {
  std::vector<std::string> labels;
  std::vector<double> scores;

  void validate() const {
    if (labels.size() != scores.size())
      throw LengthMismatch("scores: " + std::to_string(labels.size()) +
                           " labels vs " + std::to_string(scores.size()) +
                           " scores");
    std::set<std::string> uniq(labels.begin(), labels.end());
    if (uniq.size() != labels.size())
      throw LabelMismatch("duplicate labels in score vector");
    double sum = 0.0;
    for (double s : scores) {
      if (s < 0.0 || s > 1.0)
        throw InternalError("score outside [0,1]: " + std::to_string(s));
      sum += s;
    }
    if (std::abs(sum - 1.0) > 1e-6)
      throw InternalError("scores sum to " + std::to_string(sum));
  }

  double score_of(const std::string& label) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == label) return scores[i];
    throw LabelMismatch("label not present: " + label);
  }
};

/// (label, score) pairs in non-increasing score order; ties resolved by
/// ascending label id (position in the shared label list).
struct RankedList {
  std::vector<std::pair<std::string, double>> entries;

  int rank_of(const std::string& label) const {  // 1-based; 0 when absent
    for (std::size_t i = 0; i < entries.size(); ++i)
      if (entries[i].first == label) return static_cast<int>(i + 1);
    return 0;
  }
};

/// Element-wise arithmetic mean of the region score vectors. All vectors
/// must share one label list; regions that produced no crop are simply not
/// passed in, so the mean runs over the available experts.
inline GestaltScores aggregate(std::span<const GestaltScores> region_scores) {
  if (region_scores.empty())
    throw EmptyEnsemble("aggregate needs at least one region vector");
  const auto& first = region_scores.front();
  first.validate();
  GestaltScores out;
  out.labels = first.labels;
  out.scores.assign(first.scores.size(), 0.0);
  for (const auto& rs : region_scores) {
    rs.validate();
    if (rs.labels != out.labels)
      throw LabelMismatch("region vectors carry different label lists");
    for (std::size_t i = 0; i < rs.scores.size(); ++i)
      out.scores[i] += rs.scores[i];
  }
  for (auto& s : out.scores) s /= static_cast<double>(region_scores.size());
  out.validate();
  return out;
}

inline GestaltScores aggregate(const std::vector<GestaltScores>& region_scores) {
  return aggregate(std::span<const GestaltScores>(region_scores));
}

/// Stable descending sort with the documented tie rule.
inline RankedList rank(const GestaltScores& scores) {
  scores.validate();
  std::vector<std::size_t> order(scores.scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores.scores[a] > scores.scores[b];  // stable keeps label-id order
  });
  RankedList out;
  for (std::size_t i : order)
    out.entries.emplace_back(scores.labels[i], scores.scores[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Prediction records: one line per sample, id then the full ranked list.
//   <id> <TAB> label=score <TAB> label=score ...
// Scores print as %.17g so the file round-trips exactly.

struct PredictionRecord {
  std::string id;
  RankedList ranked;
};

inline void write_prediction_records(const std::string& path,
                                     const std::vector<PredictionRecord>& recs,
                                     const std::string& header_comment = "") {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write predictions: " + path);
  if (!header_comment.empty()) out << "# " << header_comment << "\n";
  char buf[64];
  for (const auto& rec : recs) {
    out << rec.id;
    for (const auto& [label, score] : rec.ranked.entries) {
      std::snprintf(buf, sizeof(buf), "%.17g", score);
      out << '\t' << label << '=' << buf;
    }
    out << "\n";
  }
}

inline std::vector<PredictionRecord> load_prediction_records(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open predictions: " + path);
  std::vector<PredictionRecord> recs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string field;
    PredictionRecord rec;
    bool first = true;
    while (std::getline(ss, field, '\t')) {
      if (first) {
        rec.id = field;
        first = false;
        continue;
      }
      const auto eq = field.rfind('=');
      if (eq == std::string::npos)
        throw ParseError(path + ":" + std::to_string(lineno) +
                         ": expected label=score");
      rec.ranked.entries.emplace_back(field.substr(0, eq),
                                      std::stod(field.substr(eq + 1)));
    }
    if (rec.id.empty())
      throw ParseError(path + ":" + std::to_string(lineno) + ": empty id");
    recs.push_back(std::move(rec));
  }
  return recs;
}

}  // namespace gestalt

#endif  // GESTALT_ENSEMBLE_AGGREGATE_HPP_
