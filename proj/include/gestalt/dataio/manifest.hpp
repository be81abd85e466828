#ifndef GESTALT_DATAIO_MANIFEST_HPP_
#define GESTALT_DATAIO_MANIFEST_HPP_

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gestalt/core/error.hpp"

namespace gestalt {

/// One dataset entry. `cohort` and `split` are optional ("-" on disk when
/// absent); cohort tags drive the binary experiments.
struct SampleRecord {
  std::string id;
  std::string image_path;
  std::string landmark_path;
  std::string label;
  std::string cohort;
  std::string split;
};

/// Immutable dataset handle: validated records plus the class set.
///
/// Manifest format (UTF-8, line-delimited, tab-separated columns):
///   id <TAB> image_path <TAB> landmark_path <TAB> label [<TAB> cohort [<TAB> split]]
/// Lines starting with '#' are comments, except the optional directive
///   #!classes <TAB-or-space> name1,name2,...
/// which declares the class set up front; otherwise it is inferred from the
/// records and sorted lexicographically. Label ids are indices into the
/// class list.
class Dataset {
public:
  Dataset() = default;

  static Dataset from_records(std::vector<SampleRecord> records,
                              std::vector<std::string> declared_classes = {},
                              std::string base_dir = "") {
    Dataset d;
    d.records_ = std::move(records);
    d.base_dir_ = std::move(base_dir);
    std::set<std::string> ids;
    for (const auto& r : d.records_) {
      if (!ids.insert(r.id).second) throw DuplicateId(r.id);
    }
    if (!declared_classes.empty()) {
      d.classes_ = std::move(declared_classes);
      for (const auto& r : d.records_)
        if (std::find(d.classes_.begin(), d.classes_.end(), r.label) ==
            d.classes_.end())
          throw UnknownLabel("'" + r.label + "' (sample " + r.id +
                             ") not in declared class set");
    } else {
      std::set<std::string> labels;
      for (const auto& r : d.records_) labels.insert(r.label);
      d.classes_.assign(labels.begin(), labels.end());
    }
    for (std::size_t i = 0; i < d.classes_.size(); ++i)
      d.class_index_[d.classes_[i]] = static_cast<int>(i);
    return d;
  }

  static Dataset load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest: " + path);
    std::vector<SampleRecord> records;
    std::vector<std::string> declared;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (line[0] == '#') {
        if (line.rfind("#!classes", 0) == 0) {
          std::string rest = line.substr(9);
          std::istringstream ss(rest);
          std::string all;
          ss >> all;
          std::istringstream items(all);
          std::string item;
          while (std::getline(items, item, ','))
            if (!item.empty()) declared.push_back(item);
        }
        continue;
      }
      std::vector<std::string> cols;
      std::size_t start = 0;
      while (true) {
        const std::size_t tab = line.find('\t', start);
        cols.push_back(line.substr(start, tab == std::string::npos
                                              ? std::string::npos
                                              : tab - start));
        if (tab == std::string::npos) break;
        start = tab + 1;
      }
      if (cols.size() < 4 || cols.size() > 6)
        throw ParseError(path + ":" + std::to_string(lineno) + ": expected 4-6 tab-separated columns, got " +
                         std::to_string(cols.size()));
      for (int i = 0; i < 4; ++i)
        if (cols[i].empty())
          throw ParseError(path + ":" + std::to_string(lineno) +
                           ": empty required column " + std::to_string(i + 1));
      SampleRecord r;
      r.id = cols[0];
      r.image_path = cols[1];
      r.landmark_path = cols[2];
      r.label = cols[3];
      if (cols.size() > 4 && cols[4] != "-") r.cohort = cols[4];
      if (cols.size() > 5 && cols[5] != "-") r.split = cols[5];
      records.push_back(std::move(r));
    }
    std::string dir;
    const auto slash = path.find_last_of('/');
    if (slash != std::string::npos) dir = path.substr(0, slash + 1);
    return from_records(std::move(records), std::move(declared), dir);
  }

  void write_manifest(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write manifest: " + path);
    out << "#!classes ";
    for (std::size_t i = 0; i < classes_.size(); ++i)
      out << (i ? "," : "") << classes_[i];
    out << "\n";
    for (const auto& r : records_) {
      out << r.id << '\t' << r.image_path << '\t' << r.landmark_path << '\t'
          << r.label;
      if (!r.cohort.empty() || !r.split.empty())
        out << '\t' << (r.cohort.empty() ? "-" : r.cohort);
      if (!r.split.empty()) out << '\t' << r.split;
      out << "\n";
    }
  }

  const std::vector<SampleRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  const std::vector<std::string>& classes() const { return classes_; }

  int class_id(const std::string& label) const {
    auto it = class_index_.find(label);
    if (it == class_index_.end()) throw UnknownLabel(label);
    return it->second;
  }

  std::map<std::string, int> per_class_counts() const {
    std::map<std::string, int> counts;
    for (const auto& c : classes_) counts[c] = 0;
    for (const auto& r : records_) counts[r.label] += 1;
    return counts;
  }

  /// Paths in manifests are relative to the manifest's directory.
  std::string resolve(const std::string& rel) const {
    if (rel.empty() || rel.front() == '/') return rel;
    return base_dir_ + rel;
  }

  const std::string& base_dir() const { return base_dir_; }
  void set_base_dir(std::string dir) { base_dir_ = std::move(dir); }

  Dataset subset(const std::vector<std::size_t>& indices) const {
    std::vector<SampleRecord> recs;
    recs.reserve(indices.size());
    for (std::size_t i : indices) recs.push_back(records_[i]);
    return from_records(std::move(recs), classes_, base_dir_);
  }

  bool operator==(const Dataset& o) const {
    if (classes_ != o.classes_ || records_.size() != o.records_.size())
      return false;
    for (std::size_t i = 0; i < records_.size(); ++i) {
      const auto& a = records_[i];
      const auto& b = o.records_[i];
      if (a.id != b.id || a.image_path != b.image_path ||
          a.landmark_path != b.landmark_path || a.label != b.label ||
          a.cohort != b.cohort || a.split != b.split)
        return false;
    }
    return true;
  }

private:
  std::vector<SampleRecord> records_;
  std::vector<std::string> classes_;
  std::map<std::string, int> class_index_;
  std::string base_dir_;
};

}  // namespace gestalt

#endif  // GESTALT_DATAIO_MANIFEST_HPP_
