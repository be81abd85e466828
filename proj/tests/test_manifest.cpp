#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "gestalt/dataio/manifest.hpp"
#include "gestalt/dataio/split.hpp"

using namespace gestalt;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& content) {
  const fs::path p = fs::temp_directory_path() / name;
  std::ofstream out(p);
  out << content;
  return p;
}

std::vector<SampleRecord> make_records(int count, int classes) {
  std::vector<SampleRecord> recs;
  for (int i = 0; i < count; ++i) {
    SampleRecord r;
    r.id = "s" + std::to_string(i);
    r.image_path = "img/" + std::to_string(i) + ".pgm";
    r.landmark_path = "lmk/" + std::to_string(i) + ".lmk";
    r.label = "class" + std::to_string(i % classes);
    recs.push_back(r);
  }
  return recs;
}

}  // namespace

TEST_CASE("empty manifest loads as an empty dataset") {
  const auto p = write_temp("gestalt_empty.tsv", "# nothing here\n");
  const auto ds = Dataset::load_manifest(p.string());
  REQUIRE(ds.size() == 0);
  REQUIRE(ds.classes().empty());
  fs::remove(p);
}

TEST_CASE("duplicate id is rejected by name") {
  const auto p = write_temp("gestalt_dup.tsv",
                            "a\ti.pgm\ti.lmk\tc1\n"
                            "a\tj.pgm\tj.lmk\tc2\n");
  try {
    Dataset::load_manifest(p.string());
    FAIL("expected DuplicateId");
  } catch (const DuplicateId& e) {
    REQUIRE(std::string(e.what()).find("a") != std::string::npos);
  }
  fs::remove(p);
}

TEST_CASE("per-class counts add up") {
  auto ds = Dataset::from_records(make_records(10, 2));
  const auto counts = ds.per_class_counts();
  REQUIRE(counts.at("class0") == 5);
  REQUIRE(counts.at("class1") == 5);
  int total = 0;
  for (const auto& [label, n] : counts) total += n;
  REQUIRE(total == 10);
}

TEST_CASE("declared class set rejects unknown labels") {
  const auto p = write_temp("gestalt_unknown.tsv",
                            "#!classes alpha,beta\n"
                            "a\ti.pgm\ti.lmk\tgamma\n");
  REQUIRE_THROWS_AS(Dataset::load_manifest(p.string()), UnknownLabel);
  fs::remove(p);
}

TEST_CASE("parse errors carry the line number") {
  const auto p = write_temp("gestalt_bad.tsv", "onlyonecolumn\n");
  try {
    Dataset::load_manifest(p.string());
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    REQUIRE(std::string(e.what()).find(":1") != std::string::npos);
  }
  fs::remove(p);
}

TEST_CASE("manifest round-trips through write and load") {
  auto recs = make_records(7, 3);
  recs[2].cohort = "positive";
  recs[4].split = "test";
  recs[4].cohort = "negative";
  const auto ds = Dataset::from_records(recs);
  const auto p = fs::temp_directory_path() / "gestalt_rt.tsv";
  ds.write_manifest(p.string());
  const auto loaded = Dataset::load_manifest(p.string());
  REQUIRE(loaded == ds);
  fs::remove(p);
}

TEST_CASE("90/10 split on 100 samples gives 90 train, 10 val") {
  const auto ds = Dataset::from_records(make_records(100, 2));
  const auto result = split_dataset(ds, 0.9, 7);
  REQUIRE(result.train.size() == 90);
  REQUIRE(result.val.size() == 10);
}

TEST_CASE("split is disjoint and exhaustive by id") {
  const auto ds = Dataset::from_records(make_records(53, 4));
  const auto result = split_dataset(ds, 0.8, 3);
  std::set<std::string> ids;
  for (const auto& r : result.train.records()) ids.insert(r.id);
  for (const auto& r : result.val.records()) {
    REQUIRE(ids.count(r.id) == 0);
    ids.insert(r.id);
  }
  REQUIRE(ids.size() == 53);
}

TEST_CASE("singleton classes go to train") {
  auto recs = make_records(10, 2);
  SampleRecord lone;
  lone.id = "lone";
  lone.image_path = "x.pgm";
  lone.landmark_path = "x.lmk";
  lone.label = "rare";
  recs.push_back(lone);
  const auto ds = Dataset::from_records(recs);
  const auto result = split_dataset(ds, 0.9, 1);
  REQUIRE(result.singleton_classes == std::vector<std::string>{"rare"});
  bool found = false;
  for (const auto& r : result.train.records()) found |= (r.id == "lone");
  REQUIRE(found);
}

TEST_CASE("same seed reproduces the split, different seed changes it") {
  const auto ds = Dataset::from_records(make_records(40, 3));
  const auto a = split_dataset(ds, 0.75, 11);
  const auto b = split_dataset(ds, 0.75, 11);
  REQUIRE(a.train == b.train);
  REQUIRE(a.val == b.val);
  const auto c = split_dataset(ds, 0.75, 12);
  REQUIRE(!(a.train == c.train));
}

TEST_CASE("dedup removes train overlaps and in-test duplicates") {
  auto train = Dataset::from_records(make_records(3, 1));
  auto test_recs = make_records(5, 1);
  for (auto& r : test_recs) r.id = "t_" + r.id;
  auto test = Dataset::from_records(test_recs);
  // hash function keyed on content groups: t_s0 duplicates train s1;
  // t_s2 and t_s3 are identical to each other
  auto hash_fn = [](const SampleRecord& r) -> std::uint64_t {
    if (r.id == "s1" || r.id == "t_s0") return 100;
    if (r.id == "t_s2" || r.id == "t_s3") return 200;
    std::uint64_t h = 0;
    for (char c : r.id) h = h * 31 + static_cast<unsigned char>(c);
    return h;
  };
  const auto [filtered, report] = deduplicate_and_exclude(test, train, hash_fn);
  REQUIRE(filtered.size() == 3);  // t_s1, t_s2 (first of pair), t_s4
  REQUIRE(report.removed.size() == 2);
  REQUIRE(report.removed[0].id == "t_s0");
  REQUIRE(report.removed[0].reason == "duplicate-of-train");
  REQUIRE(report.removed[1].id == "t_s3");
  REQUIRE(report.removed[1].reason == "duplicate-in-test");
}

TEST_CASE("dedup leaves disjoint sets unchanged") {
  auto train = Dataset::from_records(make_records(4, 2));
  auto test_recs = make_records(4, 2);
  for (auto& r : test_recs) r.id = "t_" + r.id;
  auto test = Dataset::from_records(test_recs);
  auto hash_fn = [](const SampleRecord& r) -> std::uint64_t {
    std::uint64_t h = 0;
    for (char c : r.id) h = h * 31 + static_cast<unsigned char>(c);
    return h;
  };
  const auto [filtered, report] = deduplicate_and_exclude(test, train, hash_fn);
  REQUIRE(filtered == test);
  REQUIRE(report.removed.empty());
}
