#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"

#include "abn/data_io.hpp"
#include "test_util.hpp"

using namespace abn;
namespace fs = std::filesystem;

namespace {

// Copies a fixture into a scratch directory and overwrites one file.
fs::path corrupted(const std::string& fixture, const std::string& file, const std::string& content) {
  const auto dir = fs::temp_directory_path() / ("abn_bundle_" + fixture + "_" + file);
  fs::remove_all(dir);
  fs::copy(testutil::fixture(fixture), dir);
  std::ofstream(dir / file) << content;
  return dir;
}

void expect_error(const fs::path& dir, const std::string& file, std::size_t line) {
  try {
    load_bundle(dir);
    FAIL("expected a BundleError for " << file);
  } catch (const BundleError& e) {
    CHECK(e.file() == file);
    CHECK(e.line() == line);
    const auto prefix = line ? file + ":" + std::to_string(line) + ":" : file + ":";
    CHECK(std::string(e.what()).rfind(prefix, 0) == 0);
  }
  fs::remove_all(dir);
}

}  // namespace

TEST_CASE("vendored bundles load with the expected sizes") {
  const auto cora = load_bundle(testutil::dataset("cora"));
  CHECK(cora.num_nodes() == 2708);
  CHECK(cora.num_features() == 1433);
  CHECK(cora.num_classes == 7);
  CHECK(cora.num_edges() == 5278);
  const auto citeseer = load_bundle(testutil::dataset("citeseer"));
  CHECK(citeseer.num_nodes() == 3327);
  CHECK(citeseer.num_features() == 3703);
  CHECK(citeseer.num_classes == 6);
  CHECK(citeseer.num_edges() == 4552);
}

TEST_CASE("path fixture matches an in-memory construction") {
  const auto g = load_bundle(testutil::fixture("path3"));
  const auto expect = Graph::from_edges("path3", 3, {{0, 1}, {1, 2}},
                                        CsrMatrix::from_dense(Tensor{{1, 0}, {1, 1}, {0, 1}}), {0, 0, 1}, 2);
  CHECK(g.name == "path3");
  CHECK(g.edge_list() == expect.edge_list());
  CHECK(g.features.to_dense() == expect.features.to_dense());
  CHECK(g.labels == expect.labels);
}

TEST_CASE("save then load is the identity") {
  Rng rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    auto g = testutil::random_graph(25, 7, 3, 0.15, rng);
    g.name = "rt" + std::to_string(trial);
    for (auto& v : g.features.values) v = rng.uniform(0.0, 1.0) / 3.0;
    const auto dir = fs::temp_directory_path() / "abn_roundtrip";
    fs::remove_all(dir);
    save_bundle(g, dir);
    const auto back = load_bundle(dir);
    CHECK(back.name == g.name);
    CHECK(back.edge_list() == g.edge_list());
    CHECK(back.features.to_dense() == g.features.to_dense());
    CHECK(back.labels == g.labels);
    CHECK(back.num_classes == g.num_classes);
    fs::remove_all(dir);
  }
  CHECK(format_shortest(0.1) == "0.1");
  CHECK(std::stod(format_shortest(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("malformed bundles name the file and line") {
  expect_error(corrupted("path3", "edges.txt", "0 1\n1 1\n"), "edges.txt", 2);
  expect_error(corrupted("path3", "edges.txt", "0 1\n0 1\n"), "edges.txt", 2);
  expect_error(corrupted("path3", "edges.txt", "1 2\n0 1\n"), "edges.txt", 2);
  expect_error(corrupted("path3", "edges.txt", "1 0\n1 2\n"), "edges.txt", 1);
  expect_error(corrupted("path3", "edges.txt", "0 1\n1 7\n"), "edges.txt", 2);
  expect_error(corrupted("path3", "edges.txt", "0 1\n1 x\n"), "edges.txt", 2);
  expect_error(corrupted("path3", "edges.txt", "0 1\n"), "edges.txt", 0);
  expect_error(corrupted("path3", "features.txt", "0:1\n0:1 5:1\n1:1\n"), "features.txt", 2);
  expect_error(corrupted("path3", "features.txt", "0:1\n1:1 0:1\n1:1\n"), "features.txt", 2);
  expect_error(corrupted("path3", "features.txt", "0:1\n0:1\n1:-1\n"), "features.txt", 3);
  expect_error(corrupted("path3", "features.txt", "0:1\n0:1\n"), "features.txt", 0);
  expect_error(corrupted("path3", "labels.txt", "0\n3\n1\n"), "labels.txt", 2);
  expect_error(corrupted("path3", "labels.txt", "0\n0\n"), "labels.txt", 0);
  expect_error(corrupted("path3", "labels.txt", "0\n0\n0\n"), "labels.txt", 0);
  expect_error(corrupted("path3", "meta.json", "{\"name\": \"x\"}"), "meta.json", 0);
}

TEST_CASE("splits have exact sizes, are disjoint and deterministic") {
  const auto cora = load_bundle(testutil::dataset("cora"));
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const std::size_t per_class = std::array<std::size_t, 5>{1, 3, 5, 10, 20}[seed % 5];
    const auto s = make_split(cora, per_class, seed);
    REQUIRE(s.train.size() == per_class * 7);
    REQUIRE(s.val.size() == 500);
    REQUIRE(s.test.size() == 1000);
    std::set<NodeId> all(s.train.begin(), s.train.end());
    all.insert(s.val.begin(), s.val.end());
    all.insert(s.test.begin(), s.test.end());
    REQUIRE(all.size() == per_class * 7 + 1500);
    std::vector<std::size_t> counts(7, 0);
    for (auto v : s.train) ++counts[static_cast<std::size_t>(cora.labels[v])];
    REQUIRE(std::all_of(counts.begin(), counts.end(), [&](std::size_t c) { return c == per_class; }));
  }
  const auto a = make_split(cora, 3, 42), b = make_split(cora, 3, 42);
  CHECK(a.train == b.train);
  CHECK(a.val == b.val);
  CHECK(a.test == b.test);
  CHECK(make_split(cora, 3, 43).train != a.train);
  CHECK(a.unlabeled(cora.num_nodes()).size() == 2708 - 21);
  CHECK(a.labeled(cora).size() == 21);
}

TEST_CASE("split errors") {
  const auto path = load_bundle(testutil::fixture("path3"));
  try {
    make_split(path, 2, 0, {0, 0});
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("class 1") != std::string::npos);
  }
  CHECK_THROWS(make_split(path, 1, 0, {1, 1}));
  Split overlap{{0}, {0}, {1}, 0};
  CHECK_THROWS_AS(overlap.validate(3), std::invalid_argument);
  Split out_of_range{{0}, {1}, {5}, 0};
  CHECK_THROWS_AS(out_of_range.validate(3), std::invalid_argument);
}

TEST_CASE("label rate") {
  const auto cora = load_bundle(testutil::dataset("cora"));
  CHECK(label_rate(make_split(cora, 1, 0), cora) == doctest::Approx(7.0 / 2708));
  CHECK(label_rate(make_split(cora, 20, 0), cora) == doctest::Approx(140.0 / 2708));
}

TEST_CASE("row normalization") {
  const auto m = row_normalized(CsrMatrix::from_dense(Tensor{{1, 3}, {0, 0}, {2, 0}}));
  CHECK(m.to_dense() == Tensor{{0.25, 0.75}, {0, 0}, {1, 0}});
}
