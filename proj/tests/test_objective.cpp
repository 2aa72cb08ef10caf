#include <cmath>
#include <map>

#include "doctest.h"

#include "abn/objective.hpp"
#include "test_util.hpp"

using namespace abn;
using ad::Tape;

namespace {

Graph path3() {
  return Graph::from_edges("path", 3, {{0, 1}, {1, 2}}, CsrMatrix::from_dense(Tensor(3, 1, 1.0)), {0, 0, 1}, 2);
}

Graph star() {
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId v = 1; v < 10; ++v) edges.emplace_back(0, v);
  return Graph::from_edges("star", 11, edges, CsrMatrix::from_dense(Tensor(11, 1, 1.0)),
                           std::vector<ClassId>(11, 0), 1);
}

double scalar(const Tape& t, ad::Var v) { return t.value(v)[0]; }

double ce(const Tensor& probs, std::size_t row, std::size_t cls) {
  return -std::log(std::max(probs(row, cls), ad::kLogEpsilon));
}

}  // namespace

TEST_CASE("pseudo labels take the argmax with lowest-id ties") {
  const Tensor f{{0.1, 0.7, 0.2}, {0.5, 0.5, 0.0}, {1.0 / 3, 1.0 / 3, 1.0 / 3}};
  const std::vector<NodeId> u{0, 1, 2};
  const auto a = pseudo_labels(f, u);
  CHECK(a.hard_label[0] == 1);
  CHECK(a.confidence[0] == 0.7);
  CHECK(a.hard_label[1] == 0);
  CHECK(a.hard_label[2] == 0);
  CHECK(a.confidence[2] == doctest::Approx(1.0 / 3));
  const auto partial = pseudo_labels(f, std::vector<NodeId>{1});
  CHECK_FALSE(partial.hard_label[0].has_value());
}

TEST_CASE("adaptive set uses an inclusive threshold and is rebuilt from scratch") {
  const Tensor f{{0.6, 0.4}, {0.4, 0.6}, {0.5, 0.5}};
  const std::vector<NodeId> u{2, 0, 1};
  const auto s = adaptive_pseudo_labels(f, u, 0.55);
  CHECK(s.members == std::vector<NodeId>{0, 1});
  CHECK(s.labels == std::vector<ClassId>{0, 1});
  CHECK(adaptive_pseudo_labels(f, u, 0.6).size() == 2);
  CHECK(adaptive_pseudo_labels(f, u, 0.99).empty());
  const auto again = adaptive_pseudo_labels(f, u, 0.55);
  CHECK(again.members == s.members);
  CHECK_THROWS_AS(adaptive_pseudo_labels(f, u, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(adaptive_pseudo_labels(f, u, 0.0), std::invalid_argument);
}

TEST_CASE("raising beta never adds a member") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto f = testutil::dense_softmax(testutil::random_tensor(40, 4, rng, -3, 3));
    std::vector<NodeId> u;
    for (NodeId v = 0; v < 40; v += 2) u.push_back(v);
    const double b1 = rng.uniform(0.26, 0.9), b2 = rng.uniform(b1, 0.99);
    const auto lo = adaptive_pseudo_labels(f, u, b1), hi = adaptive_pseudo_labels(f, u, b2);
    for (auto v : hi.members) CHECK(std::find(lo.members.begin(), lo.members.end(), v) != lo.members.end());
  }
}

TEST_CASE("balancing factors") {
  AdaptiveSet s;
  s.members = {1, 2, 3, 4};
  s.labels = {0, 0, 0, 1};
  const auto on = balancing_factors(s, true);
  CHECK(on.weights == std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3, 1.0});
  const auto off = balancing_factors(s, false);
  CHECK(off.weights == std::vector<double>(4, 0.25));
  AdaptiveSet one;
  one.members = {7};
  one.labels = {2};
  CHECK(balancing_factors(one, true).weights == std::vector<double>{1.0});
  CHECK(balancing_factors(one, false).weights == std::vector<double>{1.0});
  CHECK(balancing_factors(AdaptiveSet{}, true).weights.empty());
}

TEST_CASE("negative sampling") {
  const auto g = path3();
  Rng rng(5);
  const std::vector<LabeledNode> pool{{0, 0}};
  CHECK(sample_negatives(g, pool, {0, 0}, rng).empty());
  const auto s = sample_negatives(g, pool, {5, 2}, rng);
  REQUIRE(s.positives.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(s.positives[i] == 0);
    CHECK(s.positive_labels[i] == 0);
    CHECK(s.negatives[i] == std::vector<NodeId>{2, 2});
  }
  CHECK(negatives_valid(g, s));
  CHECK(sample_negatives(g, std::vector<LabeledNode>{}, {2, 5}, rng).empty());

  // The hub of the star is adjacent to every leaf but not to the isolated node.
  const auto st = star();
  const std::vector<LabeledNode> hub{{0, 0}};
  for (int i = 0; i < 100; ++i) {
    const auto hs = sample_negatives(st, hub, {1, 10}, rng);
    for (auto v : hs.negatives[0]) CHECK(v == 10);
  }
  // Node 1 only misses the other leaves and the isolated node.
  const std::vector<LabeledNode> mixed{{0, 0}, {1, 0}};
  const auto ms = sample_negatives(st, mixed, {10, 1}, rng);
  CHECK(negatives_valid(st, ms));

  const auto k2 = Graph::from_edges("k2", 2, {{0, 1}}, CsrMatrix::from_dense(Tensor(2, 1, 1.0)), {0, 0}, 1);
  CHECK_THROWS_AS(sample_negatives(k2, std::vector<LabeledNode>{{0, 0}}, {1, 10}, rng), std::runtime_error);

  NegativeSample bad;
  bad.positives = {0};
  bad.positive_labels = {0};
  bad.negatives = {{1}};
  CHECK_FALSE(negatives_valid(g, bad));
}

TEST_CASE("negative sampling is uniform over non-neighbours and seeded") {
  Rng rng(9);
  const auto g = testutil::random_graph(30, 2, 2, 0.2, rng);
  std::vector<LabeledNode> pool;
  for (NodeId v = 0; v < 30; ++v) pool.push_back({v, g.labels[v]});
  Rng a(1), b(1);
  const auto s1 = sample_negatives(g, pool, {10, 1}, a);
  const auto s2 = sample_negatives(g, pool, {10, 1}, b);
  CHECK(s1.positives == s2.positives);
  CHECK(s1.negatives == s2.negatives);

  std::map<NodeId, int> hits;
  const std::vector<LabeledNode> single{{0, g.labels[0]}};
  for (int i = 0; i < 2000; ++i) {
    const auto sample = sample_negatives(g, single, {1, 10}, rng);
    for (auto v : sample.negatives[0]) ++hits[v];
  }
  const double allowed = 30.0 - 1.0 - static_cast<double>(g.degree(0));
  CHECK(hits.size() == static_cast<std::size_t>(allowed));
  for (auto [v, count] : hits) {
    CHECK_FALSE(is_neighbor(g, 0, v));
    CHECK(std::abs(count - 20000.0 / allowed) < 0.2 * 20000.0 / allowed);
  }
}

TEST_CASE("cross entropy examples") {
  Tape t;
  CHECK(scalar(t, cross_entropy(t, Tensor{{1, 0, 0}}, t.constant(Tensor{{1, 0, 0}}))) == 0.0);
  CHECK(scalar(t, cross_entropy(t, Tensor{{1, 0, 0, 0}}, t.constant(Tensor(1, 4, 0.25)))) ==
        doctest::Approx(std::log(4.0)));
  CHECK(scalar(t, cross_entropy(t, Tensor{{0, 0, 1}}, t.constant(Tensor{{0.1, 0.7, 0.2}}))) ==
        doctest::Approx(-std::log(0.2)));
  CHECK_THROWS_AS(cross_entropy(t, Tensor{{1, 1, 0}}, t.constant(Tensor(1, 3, 0.3))), std::invalid_argument);
  CHECK_THROWS_AS(cross_entropy(t, Tensor{{1, 0}}, t.constant(Tensor(1, 3, 0.3))), ShapeError);
}

TEST_CASE("baseline pseudo loss") {
  const Tensor f{{0.7, 0.3}, {0.2, 0.8}, {0.6, 0.4}};
  const std::vector<LabeledNode> l{{0, 0}};
  const std::vector<NodeId> u{1, 2};
  Tape t;
  const auto probs = t.constant(f);
  CHECK(scalar(t, baseline_pseudo_loss(t, probs, l, u, 0.0)) == doctest::Approx(scalar(t, supervised_loss(t, probs, l))));
  const double expect = ce(f, 0, 0) + 0.5 / 2.0 * (ce(f, 1, 1) + ce(f, 2, 0));
  CHECK(scalar(t, baseline_pseudo_loss(t, probs, l, u, 0.5)) == doctest::Approx(expect).epsilon(1e-14));
  const Tensor perfect{{1, 0}, {0, 1}, {1, 0}};
  CHECK(scalar(t, baseline_pseudo_loss(t, t.constant(perfect), l, u, 2.0)) == 0.0);
  CHECK_THROWS_AS(baseline_pseudo_loss(t, probs, {}, u, 1.0), std::invalid_argument);
}

TEST_CASE("negative loss") {
  NegativeSample s;
  s.positives = {0};
  s.positive_labels = {1};
  s.negatives = {{2}};
  Tape t;
  CHECK(scalar(t, negative_loss(t, t.constant(Tensor(3, 2, 0.5)), s)) == doctest::Approx(std::log(2.0)));
  const Tensor same{{1, 0}, {1, 0}, {0, 1}};
  CHECK(scalar(t, negative_loss(t, t.constant(same), s)) == doctest::Approx(-std::log(1e-12)));
  const Tensor other{{1, 0}, {1, 0}, {1, 0}};
  CHECK(scalar(t, negative_loss(t, t.constant(other), s)) == 0.0);
  CHECK(scalar(t, negative_loss(t, t.constant(other), NegativeSample{})) == 0.0);
}

TEST_CASE("abn loss matches a hand evaluation on five nodes") {
  const Tensor f{{0.7, 0.2, 0.1}, {0.1, 0.6, 0.3}, {0.3, 0.3, 0.4}, {0.05, 0.9, 0.05}, {0.5, 0.25, 0.25}};
  const std::vector<LabeledNode> l{{0, 0}, {1, 1}};
  AdaptiveSet adaptive;
  adaptive.members = {2, 3, 4};
  adaptive.labels = {2, 1, 0};
  adaptive.weights = {1.0, 0.5, 0.25};
  NegativeSample s;
  s.positives = {0, 3};
  s.positive_labels = {0, 1};
  s.negatives = {{2, 3}, {0, 4}};
  AbnConfig cfg;
  cfg.lambda = 0.8;
  cfg.lambda1 = 0.3;
  cfg.sizes = {2, 5};

  const auto cmp = [&](std::size_t j, std::size_t c) { return -std::log(1.0 - f(j, c)); };
  const double sup = (ce(f, 0, 0) + ce(f, 1, 1)) / 2.0;
  const double pseudo = 1.0 * ce(f, 2, 2) + 0.5 * ce(f, 3, 1) + 0.25 * ce(f, 4, 0);
  const double neg = (cmp(2, 0) + cmp(3, 0) + cmp(0, 1) + cmp(4, 1)) / 4.0;
  Tape t;
  const double got = scalar(t, abn_loss(t, t.constant(f), l, adaptive, s, cfg));
  CHECK(std::abs(got - (sup + 0.8 * pseudo + 0.3 * neg)) < 1e-12);

  SUBCASE("terms vanish") {
    Tape u;
    const auto probs = u.constant(f);
    const auto base = scalar(u, supervised_loss(u, probs, l));
    auto c0 = cfg;
    c0.lambda1 = 0.0;
    CHECK(scalar(u, abn_loss(u, probs, l, AdaptiveSet{}, NegativeSample{}, c0)) == base);
    AdaptiveSet single;
    single.members = {3};
    single.labels = {1};
    single.weights = {1.0};
    c0.lambda = 1.0;
    CHECK(scalar(u, abn_loss(u, probs, l, single, s, c0)) == doctest::Approx(base + ce(f, 3, 1)).epsilon(1e-14));
  }
}

TEST_CASE("abn loss gradient is zero on rows that no term touches") {
  Rng rng(13);
  const auto f0 = testutil::dense_softmax(testutil::random_tensor(8, 3, rng));
  const std::vector<LabeledNode> l{{0, 0}};
  AdaptiveSet adaptive;
  adaptive.members = {1, 2};
  adaptive.labels = {1, 1};
  adaptive = balancing_factors(adaptive, true);
  NegativeSample s;
  s.positives = {1};
  s.positive_labels = {1};
  s.negatives = {{3, 4, 3, 4, 3, 4, 3, 4, 3, 4}};
  AbnConfig cfg;
  cfg.sizes = {1, 10};
  Tape t;
  const auto probs = t.parameter(f0);
  t.backward(abn_loss(t, probs, l, adaptive, s, cfg));
  const auto& g = t.grad(probs);
  for (std::size_t i = 5; i < 8; ++i) {
    for (std::size_t j = 0; j < 3; ++j) CHECK(g(i, j) == 0.0);
  }
  for (std::size_t i : {0u, 1u, 2u, 3u, 4u}) {
    double norm = 0.0;
    for (std::size_t j = 0; j < 3; ++j) norm += std::abs(g(i, j));
    CHECK(norm > 0.0);
  }
}

TEST_CASE("abn config validation") {
  AbnConfig ok;
  CHECK_NOTHROW(ok.validate());
  auto bad = ok;
  bad.sizes = {3, 3};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.sizes = {0, 0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.lambda1 = 0.0;
  CHECK_NOTHROW(bad.validate());
  bad = ok;
  bad.beta = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.lambda = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_NOTHROW(supervised_only().validate());
  CHECK(supervised_only().lambda == 0.0);
}
