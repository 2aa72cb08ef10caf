#include <cmath>
#include <filesystem>

#include "doctest.h"

#include "abn/data_io.hpp"
#include "abn/optim.hpp"
#include "abn/trainer.hpp"
#include "test_util.hpp"

using namespace abn;

namespace {

bool same_records(const std::vector<EpochRecord>& a, const std::vector<EpochRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (to_json(a[i]) != to_json(b[i])) return false;
  }
  return true;
}

bool same_params(const ModelParams& a, const ModelParams& b) {
  const auto x = trainable(a), y = trainable(b);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(*x[i] == *y[i])) return false;
  }
  return true;
}

const Graph& two_block() {
  static const Graph g = load_bundle(testutil::fixture("two_block"));
  return g;
}

Split two_block_split(std::uint64_t seed) { return make_split(two_block(), 1, seed, {6, 12}); }

}  // namespace

TEST_CASE("xavier bounds and variance") {
  Rng rng(1);
  for (auto [r, c] : {std::pair{1u, 5u}, std::pair{2u, 4u}}) {
    const auto t = xavier_init(r, c, rng);
    for (double v : t.values()) CHECK(std::abs(v) <= 1.0);
  }
  const auto big = xavier_init(200, 500, rng);
  const double bound = std::sqrt(6.0 / 700.0);
  double mean = 0.0, var = 0.0;
  for (double v : big.values()) {
    CHECK(std::abs(v) <= bound);
    mean += v;
  }
  mean /= static_cast<double>(big.size());
  for (double v : big.values()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(big.size() - 1);
  CHECK(std::abs(var / (bound * bound / 3.0) - 1.0) < 0.05);
  Rng a(5), b(5);
  CHECK(xavier_init(3, 3, a) == xavier_init(3, 3, b));
}

TEST_CASE("adam examples") {
  AdamState st;
  Tensor p{{1.0, -2.0}};
  std::vector<Tensor*> params{&p};
  std::vector<Tensor> zero{Tensor(1, 2)};
  adam_step(st, params, zero, 0.0);
  CHECK(p == Tensor{{1.0, -2.0}});

  AdamState s2;
  Tensor q{{0.5}};
  std::vector<Tensor*> qp{&q};
  std::vector<Tensor> one{Tensor{{1.0}}};
  adam_step(s2, qp, one, 0.0);
  CHECK(q[0] == doctest::Approx(0.5 - 0.01 / (1.0 + 1e-8)).epsilon(1e-14));
  CHECK(s2.t == 1);

  // L2 enters the gradient: a zero loss gradient still shrinks the weight.
  AdamState s3;
  Tensor r{{2.0}};
  std::vector<Tensor*> rp{&r};
  std::vector<Tensor> g0{Tensor(1, 1)};
  adam_step(s3, rp, g0, 0.1);
  CHECK(r[0] == doctest::Approx(2.0 - 0.01));

  // First-layer scope leaves the second tensor alone.
  AdamState s4;
  Tensor w1{{1.0}}, w2{{1.0}};
  std::vector<Tensor*> both{&w1, &w2};
  std::vector<Tensor> gz{Tensor(1, 1), Tensor(1, 1)};
  adam_step(s4, both, gz, 0.1, L2Scope::FirstLayer);
  CHECK(w1[0] < 1.0);
  CHECK(w2[0] == 1.0);

  AdamState s5;
  Tensor u{{1.0}};
  std::vector<Tensor*> up{&u};
  std::vector<Tensor> bad{Tensor{{std::nan("")}}};
  CHECK_THROWS_AS(adam_step(s5, up, bad, 0.0), DivergenceError);
  CHECK(u[0] == 1.0);
  CHECK(s5.t == 0);
  CHECK(parse_l2_scope(to_string(L2Scope::FirstLayer)) == L2Scope::FirstLayer);
}

TEST_CASE("early stopping rule") {
  TrainConfig cfg;
  std::vector<double> h(101, 1.0);
  CHECK_FALSE(early_stop_check(h, cfg));

  std::vector<double> late(502, 0.5);
  late.back() = 1.0;
  CHECK(early_stop_check(late, cfg));
  late.back() = 0.4;
  CHECK_FALSE(early_stop_check(late, cfg));

  cfg.comparator = StopComparator::BetterThanMean;
  CHECK(early_stop_check(late, cfg));

  std::vector<double> at_min(501, 0.5);
  at_min.back() = 1.0;
  CHECK_FALSE(early_stop_check(at_min, TrainConfig{}));
  CHECK_THROWS(early_stop_check(std::vector<double>{}, cfg));
  CHECK(parse_stop_comparator("better_than_mean") == StopComparator::BetterThanMean);

  TrainConfig bad;
  bad.window = 600;
  CHECK_THROWS(bad.validate());
  bad = TrainConfig{};
  bad.l2_rate = -1.0;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("evaluate counts argmax hits") {
  const Tensor f{{1, 0}, {0, 1}, {1, 0}, {0.5, 0.5}};
  const std::vector<ClassId> labels{0, 1, 1, 0};
  CHECK(evaluate(f, std::vector<NodeId>{0, 1}, labels) == 1.0);
  CHECK(evaluate(f, std::vector<NodeId>{2}, labels) == 0.0);
  CHECK(evaluate(f, std::vector<NodeId>{0, 1, 2, 3}, labels) == 0.75);
  CHECK_THROWS_AS(evaluate(f, std::vector<NodeId>{}, labels), std::invalid_argument);
}

TEST_CASE("gcn with abn separates the two-block graph within 200 epochs") {
  TrainConfig cfg;
  cfg.max_epochs = 200;
  cfg.seed = 3;
  AbnConfig abn;
  abn.sizes = {2, 5};
  const auto r = train(two_block(), two_block_split(4), ModelConfig{}, abn, cfg);
  bool reached = false;
  for (const auto& rec : r.records) reached = reached || rec.test_acc == 1.0;
  CHECK(reached);
  CHECK(r.test_accuracy() == 1.0);
  for (const auto& rec : r.records) {
    std::size_t total = 0;
    for (auto c : rec.adaptive_counts) total += c;
    CHECK(total == rec.adaptive_size);
    CHECK(rec.adaptive_size <= 18);
  }
}

TEST_CASE("disabled abn terms reproduce supervised training bitwise") {
  TrainConfig cfg;
  cfg.max_epochs = 120;
  cfg.seed = 11;
  AbnConfig off;
  off.lambda = 0.0;
  off.lambda1 = 0.0;
  off.beta = 0.999;
  off.sizes = {0, 0};
  for (auto kind : {ModelKind::Gcn, ModelKind::Dagnn}) {
    ModelConfig model{.kind = kind, .hidden = 16, .depth = 4};
    const auto a = train(two_block(), two_block_split(1), model, off, cfg);
    const auto b = train(two_block(), two_block_split(1), model, supervised_only(), cfg);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) CHECK(a.records[i].train_loss == b.records[i].train_loss);
    CHECK(same_params(a.best_params, b.best_params));
  }
}

TEST_CASE("supervised training loss decreases window by window") {
  // The recorded loss excludes the L2 penalty and dropout makes it noisy
  // near zero, so both are off here.
  TrainConfig cfg;
  cfg.l2_rate = 0.0;
  cfg.dropout = 0.0;
  cfg.max_epochs = 400;
  cfg.seed = 2;
  const auto r = train(two_block(), two_block_split(2), ModelConfig{}, supervised_only(), cfg);
  double previous = INFINITY;
  for (std::size_t start = 0; start + 50 <= r.records.size(); start += 50) {
    double mean = 0.0;
    for (std::size_t i = start; i < start + 50; ++i) mean += r.records[i].train_loss;
    mean /= 50.0;
    CHECK(mean <= previous);
    previous = mean;
  }
}

TEST_CASE("training is deterministic and resumes bitwise from a saved state") {
  const auto dir = std::filesystem::temp_directory_path() / "abn_optim_test";
  std::filesystem::create_directories(dir);
  Rng rng(6);
  const auto g = testutil::random_graph(60, 12, 3, 0.08, rng);
  const auto split = make_split(g, 2, 9, {15, 30});
  for (auto kind : {ModelKind::Gcn, ModelKind::Dagnn}) {
    ModelConfig model{.kind = kind, .hidden = 8, .depth = 3};
    AbnConfig abn;
    abn.beta = 0.4;
    TrainConfig cfg;
    cfg.max_epochs = 80;
    cfg.min_epoch = 30;
    cfg.window = 10;
    cfg.seed = 21;

    const auto ops = GraphOperands::build(g);
    Trainer full(g, ops, split, model, abn, cfg);
    const auto a = full.run();
    CHECK(same_records(a.records, train(g, split, model, abn, cfg).records));

    Trainer first(g, ops, split, model, abn, cfg);
    for (int i = 0; i < 23; ++i) first.step();
    const auto path = dir / (to_string(kind) + ".state");
    first.save_state(path);
    Trainer second(g, ops, split, model, abn, cfg);
    second.load_state(path);
    CHECK(second.epoch() == 23);
    const auto b = second.run();
    CHECK(same_records(a.records, b.records));
    CHECK(same_params(a.best_params, b.best_params));
    CHECK(same_params(full.params(), second.params()));
    CHECK(a.stopped_early == b.stopped_early);
    CHECK(a.best.epoch == b.best.epoch);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("epoch records serialize") {
  EpochRecord r{7, 0.25, 1.5, 0.8, 0.75, 3, {1, 2}};
  const auto back = epoch_record_from_json(to_json(r));
  CHECK(to_json(back) == to_json(r));
  CHECK(back.adaptive_counts == std::vector<std::size_t>{1, 2});
}
