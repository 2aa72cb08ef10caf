#include "abn/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "abn/diagnostics.hpp"

namespace abn {
namespace {

using nlohmann::json;

// One row of the searched-settings tables for a (dataset, model, labels per
// class) task.
struct Searched {
  const char* dataset;
  ModelKind kind;
  std::size_t per_class;
  bool balancing;
  double lambda;
  double beta;
  double lambda1;
  SampleSizes sizes;
  double l2;
  std::size_t depth;  // 0 for GCN
  double dropout;
};

constexpr ModelKind G = ModelKind::Gcn;
constexpr ModelKind D = ModelKind::Dagnn;

const Searched kSearched[] = {
    {"cora", G, 1, true, 1, 0.2, 1, {5, 2}, 0.0005, 0, 0.8},
    {"cora", G, 3, true, 1, 0.5, 0, {0, 0}, 0.001, 0, 0.8},
    {"cora", G, 5, true, 1, 0.5, 1, {5, 2}, 0.001, 0, 0.8},
    {"cora", G, 10, false, 1, 0.5, 1, {2, 5}, 0.001, 0, 0.8},
    {"cora", G, 20, false, 1, 0.8, 0, {0, 0}, 0.001, 0, 0.8},
    {"cora", D, 1, true, 1, 0.4, 1, {5, 2}, 0.005, 15, 0.8},
    {"cora", D, 3, true, 1, 0.5, 1, {2, 5}, 0.005, 15, 0.8},
    {"cora", D, 5, true, 1, 0.6, 1, {10, 1}, 0.005, 15, 0.8},
    {"cora", D, 10, false, 1, 0.6, 0, {0, 0}, 0.005, 15, 0.8},
    {"cora", D, 20, false, 1, 0.9, 1, {10, 1}, 0.005, 10, 0.8},
    {"citeseer", G, 1, true, 1, 0.2, 0, {0, 0}, 0.0005, 0, 0.8},
    {"citeseer", G, 3, true, 1, 0.4, 3, {5, 2}, 0.002, 0, 0.5},
    {"citeseer", G, 5, true, 1, 0.6, 3, {5, 2}, 0.002, 0, 0.5},
    {"citeseer", G, 10, true, 1, 0.6, 1, {2, 5}, 0.002, 0, 0.8},
    {"citeseer", G, 20, true, 1, 0.6, 1, {2, 5}, 0.002, 0, 0.5},
    {"citeseer", D, 1, true, 1, 0.2, 1, {5, 2}, 0.0005, 15, 0.8},
    {"citeseer", D, 3, true, 1, 0.5, 1, {2, 5}, 0.005, 15, 0.5},
    {"citeseer", D, 5, true, 1, 0.6, 0, {0, 0}, 0.005, 15, 0.5},
    {"citeseer", D, 10, true, 1, 0.6, 0, {0, 0}, 0.02, 15, 0.8},
    {"citeseer", D, 20, true, 1, 0.6, 0, {0, 0}, 0.02, 10, 0.8},
};

// Base-model settings picked by validation accuracy for a task; tasks not
// listed fall back to the model defaults in preset().
struct BaseTuned {
  const char* dataset;
  ModelKind kind;
  std::size_t per_class;
  bool row_normalize;
  double l2;
  double dropout;
  std::size_t depth;  // 0 for GCN
};

const BaseTuned kBaseTuned[] = {
    {"cora", G, 1, false, 0.001, 0.8, 0},
    {"citeseer", G, 1, false, 0.005, 0.5, 0},
    {"cora", D, 1, false, 0.001, 0.5, 10},
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// Reads `key` from `j` into `out` when present; type errors become ConfigError.
template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
      throw ConfigError("unknown configuration key '" + where + "." + key + "'");
    }
  }
}

template <typename Parse>
void read_enum(const json& j, const char* key, Parse parse, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    parse(j.at(key).get<std::string>());
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

json sizes_json(SampleSizes s) { return json::array({s.positives, s.negatives}); }

SampleSizes sizes_from(const json& j, const std::string& where) {
  try {
    if (!j.is_array() || j.size() != 2) throw ConfigError(where + " must be a [positives, negatives] pair");
    return {j.at(0).get<std::size_t>(), j.at(1).get<std::size_t>()};
  } catch (const json::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

// Runs fn(i) for i in [0, n) on up to `workers` threads (0 = hardware).
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

std::string csv_number(double v) { return format_shortest(v); }

}  // namespace

AbnConfig ExperimentConfig::effective_abn() const {
  if (!abn_enabled) return supervised_only();
  AbnConfig a = abn;
  if (ablation.disable_balancing) a.balancing = false;
  if (ablation.disable_negative) {
    a.lambda1 = 0.0;
    a.sizes = {0, 0};
  }
  if (ablation.disable_adaptive) a.adaptive = false;
  return a;
}

void ExperimentConfig::validate() const {
  try {
    if (abn_enabled) abn.validate();
    effective_abn().validate();
    train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (per_class == 0) throw ConfigError("per_class must be >= 1");
  if (num_splits == 0) throw ConfigError("splits must be >= 1");
  if (model.hidden == 0) throw ConfigError("model.hidden must be >= 1");
  if (model.kind == ModelKind::Dagnn && model.depth == 0) throw ConfigError("model.depth must be >= 1");
}

ExperimentConfig preset(ModelKind kind, const std::string& dataset_name, std::size_t per_class, bool abn_enabled) {
  ExperimentConfig c;
  c.model.kind = kind;
  c.per_class = per_class;
  c.abn_enabled = abn_enabled;
  if (kind == ModelKind::Gcn) {
    c.train.l2_rate = 5e-3;
    c.train.dropout = 0.5;
    // Validation preferred running the plain GCN to the epoch cap.
    c.train.early_stopping = abn_enabled;
  } else {
    c.train.l2_rate = 5e-3;
    c.train.dropout = 0.8;
    c.model.depth = 10;
  }
  const auto name = lower(dataset_name);
  if (!abn_enabled) {
    for (const auto& b : kBaseTuned) {
      if (name != b.dataset || b.kind != kind || b.per_class != per_class) continue;
      c.row_normalize = b.row_normalize;
      c.train.l2_rate = b.l2;
      c.train.dropout = b.dropout;
      if (b.depth) c.model.depth = b.depth;
    }
    return c;
  }
  // Row-normalised features keep the untrained model near uniform, so the
  // confidence threshold admits no random pseudo labels in the first epochs.
  c.row_normalize = true;
  for (const auto& s : kSearched) {
    if (name != s.dataset || s.kind != kind || s.per_class != per_class) continue;
    c.abn.balancing = s.balancing;
    c.abn.lambda = s.lambda;
    c.abn.beta = s.beta;
    c.abn.lambda1 = s.lambda1;
    c.abn.sizes = s.sizes;
    c.train.l2_rate = s.l2;
    c.train.dropout = s.dropout;
    if (s.depth) c.model.depth = s.depth;
  }
  return c;
}

json to_json(const ExperimentConfig& c) {
  return {
      {"dataset", c.dataset},
      {"per_class", c.per_class},
      {"splits", c.num_splits},
      {"seed", c.base_seed},
      {"workers", c.workers},
      {"row_normalize", c.row_normalize},
      {"val_size", c.split_sizes.val},
      {"test_size", c.split_sizes.test},
      {"model",
       {{"kind", to_string(c.model.kind)},
        {"hidden", c.model.hidden},
        {"depth", c.model.depth},
        {"score_activation", to_string(c.model.score_activation)},
        {"include_level_zero", c.model.include_level_zero}}},
      {"abn",
       {{"enabled", c.abn_enabled},
        {"beta", c.abn.beta},
        {"lambda", c.abn.lambda},
        {"lambda1", c.abn.lambda1},
        {"balancing", c.abn.balancing},
        {"sizes", sizes_json(c.abn.sizes)},
        {"adaptive", c.abn.adaptive},
        {"pseudo_label_source", to_string(c.label_source)}}},
      {"ablation",
       {{"disable_balancing", c.ablation.disable_balancing},
        {"disable_negative", c.ablation.disable_negative},
        {"disable_adaptive", c.ablation.disable_adaptive}}},
      {"train",
       {{"max_epochs", c.train.max_epochs},
        {"early_stopping", c.train.early_stopping},
        {"window", c.train.window},
        {"min_epoch", c.train.min_epoch},
        {"comparator", to_string(c.train.comparator)},
        {"l2_rate", c.train.l2_rate},
        {"l2_scope", to_string(c.train.l2_scope)},
        {"dropout", c.train.dropout},
        {"lr", c.train.lr}}},
  };
}

ExperimentConfig merge_config(ExperimentConfig c, const json& j) {
  reject_unknown(j,
                 {"dataset", "per_class", "splits", "seed", "workers", "row_normalize", "val_size", "test_size",
                  "model", "abn", "ablation", "train"},
                 "config");
  read(j, "dataset", c.dataset, "config");
  read(j, "per_class", c.per_class, "config");
  read(j, "splits", c.num_splits, "config");
  read(j, "seed", c.base_seed, "config");
  read(j, "workers", c.workers, "config");
  read(j, "row_normalize", c.row_normalize, "config");
  read(j, "val_size", c.split_sizes.val, "config");
  read(j, "test_size", c.split_sizes.test, "config");
  if (j.contains("model")) {
    const auto& m = j.at("model");
    reject_unknown(m, {"kind", "hidden", "depth", "score_activation", "include_level_zero"}, "model");
    read_enum(m, "kind", [&](const std::string& s) { c.model.kind = parse_model_kind(s); }, "model");
    read(m, "hidden", c.model.hidden, "model");
    read(m, "depth", c.model.depth, "model");
    read_enum(m, "score_activation", [&](const std::string& s) { c.model.score_activation = parse_score_activation(s); },
              "model");
    read(m, "include_level_zero", c.model.include_level_zero, "model");
  }
  if (j.contains("abn")) {
    const auto& a = j.at("abn");
    reject_unknown(a, {"enabled", "beta", "lambda", "lambda1", "balancing", "sizes", "adaptive", "pseudo_label_source"},
                   "abn");
    read(a, "enabled", c.abn_enabled, "abn");
    read(a, "beta", c.abn.beta, "abn");
    read(a, "lambda", c.abn.lambda, "abn");
    read(a, "lambda1", c.abn.lambda1, "abn");
    read(a, "balancing", c.abn.balancing, "abn");
    read(a, "adaptive", c.abn.adaptive, "abn");
    if (a.contains("sizes")) c.abn.sizes = sizes_from(a.at("sizes"), "abn.sizes");
    read_enum(a, "pseudo_label_source", [&](const std::string& s) { c.label_source = parse_label_source(s); }, "abn");
  }
  if (j.contains("ablation")) {
    const auto& a = j.at("ablation");
    reject_unknown(a, {"disable_balancing", "disable_negative", "disable_adaptive"}, "ablation");
    read(a, "disable_balancing", c.ablation.disable_balancing, "ablation");
    read(a, "disable_negative", c.ablation.disable_negative, "ablation");
    read(a, "disable_adaptive", c.ablation.disable_adaptive, "ablation");
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    reject_unknown(t,
                   {"max_epochs", "early_stopping", "window", "min_epoch", "comparator", "l2_rate", "l2_scope",
                    "dropout", "lr"},
                   "train");
    read(t, "max_epochs", c.train.max_epochs, "train");
    read(t, "early_stopping", c.train.early_stopping, "train");
    read(t, "window", c.train.window, "train");
    read(t, "min_epoch", c.train.min_epoch, "train");
    read_enum(t, "comparator", [&](const std::string& s) { c.train.comparator = parse_stop_comparator(s); }, "train");
    read(t, "l2_rate", c.train.l2_rate, "train");
    read_enum(t, "l2_scope", [&](const std::string& s) { c.train.l2_scope = parse_l2_scope(s); }, "train");
    read(t, "dropout", c.train.dropout, "train");
    read(t, "lr", c.train.lr, "train");
  }
  return c;
}

std::vector<double> Report::accuracies() const {
  std::vector<double> out;
  for (const auto& s : splits) {
    if (s.ok) out.push_back(100.0 * s.test_acc);
  }
  return out;
}

json Report::to_json() const {
  auto rows = json::array();
  for (const auto& s : splits) {
    json r = {{"index", s.index},           {"split_seed", s.split_seed}, {"init_seed", s.init_seed},
              {"ok", s.ok},                 {"test_acc", s.test_acc},     {"val_acc", s.val_acc},
              {"best_epoch", s.best_epoch}, {"epochs_run", s.epochs_run}, {"stopped_early", s.stopped_early}};
    if (!s.ok) r["error"] = s.error;
    rows.push_back(r);
  }
  return {{"config", config},         {"splits", rows},  {"accuracies", accuracies()},
          {"mean", mean},             {"std", stddev},   {"failed", failed}};
}

std::string Report::to_table() const {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%5s  %12s  %8s  %8s  %6s  %6s  %s\n", "split", "seed", "test%", "val%", "best",
                "epochs", "status");
  out << line;
  for (const auto& s : splits) {
    std::snprintf(line, sizeof line, "%5zu  %12llu  %8s  %8s  %6zu  %6zu  %s\n", s.index,
                  static_cast<unsigned long long>(s.split_seed), s.ok ? percent(100.0 * s.test_acc).c_str() : "-",
                  s.ok ? percent(100.0 * s.val_acc).c_str() : "-", s.best_epoch, s.epochs_run,
                  s.ok ? (s.stopped_early ? "ok (early stop)" : "ok") : ("FAILED: " + s.error).c_str());
    out << line;
  }
  out << "mean " << percent(mean) << " +- " << percent(stddev) << " over " << accuracies().size() << " split(s)";
  if (failed) out << ", " << failed << " failed";
  out << '\n';
  return out.str();
}

std::uint64_t init_seed(std::uint64_t split_seed) { return derive_seed(split_seed, "init"); }

SplitOutcome run_split(const Graph& graph, const GraphOperands& ops, const ExperimentConfig& config, std::size_t index,
                       std::uint64_t seed) {
  SplitOutcome out;
  out.index = index;
  out.split_seed = seed;
  out.init_seed = init_seed(seed);
  try {
    const auto split = make_split(graph, config.per_class, seed, config.split_sizes);
    TrainConfig train = config.train;
    train.seed = out.init_seed;
    Trainer trainer(graph, ops, split, config.model, config.effective_abn(), train, config.label_source);
    const auto result = trainer.run();
    out.ok = true;
    out.test_acc = result.best.test_acc;
    out.val_acc = result.best.val_acc;
    out.best_epoch = result.best.epoch;
    out.epochs_run = result.epochs_run;
    out.stopped_early = result.stopped_early;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

Report run_benchmark(const Graph& graph, const ExperimentConfig& config) {
  config.validate();
  const auto ops = GraphOperands::build(graph, config.row_normalize);
  Report report;
  report.config = to_json(config);
  report.splits.resize(config.num_splits);
  parallel_for(config.num_splits, config.workers, [&](std::size_t i) {
    report.splits[i] = run_split(graph, ops, config, i, split_seed(config.base_seed, i));
  });
  const auto acc = report.accuracies();
  report.failed = report.splits.size() - acc.size();
  report.mean = mean_of(acc);
  if (acc.size() > 1) {
    double ss = 0.0;
    for (double a : acc) ss += (a - report.mean) * (a - report.mean);
    report.stddev = std::sqrt(ss / static_cast<double>(acc.size() - 1));
  }
  return report;
}

Report run_benchmark(const ExperimentConfig& config) {
  config.validate();
  const auto graph = load_bundle(config.dataset);
  return run_benchmark(graph, config);
}

SweepGrid SweepGrid::from_json(const json& j) {
  reject_unknown(j, {"beta", "lambda", "lambda1", "sizes", "balancing", "l2_rate", "dropout", "depth"}, "grid");
  SweepGrid g;
  read(j, "beta", g.beta, "grid");
  read(j, "lambda", g.lambda, "grid");
  read(j, "lambda1", g.lambda1, "grid");
  read(j, "balancing", g.balancing, "grid");
  read(j, "l2_rate", g.l2_rate, "grid");
  read(j, "dropout", g.dropout, "grid");
  read(j, "depth", g.depth, "grid");
  if (j.contains("sizes")) {
    if (!j.at("sizes").is_array()) throw ConfigError("grid.sizes must be an array of pairs");
    for (const auto& s : j.at("sizes")) g.sizes.push_back(sizes_from(s, "grid.sizes"));
  }
  return g;
}

json SweepGrid::to_json() const {
  auto sz = json::array();
  for (auto s : sizes) sz.push_back(sizes_json(s));
  return {{"beta", beta},       {"lambda", lambda},   {"lambda1", lambda1}, {"sizes", sz},
          {"balancing", balancing}, {"l2_rate", l2_rate}, {"dropout", dropout}, {"depth", depth}};
}

std::vector<ExperimentConfig> expand_grid(const ExperimentConfig& base, const SweepGrid& grid) {
  auto axis = [](const auto& values, auto fallback) {
    using T = decltype(fallback);
    return values.empty() ? std::vector<T>{fallback} : std::vector<T>(values.begin(), values.end());
  };
  const auto betas = axis(grid.beta, base.abn.beta);
  const auto lambdas = axis(grid.lambda, base.abn.lambda);
  const auto lambda1s = axis(grid.lambda1, base.abn.lambda1);
  const auto sizes = axis(grid.sizes, base.abn.sizes);
  const auto balancings = axis(grid.balancing, base.abn.balancing);
  const auto l2s = axis(grid.l2_rate, base.train.l2_rate);
  const auto dropouts = axis(grid.dropout, base.train.dropout);
  const auto depths = axis(grid.depth, base.model.depth);

  std::vector<ExperimentConfig> out;
  std::set<std::string> seen;
  for (double b : betas)
    for (double l : lambdas)
      for (double l1 : lambda1s)
        for (auto sz : sizes)
          for (bool bal : balancings)
            for (double l2 : l2s)
              for (double dr : dropouts)
                for (auto k : depths) {
                  ExperimentConfig c = base;
                  c.abn.beta = b;
                  c.abn.lambda = l;
                  c.abn.lambda1 = l1;
                  c.abn.sizes = l1 == 0.0 ? SampleSizes{0, 0} : sz;
                  c.abn.balancing = bal;
                  c.train.l2_rate = l2;
                  c.train.dropout = dr;
                  c.model.depth = k;
                  try {
                    c.validate();
                  } catch (const ConfigError&) {
                    continue;
                  }
                  if (seen.insert(to_json(c).dump()).second) out.push_back(std::move(c));
                }
  if (out.empty()) throw ConfigError("sweep grid is empty");
  return out;
}

std::uint64_t tuning_seed(std::uint64_t base, std::size_t index) { return derive_seed(base, "tune", index); }

json SweepResult::to_json() const {
  auto rows = json::array();
  for (const auto& e : leaderboard) {
    rows.push_back({{"config", abn::to_json(e.config)},
                    {"mean_val_acc", e.mean_val_acc},
                    {"mean_test_acc", e.mean_test_acc},
                    {"failed", e.failed}});
  }
  return {{"winner", rows.empty() ? json() : rows.front()}, {"leaderboard", rows}};
}

std::string SweepResult::to_table() const {
  std::ostringstream out;
  char line[200];
  std::snprintf(line, sizeof line, "%4s  %5s  %6s  %7s  %7s  %5s  %7s  %7s  %5s  %8s  %8s\n", "rank", "beta", "lambda",
                "lambda1", "(I,J)", "bal", "l2", "dropout", "k", "val%", "test%");
  out << line;
  for (std::size_t i = 0; i < leaderboard.size(); ++i) {
    const auto& e = leaderboard[i];
    const auto& c = e.config;
    const std::string ij = "(" + std::to_string(c.abn.sizes.positives) + "," + std::to_string(c.abn.sizes.negatives) + ")";
    std::snprintf(line, sizeof line, "%4zu  %5.2f  %6.2f  %7.2f  %7s  %5s  %7.4f  %7.2f  %5zu  %8s  %8s\n", i + 1,
                  c.abn.beta, c.abn.lambda, c.abn.lambda1, ij.c_str(), c.abn.balancing ? "on" : "off",
                  c.train.l2_rate, c.train.dropout, c.model.depth, percent(e.mean_val_acc).c_str(),
                  percent(e.mean_test_acc).c_str());
    out << line;
  }
  return out.str();
}

SweepResult run_sweep(const Graph& graph, const ExperimentConfig& base, const SweepGrid& grid,
                      std::size_t tuning_splits) {
  if (tuning_splits == 0) throw ConfigError("sweep needs at least one tuning split");
  const auto configs = expand_grid(base, grid);
  const auto ops = GraphOperands::build(graph, base.row_normalize);
  std::vector<SplitOutcome> outcomes(configs.size() * tuning_splits);
  parallel_for(outcomes.size(), base.workers, [&](std::size_t task) {
    const auto ci = task / tuning_splits;
    const auto si = task % tuning_splits;
    outcomes[task] = run_split(graph, ops, configs[ci], si, tuning_seed(base.base_seed, si));
  });

  SweepResult result;
  for (std::size_t ci = 0; ci < configs.size(); ++ci) {
    SweepEntry e;
    e.config = configs[ci];
    std::vector<double> val, test;
    for (std::size_t si = 0; si < tuning_splits; ++si) {
      const auto& o = outcomes[ci * tuning_splits + si];
      if (!o.ok) {
        ++e.failed;
        continue;
      }
      val.push_back(100.0 * o.val_acc);
      test.push_back(100.0 * o.test_acc);
    }
    e.mean_val_acc = mean_of(val);
    e.mean_test_acc = mean_of(test);
    result.leaderboard.push_back(std::move(e));
  }
  std::stable_sort(result.leaderboard.begin(), result.leaderboard.end(), [](const SweepEntry& a, const SweepEntry& b) {
    if (a.failed != b.failed) return a.failed < b.failed;
    return a.mean_val_acc > b.mean_val_acc;
  });
  return result;
}

SplitOutcome run_diagnose(const Graph& graph, const ExperimentConfig& config, const DiagnoseOptions& options,
                          const std::filesystem::path& out_dir) {
  config.validate();
  std::filesystem::create_directories(out_dir);
  const auto ops = GraphOperands::build(graph, config.row_normalize);
  const auto seed = split_seed(config.base_seed, options.split_index);
  const auto split = make_split(graph, config.per_class, seed, config.split_sizes);
  const auto labeled = split.labeled(graph);
  const auto unlabeled = split.unlabeled(graph.num_nodes());
  TrainConfig train = config.train;
  train.seed = init_seed(seed);

  auto open = [&](const char* name) {
    std::ofstream f(out_dir / name);
    if (!f) throw std::runtime_error("cannot write " + (out_dir / name).string());
    return f;
  };
  auto hist = open("confidence_histogram.csv");
  auto dist = open("pseudo_label_distribution.csv");
  auto corr = open("confidence_accuracy.csv");
  auto gap = open("gradient_gap.csv");
  hist << "epoch";
  corr << "epoch";
  for (int b = 0; b < 10; ++b) {
    const std::string edge = "[" + csv_number(b / 10.0) + "," + csv_number((b + 1) / 10.0) + (b == 9 ? "]" : ")");
    hist << ",\"" << edge << '"';
    corr << ",\"" << edge << '"';
  }
  hist << '\n';
  corr << '\n';
  dist << "epoch";
  for (std::size_t c = 0; c < graph.num_classes; ++c) dist << ",class_" << c;
  dist << '\n';
  gap << "epoch,theta,error_rate,num_unlabeled,num_labeled,bound\n";

  std::set<std::size_t> extra(options.epochs.begin(), options.epochs.end());
  double theta = 0.0;
  Trainer trainer(graph, ops, split, config.model, config.effective_abn(), train, config.label_source);
  trainer.on_epoch = [&](const EpochView& view) {
    const auto epoch = view.record->epoch;
    const bool traced = (options.every > 0 && epoch % options.every == 0) || extra.count(epoch) > 0;
    if (!traced) return;
    const auto& probs = *view.eval_probs;
    const auto assignment = pseudo_labels(probs, unlabeled);
    hist << epoch;
    for (double v : confidence_histogram(probs, unlabeled)) hist << ',' << csv_number(v);
    hist << '\n';
    dist << epoch;
    for (double v : pseudo_label_distribution(assignment, unlabeled, graph.num_classes)) dist << ',' << csv_number(v);
    dist << '\n';
    corr << epoch;
    for (const auto& v : confidence_accuracy_correlation(probs, unlabeled, graph.labels)) {
      corr << ',';
      if (v) corr << csv_number(*v);
    }
    corr << '\n';
    theta = std::max(theta, max_node_gradient_norm(ops, *view.params, config.model, labeled));
    const double err = empirical_error_rate(assignment, unlabeled, graph.labels);
    gap << epoch << ',' << csv_number(theta) << ',' << csv_number(err) << ',' << unlabeled.size() << ','
        << labeled.size() << ',' << csv_number(gradient_gap_bound(theta, unlabeled.size(), labeled.size(), err))
        << '\n';
  };

  SplitOutcome out;
  out.index = options.split_index;
  out.split_seed = seed;
  out.init_seed = train.seed;
  try {
    const auto result = trainer.run();
    out.ok = true;
    out.test_acc = result.best.test_acc;
    out.val_acc = result.best.val_acc;
    out.best_epoch = result.best.epoch;
    out.epochs_run = result.epochs_run;
    out.stopped_early = result.stopped_early;
    auto epochs = open("epochs.csv");
    epochs << "epoch,train_loss,val_loss,val_acc,test_acc,adaptive_size\n";
    for (const auto& r : result.records) {
      epochs << r.epoch << ',' << csv_number(r.train_loss) << ',' << csv_number(r.val_loss) << ','
             << csv_number(r.val_acc) << ',' << csv_number(r.test_acc) << ',' << r.adaptive_size << '\n';
    }
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

}  // namespace abn
