// abn: benchmark runner for adaptive pseudo labeling over GCN and DAGNN.
//
// Exit status: 0 success, 1 at least one split failed, 2 bad configuration.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "abn/data_io.hpp"
#include "abn/experiment.hpp"
#include "abn/graph.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitFailedSplit = 1;
constexpr int kExitConfig = 2;

struct CommonFlags {
  std::string dataset;
  std::optional<std::string> model;
  std::optional<std::size_t> per_class;
  std::optional<std::size_t> splits;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::string config_file;
  std::string out_dir;
  bool full_100 = false;
  bool baseline = false;
  bool disable_balancing = false;
  bool disable_negative = false;
  bool disable_adaptive = false;
};

void add_common(CLI::App& cmd, CommonFlags& f) {
  cmd.add_option("--dataset", f.dataset, "Bundle directory");
  cmd.add_option("--model", f.model, "Base model")->check(CLI::IsMember({"gcn", "dagnn"}));
  cmd.add_option("--per-class", f.per_class, "Labeled nodes per class");
  cmd.add_option("--splits", f.splits, "Number of random splits (default 20)");
  cmd.add_option("--seed", f.seed, "Base seed; split i uses seed+i");
  cmd.add_option("--workers", f.workers, "Parallel runs (default: hardware threads)");
  cmd.add_option("--config", f.config_file, "JSON file mirroring the experiment configuration");
  cmd.add_option("--out", f.out_dir, "Directory for reports");
  cmd.add_flag("--full-100", f.full_100, "Use 100 splits");
  cmd.add_flag("--baseline", f.baseline, "Train the base model only (no pseudo labels)");
  cmd.add_flag("--disable-balancing", f.disable_balancing, "Ablation: no pseudo label balancing");
  cmd.add_flag("--disable-negative", f.disable_negative, "Ablation: no negative sampling");
  cmd.add_flag("--disable-adaptive", f.disable_adaptive, "Ablation: pseudo label every unlabeled node");
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw abn::ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw abn::ConfigError(path + ": " + e.what());
  }
}

// Preset for the model and dataset, then the config file, then flags.
abn::ExperimentConfig resolve(const CommonFlags& f) {
  json file = json::object();
  if (!f.config_file.empty()) file = read_json_file(f.config_file);
  if (!file.is_object()) throw abn::ConfigError("config file must hold a JSON object");

  std::string dataset = f.dataset;
  if (dataset.empty() && file.contains("dataset") && file["dataset"].is_string()) dataset = file["dataset"];
  if (dataset.empty()) throw abn::ConfigError("no dataset given (use --dataset or \"dataset\" in the config)");

  std::string model = "gcn";
  if (file.contains("model") && file["model"].is_object() && file["model"].contains("kind") &&
      file["model"]["kind"].is_string()) {
    model = file["model"]["kind"];
  }
  if (f.model) model = *f.model;
  std::size_t per_class = 1;
  if (file.contains("per_class") && file["per_class"].is_number_unsigned()) per_class = file["per_class"];
  if (f.per_class) per_class = *f.per_class;
  bool abn_on = !f.baseline;
  if (file.contains("abn") && file["abn"].is_object() && file["abn"].contains("enabled") &&
      file["abn"]["enabled"].is_boolean() && !f.baseline) {
    abn_on = file["abn"]["enabled"];
  }

  abn::ModelKind kind;
  try {
    kind = abn::parse_model_kind(model);
  } catch (const std::invalid_argument& e) {
    throw abn::ConfigError(e.what());
  }
  auto config = abn::preset(kind, std::filesystem::path(dataset).filename().string(), per_class, abn_on);
  config = abn::merge_config(config, file);
  config.dataset = dataset;
  config.model.kind = kind;
  config.per_class = per_class;
  config.abn_enabled = abn_on;
  if (f.splits) config.num_splits = *f.splits;
  if (f.full_100) config.num_splits = 100;
  if (f.seed) config.base_seed = *f.seed;
  if (f.workers) config.workers = *f.workers;
  if (f.disable_balancing) config.ablation.disable_balancing = true;
  if (f.disable_negative) config.ablation.disable_negative = true;
  if (f.disable_adaptive) config.ablation.disable_adaptive = true;
  config.validate();
  return config;
}

abn::Graph load(const std::string& path) {
  try {
    return abn::load_bundle(path);
  } catch (const abn::BundleError& e) {
    throw abn::ConfigError(std::string("cannot load bundle: ") + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

int cmd_bench(const CommonFlags& f) {
  const auto config = resolve(f);
  const auto graph = load(config.dataset);
  const auto report = abn::run_benchmark(graph, config);
  std::cout << "dataset " << graph.name << ", model " << abn::to_string(config.model.kind)
            << (config.abn_enabled ? " + ABN" : "") << ", " << config.per_class << " label(s)/class, "
            << config.num_splits << " split(s), early-stop comparator "
            << abn::to_string(config.train.comparator) << ", row_normalize "
            << (config.row_normalize ? "on" : "off") << "\n";
  std::cout << report.to_table();
  if (!f.out_dir.empty()) {
    std::filesystem::create_directories(f.out_dir);
    write_text(std::filesystem::path(f.out_dir) / "report.json", report.to_json().dump(2) + "\n");
    write_text(std::filesystem::path(f.out_dir) / "report.txt", report.to_table());
  }
  return report.failed ? kExitFailedSplit : kExitOk;
}

int cmd_sweep(const CommonFlags& f, const std::string& grid_file, std::size_t tuning_splits) {
  const auto config = resolve(f);
  abn::SweepGrid grid;
  if (!grid_file.empty()) {
    grid = abn::SweepGrid::from_json(read_json_file(grid_file));
  } else {
    for (int b = 1; b <= 9; ++b) grid.beta.push_back(b / 10.0);
  }
  const auto graph = load(config.dataset);
  const auto result = abn::run_sweep(graph, config, grid, tuning_splits);
  std::cout << result.to_table();
  if (!f.out_dir.empty()) {
    std::filesystem::create_directories(f.out_dir);
    write_text(std::filesystem::path(f.out_dir) / "sweep.json", result.to_json().dump(2) + "\n");
    write_text(std::filesystem::path(f.out_dir) / "sweep.txt", result.to_table());
  }
  const bool any_failed = std::any_of(result.leaderboard.begin(), result.leaderboard.end(),
                                      [](const abn::SweepEntry& e) { return e.failed > 0; });
  return any_failed ? kExitFailedSplit : kExitOk;
}

int cmd_diagnose(const CommonFlags& f, const abn::DiagnoseOptions& options) {
  const auto config = resolve(f);
  const std::string out = f.out_dir.empty() ? std::string("diagnose") : f.out_dir;
  const auto graph = load(config.dataset);
  const auto outcome = abn::run_diagnose(graph, config, options, out);
  if (!outcome.ok) {
    std::cerr << "run failed: " << outcome.error << "\n";
    return kExitFailedSplit;
  }
  std::cout << "split " << outcome.index << " (seed " << outcome.split_seed << "): test accuracy "
            << 100.0 * outcome.test_acc << "% at epoch " << outcome.best_epoch << "; traces written to " << out
            << "\n";
  return kExitOk;
}

int cmd_inspect(const std::string& dataset) {
  if (dataset.empty()) throw abn::ConfigError("inspect-bundle needs --dataset");
  const auto graph = load(dataset);
  const auto n = graph.num_nodes();
  std::vector<std::size_t> per_class(graph.num_classes, 0);
  for (auto y : graph.labels) ++per_class[static_cast<std::size_t>(y)];
  std::size_t isolated = 0;
  for (abn::NodeId v = 0; v < n; ++v) isolated += graph.degree(v) == 0;

  const auto lap = abn::normalized_laplacian(graph);
  abn::Tensor x(n, 1);
  for (std::size_t i = 0; i < n; ++i) x[i] = lap.sqrt_degree[i];
  const auto y = abn::spmm(lap, x);
  double deviation = 0.0;
  for (std::size_t i = 0; i < n; ++i) deviation = std::max(deviation, std::abs(y[i] - x[i]));

  json j = {{"name", graph.name},
            {"num_nodes", n},
            {"num_edges", graph.num_edges()},
            {"num_features", graph.num_features()},
            {"num_classes", graph.num_classes},
            {"feature_nonzeros", graph.features.nnz()},
            {"max_degree", graph.max_degree()},
            {"isolated_nodes", isolated},
            {"class_sizes", per_class},
            {"label_rate_1", static_cast<double>(graph.num_classes) / static_cast<double>(n)},
            {"label_rate_20", 20.0 * static_cast<double>(graph.num_classes) / static_cast<double>(n)},
            {"laplacian_eigen_deviation", deviation}};
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive pseudo labeling, balancing and negative sampling over GCN / DAGNN"};
  app.require_subcommand(1);

  CommonFlags bench_flags, sweep_flags, diag_flags;
  auto* bench = app.add_subcommand("bench", "Train and evaluate over random splits");
  add_common(*bench, bench_flags);

  auto* sweep = app.add_subcommand("sweep", "Grid search on tuning splits, ranked by validation accuracy");
  add_common(*sweep, sweep_flags);
  std::string grid_file;
  std::size_t tuning_splits = 5;
  sweep->add_option("--grid", grid_file, "JSON grid; default sweeps beta over 0.1..0.9");
  sweep->add_option("--tuning-splits", tuning_splits, "Tuning splits per grid point");

  auto* diagnose = app.add_subcommand("diagnose", "Trace confidence and pseudo-label statistics of one run");
  add_common(*diagnose, diag_flags);
  abn::DiagnoseOptions diag_options;
  diagnose->add_option("--split", diag_options.split_index, "Split index");
  diagnose->add_option("--every", diag_options.every, "Trace every n-th epoch");
  diagnose->add_option("--epochs", diag_options.epochs, "Additional epochs to trace");

  auto* inspect = app.add_subcommand("inspect-bundle", "Print statistics of a dataset bundle");
  std::string inspect_dataset;
  inspect->add_option("--dataset", inspect_dataset, "Bundle directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*bench) return cmd_bench(bench_flags);
    if (*sweep) return cmd_sweep(sweep_flags, grid_file, tuning_splits);
    if (*diagnose) return cmd_diagnose(diag_flags, diag_options);
    if (*inspect) return cmd_inspect(inspect_dataset);
  } catch (const abn::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailedSplit;
  }
  return kExitOk;
}
