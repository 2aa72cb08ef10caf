#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "abn/data_io.hpp"
#include "abn/models.hpp"
#include "abn/objective.hpp"
#include "abn/optim.hpp"
#include "abn/trainer.hpp"

namespace abn {

/// Invalid or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Ablation {
  bool disable_balancing = false;
  bool disable_negative = false;
  /// Every unlabeled node is pseudo labeled regardless of confidence.
  bool disable_adaptive = false;
};

struct ExperimentConfig {
  std::string dataset;
  ModelConfig model;
  bool abn_enabled = true;
  AbnConfig abn;
  Ablation ablation;
  TrainConfig train;
  LabelSource label_source = LabelSource::Train;
  bool row_normalize = false;
  std::size_t per_class = 1;
  std::size_t num_splits = 20;
  std::uint64_t base_seed = 0;
  std::size_t workers = 0;  // 0: one per hardware thread
  SplitSizes split_sizes;

  /// The objective actually trained: ABN with the ablation toggles applied,
  /// or plain supervised training when ABN is off.
  AbnConfig effective_abn() const;
  /// Throws ConfigError.
  void validate() const;
};

/// Defaults for a model on a dataset: the searched settings for the
/// ABN-over-GCN and ABN-over-DAGNN rows on Cora and CiteSeer when known, and
/// plain base-model settings otherwise. `dataset_name` is matched
/// case-insensitively against "cora" and "citeseer".
ExperimentConfig preset(ModelKind kind, const std::string& dataset_name, std::size_t per_class, bool abn_enabled = true);

nlohmann::json to_json(const ExperimentConfig& config);
/// Overlays the keys present in `j` on `base`. Unknown keys, wrong types
/// and out-of-range values raise ConfigError.
ExperimentConfig merge_config(ExperimentConfig base, const nlohmann::json& j);

struct SplitOutcome {
  std::size_t index = 0;
  std::uint64_t split_seed = 0;
  std::uint64_t init_seed = 0;
  bool ok = false;
  std::string error;
  double test_acc = 0.0;
  double val_acc = 0.0;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  bool stopped_early = false;
};

struct Report {
  nlohmann::json config;
  std::vector<SplitOutcome> splits;  // sorted by index
  double mean = 0.0;                 // over successful splits, in percent
  double stddev = 0.0;               // sample standard deviation; 0 for one split
  std::size_t failed = 0;

  std::vector<double> accuracies() const;  // percent, successful splits only
  nlohmann::json to_json() const;
  std::string to_table() const;
};

/// Split seed for evaluation split `index`.
inline std::uint64_t split_seed(std::uint64_t base, std::size_t index) { return base + index; }
/// Initialization / per-run seed derived from a split seed.
std::uint64_t init_seed(std::uint64_t split_seed);

/// One full training run on the split drawn from `seed`; `index` only labels
/// the outcome. Exceptions are caught and reported in the outcome.
SplitOutcome run_split(const Graph& graph, const GraphOperands& ops, const ExperimentConfig& config, std::size_t index,
                       std::uint64_t seed);

/// Runs the configured splits on a worker pool. A failing split is reported
/// and the rest continue.
Report run_benchmark(const Graph& graph, const ExperimentConfig& config);
Report run_benchmark(const ExperimentConfig& config);

/// Grid over hyperparameters. Each axis left empty keeps the base value.
struct SweepGrid {
  std::vector<double> beta;
  std::vector<double> lambda;
  std::vector<double> lambda1;
  std::vector<SampleSizes> sizes;
  std::vector<bool> balancing;
  std::vector<double> l2_rate;
  std::vector<double> dropout;
  std::vector<std::size_t> depth;

  static SweepGrid from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct SweepEntry {
  ExperimentConfig config;
  double mean_val_acc = 0.0;   // percent, over the tuning splits
  double mean_test_acc = 0.0;  // percent, reported only
  std::size_t failed = 0;
};

struct SweepResult {
  std::vector<SweepEntry> leaderboard;  // best first
  const SweepEntry& winner() const { return leaderboard.front(); }
  nlohmann::json to_json() const;
  std::string to_table() const;
};

/// Every valid combination of the grid over `base`. Settings with
/// lambda1 = 0 drop the sample sizes (they are unused), duplicates collapse.
/// Throws ConfigError when the grid yields nothing.
std::vector<ExperimentConfig> expand_grid(const ExperimentConfig& base, const SweepGrid& grid);

/// Tuning split seeds: disjoint from the evaluation seeds base..base+N-1.
std::uint64_t tuning_seed(std::uint64_t base, std::size_t index);

/// Ranks every grid point by mean validation accuracy over `tuning_splits`
/// tuning splits. Ties keep grid order; test accuracy never influences the ranking.
SweepResult run_sweep(const Graph& graph, const ExperimentConfig& base, const SweepGrid& grid,
                      std::size_t tuning_splits = 5);

struct DiagnoseOptions {
  std::size_t split_index = 0;
  std::size_t every = 10;  // trace every n-th epoch (epoch 0 included)
  std::vector<std::size_t> epochs;  // extra epochs to trace
};

/// Trains one split and writes CSV traces (confidence histogram, pseudo
/// label distribution, confidence vs accuracy, gradient-gap bound) into
/// `out_dir`. Returns the run's outcome.
SplitOutcome run_diagnose(const Graph& graph, const ExperimentConfig& config, const DiagnoseOptions& options,
                          const std::filesystem::path& out_dir);

}  // namespace abn
