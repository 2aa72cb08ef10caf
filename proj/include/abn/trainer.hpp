#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "abn/data_io.hpp"
#include "abn/graph.hpp"
#include "abn/models.hpp"
#include "abn/objective.hpp"
#include "abn/optim.hpp"
#include "abn/tape.hpp"

namespace abn {

/// Sparse operands shared by every run on one graph.
struct GraphOperands {
  ad::SparseOperand laplacian;
  ad::SparseOperand features;

  static GraphOperands build(const Graph& graph, bool row_normalize = false);
};

/// Which output the per-epoch pseudo labels are read from: the dropout
/// forward that is being trained (Train) or a dropout-free forward with the
/// same parameters (Eval).
enum class LabelSource { Train, Eval };
std::string to_string(LabelSource s);
LabelSource parse_label_source(const std::string& s);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
  double test_acc = 0.0;
  std::size_t adaptive_size = 0;
  std::vector<std::size_t> adaptive_counts;  // per class
};

nlohmann::json to_json(const EpochRecord& r);
EpochRecord epoch_record_from_json(const nlohmann::json& j);

struct TrainResult {
  ModelParams best_params;
  EpochRecord best;  // epoch selected by validation accuracy
  std::vector<EpochRecord> records;
  std::size_t epochs_run = 0;
  bool stopped_early = false;

  double test_accuracy() const { return best.test_acc; }
};

/// What the per-epoch hook sees. Pointers stay valid only during the call.
struct EpochView {
  const EpochRecord* record;
  const Tensor* eval_probs;   // dropout-free F before this epoch's update
  const Tensor* train_probs;  // F of the training forward
  const AdaptiveSet* adaptive;
  const NegativeSample* negatives;
  const ModelParams* params;  // parameters that produced eval_probs
};

/// One training run (a split, a model, an objective). Every epoch:
///   1. dropout-free forward: validation loss and accuracy, test accuracy,
///      best-epoch tracking, early-stopping check;
///   2. dropout forward, adaptive set, balancing, negative sampling, loss;
///   3. backward and Adam update.
/// All randomness is derived from train.seed, so a run is a pure function of
/// its inputs, and a saved state resumes to the identical trajectory.
class Trainer {
 public:
  Trainer(const Graph& graph, GraphOperands operands, Split split, ModelConfig model, AbnConfig abn,
          TrainConfig train, LabelSource label_source = LabelSource::Train);

  /// Runs one epoch. Returns false once training has finished (the call
  /// that detects the stop does no update).
  bool step();
  TrainResult run();

  bool finished() const { return finished_; }
  std::size_t epoch() const { return epoch_; }
  const ModelParams& params() const { return params_; }
  TrainResult result() const;

  /// Full state: parameters, Adam moments, epoch counter, validation-loss
  /// history, best epoch and records.
  void save_state(const std::filesystem::path& path) const;
  void load_state(const std::filesystem::path& path);

  std::function<void(const EpochView&)> on_epoch;

 private:
  const Graph* graph_;
  GraphOperands ops_;
  Split split_;
  std::vector<LabeledNode> labeled_;
  std::vector<NodeId> unlabeled_;
  ModelConfig model_;
  AbnConfig abn_;
  TrainConfig train_;
  LabelSource label_source_;

  ModelParams params_;
  AdamState adam_;
  std::size_t epoch_ = 0;
  bool finished_ = false;
  bool stopped_early_ = false;
  std::vector<double> val_history_;
  std::vector<EpochRecord> records_;
  std::optional<EpochRecord> best_;
  ModelParams best_params_;
};

/// Convenience wrapper: builds operands and runs to completion.
TrainResult train(const Graph& graph, const Split& split, const ModelConfig& model, const AbnConfig& abn,
                  const TrainConfig& config, LabelSource label_source = LabelSource::Train);

}  // namespace abn
