#include "abn/trainer.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "abn/checkpoint.hpp"

namespace abn {
namespace {

void append_blocks(std::vector<const Tensor*>& out, const ModelParams& p) {
  for (const auto* t : trainable(p)) out.push_back(t);
}

ModelParams take_params(const nlohmann::json& header, std::vector<Tensor>& blocks, std::size_t& cursor) {
  const std::size_t count = parse_model_kind(header.at("model").get<std::string>()) == ModelKind::Gcn ? 2 : 3;
  if (cursor + count > blocks.size()) throw std::runtime_error("trainer state: missing parameter blocks");
  std::vector<Tensor> mine(std::make_move_iterator(blocks.begin() + static_cast<std::ptrdiff_t>(cursor)),
                           std::make_move_iterator(blocks.begin() + static_cast<std::ptrdiff_t>(cursor + count)));
  cursor += count;
  return params_from_blob(header, std::move(mine));
}

}  // namespace

GraphOperands GraphOperands::build(const Graph& graph, bool row_normalize) {
  auto lap = std::make_shared<const CsrMatrix>(normalized_laplacian(graph).matrix);
  GraphOperands ops;
  ops.laplacian = ad::SparseOperand::symmetric(lap);
  ops.features = ad::SparseOperand::general(row_normalize ? row_normalized(graph.features) : graph.features);
  return ops;
}

std::string to_string(LabelSource s) { return s == LabelSource::Train ? "train" : "eval"; }

LabelSource parse_label_source(const std::string& s) {
  if (s == "train") return LabelSource::Train;
  if (s == "eval") return LabelSource::Eval;
  throw std::invalid_argument("unknown pseudo-label source '" + s + "' (expected train or eval)");
}

nlohmann::json to_json(const EpochRecord& r) {
  return {{"epoch", r.epoch},       {"train_loss", r.train_loss},       {"val_loss", r.val_loss},
          {"val_acc", r.val_acc},   {"test_acc", r.test_acc},           {"adaptive_size", r.adaptive_size},
          {"adaptive_counts", r.adaptive_counts}};
}

EpochRecord epoch_record_from_json(const nlohmann::json& j) {
  EpochRecord r;
  r.epoch = j.at("epoch").get<std::size_t>();
  r.train_loss = j.at("train_loss").get<double>();
  r.val_loss = j.at("val_loss").get<double>();
  r.val_acc = j.at("val_acc").get<double>();
  r.test_acc = j.at("test_acc").get<double>();
  r.adaptive_size = j.at("adaptive_size").get<std::size_t>();
  r.adaptive_counts = j.at("adaptive_counts").get<std::vector<std::size_t>>();
  return r;
}

Trainer::Trainer(const Graph& graph, GraphOperands operands, Split split, ModelConfig model, AbnConfig abn,
                 TrainConfig train, LabelSource label_source)
    : graph_(&graph),
      ops_(std::move(operands)),
      split_(std::move(split)),
      model_(model),
      abn_(abn),
      train_(train),
      label_source_(label_source) {
  split_.validate(graph.num_nodes());
  if (split_.val.empty() || split_.test.empty()) throw std::invalid_argument("trainer: empty validation or test set");
  abn_.validate();
  train_.validate();
  labeled_ = split_.labeled(graph);
  unlabeled_ = split_.unlabeled(graph.num_nodes());
  Rng init_rng(train_.seed);
  params_ = init_params(model_, ops_.features.forward().cols, graph.num_classes, init_rng);
  adam_.lr = train_.lr;
  best_params_ = params_;
}

bool Trainer::step() {
  if (finished_) return false;
  if (epoch_ >= train_.max_epochs) {
    finished_ = true;
    return false;
  }
  const auto& labels = graph_->labels;

  EpochRecord rec;
  rec.epoch = epoch_;
  Tensor eval_probs;
  {
    ad::Tape tape;
    const auto fwd = model_forward(tape, ops_.laplacian, ops_.features, params_, model_, DropoutSpec{});
    eval_probs = tape.value(fwd.probs);
  }
  rec.val_loss = mean_cross_entropy(eval_probs, split_.val, labels);
  rec.val_acc = evaluate(eval_probs, split_.val, labels);
  rec.test_acc = evaluate(eval_probs, split_.test, labels);
  if (!std::isfinite(rec.val_loss)) throw DivergenceError("validation loss is not finite at epoch " + std::to_string(epoch_));

  val_history_.push_back(rec.val_loss);
  if (!best_ || rec.val_acc > best_->val_acc || (rec.val_acc == best_->val_acc && rec.val_loss < best_->val_loss)) {
    best_ = rec;
    best_params_ = params_;
  }
  if (train_.early_stopping && early_stop_check(val_history_, train_)) {
    finished_ = true;
    stopped_early_ = true;
    return false;
  }

  Rng dropout_rng(derive_seed(train_.seed, "dropout", epoch_));
  Rng sample_rng(derive_seed(train_.seed, "negatives", epoch_));
  ad::Tape tape;
  const auto fwd = model_forward(tape, ops_.laplacian, ops_.features, params_, model_,
                                 DropoutSpec{train_.dropout, true, &dropout_rng});
  const Tensor& train_probs = tape.value(fwd.probs);
  const Tensor& source = label_source_ == LabelSource::Train ? train_probs : eval_probs;

  AdaptiveSet adaptive = abn_.adaptive ? adaptive_pseudo_labels(source, unlabeled_, abn_.beta)
                                       : all_pseudo_labels(source, unlabeled_);
  adaptive = balancing_factors(std::move(adaptive), abn_.balancing);
  rec.adaptive_size = adaptive.size();
  rec.adaptive_counts = adaptive.class_counts(graph_->num_classes);

  NegativeSample sample;
  if (abn_.lambda1 != 0.0 && abn_.sizes.positives > 0) {
    std::vector<LabeledNode> pool = labeled_;
    for (std::size_t i = 0; i < adaptive.size(); ++i) pool.push_back({adaptive.members[i], adaptive.labels[i]});
    sample = sample_negatives(*graph_, pool, abn_.sizes, sample_rng);
  }

  const auto loss = abn_loss(tape, fwd.probs, labeled_, adaptive, sample, abn_);
  rec.train_loss = tape.value(loss)[0];
  if (!std::isfinite(rec.train_loss)) {
    throw DivergenceError("training loss is not finite; epoch record: " + to_json(rec).dump());
  }
  tape.backward(loss);
  std::vector<Tensor> grads;
  for (auto v : fwd.parameters) grads.push_back(tape.grad(v));

  if (on_epoch) {
    const EpochView view{&rec, &eval_probs, &train_probs, &adaptive, &sample, &params_};
    on_epoch(view);
  }

  const auto targets = trainable(params_);
  try {
    adam_step(adam_, targets, grads, train_.l2_rate, train_.l2_scope);
  } catch (const DivergenceError& e) {
    throw DivergenceError(std::string(e.what()) + "; epoch record: " + to_json(rec).dump());
  }
  records_.push_back(std::move(rec));
  ++epoch_;
  return true;
}

TrainResult Trainer::run() {
  while (step()) {
  }
  return result();
}

TrainResult Trainer::result() const {
  TrainResult r;
  r.best_params = best_params_;
  if (best_) r.best = *best_;
  r.records = records_;
  r.epochs_run = epoch_;
  r.stopped_early = stopped_early_;
  return r;
}

void Trainer::save_state(const std::filesystem::path& path) const {
  nlohmann::json h = params_header(params_, train_.seed);
  h["epoch"] = epoch_;
  h["finished"] = finished_;
  h["stopped_early"] = stopped_early_;
  h["adam_t"] = adam_.t;
  h["moments"] = adam_.m.size();
  h["val_history"] = val_history_;
  auto recs = nlohmann::json::array();
  for (const auto& r : records_) recs.push_back(to_json(r));
  h["records"] = recs;
  h["best"] = best_ ? to_json(*best_) : nlohmann::json();

  std::vector<const Tensor*> blocks;
  append_blocks(blocks, params_);
  for (const auto& m : adam_.m) blocks.push_back(&m);
  for (const auto& v : adam_.v) blocks.push_back(&v);
  append_blocks(blocks, best_params_);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_blob(out, h, blocks);
}

void Trainer::load_state(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  auto blob = read_blob(in);
  const auto& h = blob.header;
  if (parse_model_kind(h.at("model").get<std::string>()) != model_.kind) {
    throw std::runtime_error("trainer state: model kind does not match this trainer");
  }
  std::size_t cursor = 0;
  auto params = take_params(h, blob.blocks, cursor);
  const auto moments = h.at("moments").get<std::size_t>();
  if (cursor + 2 * moments > blob.blocks.size()) throw std::runtime_error("trainer state: missing moment blocks");
  AdamState adam;
  adam.lr = train_.lr;
  adam.t = h.at("adam_t").get<std::uint64_t>();
  for (std::size_t i = 0; i < moments; ++i) adam.m.push_back(std::move(blob.blocks[cursor++]));
  for (std::size_t i = 0; i < moments; ++i) adam.v.push_back(std::move(blob.blocks[cursor++]));
  auto best_params = take_params(h, blob.blocks, cursor);

  params_ = std::move(params);
  best_params_ = std::move(best_params);
  adam_ = std::move(adam);
  epoch_ = h.at("epoch").get<std::size_t>();
  finished_ = h.at("finished").get<bool>();
  stopped_early_ = h.at("stopped_early").get<bool>();
  val_history_ = h.at("val_history").get<std::vector<double>>();
  records_.clear();
  for (const auto& r : h.at("records")) records_.push_back(epoch_record_from_json(r));
  best_.reset();
  if (!h.at("best").is_null()) best_ = epoch_record_from_json(h.at("best"));
}

TrainResult train(const Graph& graph, const Split& split, const ModelConfig& model, const AbnConfig& abn,
                  const TrainConfig& config, LabelSource label_source) {
  Trainer trainer(graph, GraphOperands::build(graph), split, model, abn, config, label_source);
  return trainer.run();
}

}  // namespace abn
