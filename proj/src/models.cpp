#include "abn/models.hpp"

#include <optional>
#include <stdexcept>

namespace abn {
namespace {

bool dropout_active(const DropoutSpec& d) { return d.training && d.rate > 0.0; }

Rng& dropout_rng(const DropoutSpec& d) {
  if (d.rng == nullptr) throw std::invalid_argument("training-mode dropout needs an rng");
  return *d.rng;
}

ad::SparseOperand maybe_drop(const ad::SparseOperand& features, const DropoutSpec& d) {
  if (!dropout_active(d)) return features;
  return ad::SparseOperand::general(ad::sparse_dropout(features.forward(), d.rate, dropout_rng(d)));
}

ad::Var maybe_drop(ad::Tape& tape, ad::Var x, const DropoutSpec& d) {
  if (!dropout_active(d)) return x;
  const auto& v = tape.value(x);
  return tape.hadamard(x, tape.constant(ad::dropout_mask(v.rows(), v.cols(), d.rate, dropout_rng(d))));
}

void check_rows(const ad::SparseOperand& lap, const ad::SparseOperand& features) {
  if (lap.forward().rows != features.forward().rows) {
    throw ShapeError("laplacian has " + std::to_string(lap.forward().rows) + " rows but features have " +
                     std::to_string(features.forward().rows));
  }
}

}  // namespace

std::string to_string(ModelKind kind) { return kind == ModelKind::Gcn ? "gcn" : "dagnn"; }

ModelKind parse_model_kind(const std::string& s) {
  if (s == "gcn") return ModelKind::Gcn;
  if (s == "dagnn") return ModelKind::Dagnn;
  throw std::invalid_argument("unknown model '" + s + "' (expected gcn or dagnn)");
}

std::string to_string(ScoreActivation act) { return act == ScoreActivation::Sigmoid ? "sigmoid" : "identity"; }

ScoreActivation parse_score_activation(const std::string& s) {
  if (s == "sigmoid") return ScoreActivation::Sigmoid;
  if (s == "identity") return ScoreActivation::Identity;
  throw std::invalid_argument("unknown score activation '" + s + "' (expected sigmoid or identity)");
}

ModelKind kind_of(const ModelParams& params) {
  return std::holds_alternative<GcnParams>(params) ? ModelKind::Gcn : ModelKind::Dagnn;
}

std::vector<Tensor*> trainable(ModelParams& params) {
  if (auto* g = std::get_if<GcnParams>(&params)) return {&g->w1, &g->w2};
  auto& d = std::get<DagnnParams>(params);
  return {&d.m1, &d.m2, &d.s};
}

std::vector<const Tensor*> trainable(const ModelParams& params) {
  if (const auto* g = std::get_if<GcnParams>(&params)) return {&g->w1, &g->w2};
  const auto& d = std::get<DagnnParams>(params);
  return {&d.m1, &d.m2, &d.s};
}

Forward gcn_forward(ad::Tape& tape, const ad::SparseOperand& lap, const ad::SparseOperand& features,
                    const GcnParams& params, const DropoutSpec& dropout) {
  check_rows(lap, features);
  if (params.w1.rows() != features.forward().cols || params.w1.cols() != params.w2.rows()) {
    throw ShapeError("gcn: weights " + params.w1.shape_string() + ", " + params.w2.shape_string() +
                     " do not fit " + std::to_string(features.forward().cols) + " features");
  }
  Forward out;
  auto w1 = tape.parameter(params.w1);
  auto w2 = tape.parameter(params.w2);
  out.parameters = {w1, w2};

  auto xw = tape.spmm(maybe_drop(features, dropout), w1);
  auto hidden = tape.relu(tape.spmm(lap, xw));
  hidden = maybe_drop(tape, hidden, dropout);
  auto logits = tape.spmm(lap, tape.matmul(hidden, w2));
  out.probs = tape.row_softmax(logits);
  return out;
}

Forward dagnn_forward(ad::Tape& tape, const ad::SparseOperand& lap, const ad::SparseOperand& features,
                      const DagnnParams& params, const DropoutSpec& dropout, ScoreActivation score_activation,
                      bool include_level_zero) {
  check_rows(lap, features);
  if (params.depth < 1) throw std::invalid_argument("dagnn: propagation depth k must be >= 1");
  const std::size_t classes = params.m2.cols();
  if (params.m1.rows() != features.forward().cols || params.m1.cols() != params.m2.rows() ||
      params.s.rows() != classes || params.s.cols() != 1) {
    throw ShapeError("dagnn: parameter shapes " + params.m1.shape_string() + ", " + params.m2.shape_string() +
                     ", " + params.s.shape_string() + " are inconsistent");
  }
  Forward out;
  auto m1 = tape.parameter(params.m1);
  auto m2 = tape.parameter(params.m2);
  auto s = tape.parameter(params.s);
  out.parameters = {m1, m2, s};

  auto hidden = tape.relu(tape.spmm(maybe_drop(features, dropout), m1));
  hidden = maybe_drop(tape, hidden, dropout);
  auto level = tape.matmul(hidden, m2);

  auto gated = [&](ad::Var h) {
    auto score = tape.matmul(h, s);
    if (score_activation == ScoreActivation::Sigmoid) score = tape.sigmoid(score);
    return tape.hadamard(h, tape.row_broadcast(score, classes));
  };

  std::optional<ad::Var> total;
  if (include_level_zero) total = gated(level);
  for (std::size_t l = 1; l <= params.depth; ++l) {
    level = tape.spmm(lap, level);
    auto term = gated(level);
    total = total ? tape.add(*total, term) : term;
  }
  out.probs = tape.row_softmax(*total);
  return out;
}

Forward model_forward(ad::Tape& tape, const ad::SparseOperand& lap, const ad::SparseOperand& features,
                      const ModelParams& params, const ModelConfig& config, const DropoutSpec& dropout) {
  if (const auto* g = std::get_if<GcnParams>(&params)) return gcn_forward(tape, lap, features, *g, dropout);
  return dagnn_forward(tape, lap, features, std::get<DagnnParams>(params), dropout, config.score_activation,
                       config.include_level_zero);
}

}  // namespace abn
