#pragma once

#include <string>
#include <variant>
#include <vector>

#include "abn/rng.hpp"
#include "abn/tape.hpp"
#include "abn/tensor.hpp"

namespace abn {

enum class ModelKind { Gcn, Dagnn };
enum class ScoreActivation { Sigmoid, Identity };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& s);
std::string to_string(ScoreActivation act);
ScoreActivation parse_score_activation(const std::string& s);

/// Two-layer GCN without bias: W1 is d x h, W2 is h x c.
struct GcnParams {
  Tensor w1;
  Tensor w2;
};

/// DAGNN: two-layer MLP (M1 d x h, M2 h x c), adjustment vector s (c x 1)
/// and propagation depth k.
struct DagnnParams {
  Tensor m1;
  Tensor m2;
  Tensor s;
  std::size_t depth = 10;
};

using ModelParams = std::variant<GcnParams, DagnnParams>;

struct ModelConfig {
  ModelKind kind = ModelKind::Gcn;
  std::size_t hidden = 64;
  std::size_t depth = 10;
  ScoreActivation score_activation = ScoreActivation::Sigmoid;
  bool include_level_zero = false;
};

ModelKind kind_of(const ModelParams& params);
/// Trainable tensors in a fixed order (GCN: W1, W2; DAGNN: M1, M2, s).
std::vector<Tensor*> trainable(ModelParams& params);
std::vector<const Tensor*> trainable(const ModelParams& params);

/// Dropout settings for one forward pass. `rng` may be null when training is off.
struct DropoutSpec {
  double rate = 0.0;
  bool training = false;
  Rng* rng = nullptr;
};

struct Forward {
  ad::Var probs;                  // n x c, row-stochastic
  std::vector<ad::Var> parameters;  // same order as trainable()
};

/// F = softmax(A * relu(A * drop(X) * W1) * drop-before-W2).
Forward gcn_forward(ad::Tape& tape, const ad::SparseOperand& lap, const ad::SparseOperand& features,
                    const GcnParams& params, const DropoutSpec& dropout);

/// Z = MLP(X); H_l = A^l Z; F = softmax(sum_l H_l . act(H_l s)), l = 1..k
/// (l = 0 included when configured).
Forward dagnn_forward(ad::Tape& tape, const ad::SparseOperand& lap, const ad::SparseOperand& features,
                      const DagnnParams& params, const DropoutSpec& dropout,
                      ScoreActivation score_activation = ScoreActivation::Sigmoid,
                      bool include_level_zero = false);

/// Dispatches on the parameter kind.
Forward model_forward(ad::Tape& tape, const ad::SparseOperand& lap, const ad::SparseOperand& features,
                      const ModelParams& params, const ModelConfig& config, const DropoutSpec& dropout);

}  // namespace abn
