#include "abn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "abn/tape.hpp"

namespace abn {

Tensor xavier_init(std::size_t rows, std::size_t cols, Rng& rng) {
  if (rows == 0 || cols == 0) throw ShapeError("xavier_init: empty shape");
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Tensor t(rows, cols);
  for (auto& x : t.values()) x = rng.uniform(-bound, bound);
  return t;
}

ModelParams init_params(const ModelConfig& config, std::size_t num_features, std::size_t num_classes, Rng& rng) {
  if (config.kind == ModelKind::Gcn) {
    GcnParams p;
    p.w1 = xavier_init(num_features, config.hidden, rng);
    p.w2 = xavier_init(config.hidden, num_classes, rng);
    return p;
  }
  if (config.depth < 1) throw std::invalid_argument("dagnn: propagation depth k must be >= 1");
  DagnnParams p;
  p.m1 = xavier_init(num_features, config.hidden, rng);
  p.m2 = xavier_init(config.hidden, num_classes, rng);
  p.s = xavier_init(num_classes, 1, rng);
  p.depth = config.depth;
  return p;
}

std::string to_string(L2Scope scope) { return scope == L2Scope::AllWeights ? "all" : "first_layer"; }

L2Scope parse_l2_scope(const std::string& s) {
  if (s == "all") return L2Scope::AllWeights;
  if (s == "first_layer") return L2Scope::FirstLayer;
  throw std::invalid_argument("unknown l2 scope '" + s + "' (expected all or first_layer)");
}

void adam_step(AdamState& state, std::span<Tensor* const> params, std::span<const Tensor> grads, double l2_rate,
               L2Scope scope) {
  if (params.size() != grads.size()) throw std::invalid_argument("adam_step: params and grads differ in count");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->same_shape(grads[i])) {
      throw ShapeError("adam_step: param " + params[i]->shape_string() + " vs grad " + grads[i].shape_string());
    }
    if (!grads[i].all_finite()) {
      std::ostringstream msg;
      msg << "non-finite gradient in parameter " << i << " " << grads[i].shape_string() << " at adam step "
          << state.t + 1;
      throw DivergenceError(msg.str());
    }
  }
  if (state.m.empty()) {
    for (auto* p : params) {
      state.m.emplace_back(p->rows(), p->cols());
      state.v.emplace_back(p->rows(), p->cols());
    }
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const bool decay = l2_rate != 0.0 && (scope == L2Scope::AllWeights || i == 0);
    auto& p = params[i]->values();
    const auto& g = grads[i].values();
    auto& m = state.m[i].values();
    auto& v = state.v[i].values();
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double gk = decay ? g[k] + l2_rate * p[k] : g[k];
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * gk;
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * gk * gk;
      p[k] -= state.lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + state.eps);
    }
  }
}

std::string to_string(StopComparator c) {
  return c == StopComparator::WorseThanMean ? "worse_than_mean" : "better_than_mean";
}

StopComparator parse_stop_comparator(const std::string& s) {
  if (s == "worse_than_mean") return StopComparator::WorseThanMean;
  if (s == "better_than_mean") return StopComparator::BetterThanMean;
  throw std::invalid_argument("unknown early-stopping comparator '" + s +
                              "' (expected worse_than_mean or better_than_mean)");
}

void TrainConfig::validate() const {
  if (max_epochs == 0) throw std::invalid_argument("train: max_epochs must be >= 1");
  if (window == 0 || window > min_epoch) throw std::invalid_argument("train: need 1 <= window <= min_epoch");
  if (!(l2_rate >= 0.0)) throw std::invalid_argument("train: l2_rate must be >= 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("train: dropout must lie in [0, 1)");
  if (!(lr > 0.0)) throw std::invalid_argument("train: lr must be > 0");
}

bool early_stop_check(std::span<const double> history, const TrainConfig& config) {
  if (history.empty()) throw std::invalid_argument("early_stop_check: empty history");
  const std::size_t epoch = history.size() - 1;
  if (epoch <= config.min_epoch || epoch < config.window) return false;
  double mean = 0.0;
  for (std::size_t i = epoch - config.window; i < epoch; ++i) mean += history[i];
  mean /= static_cast<double>(config.window);
  const double current = history.back();
  return config.comparator == StopComparator::WorseThanMean ? current > mean : current < mean;
}

double evaluate(const Tensor& probs, std::span<const NodeId> nodes, std::span<const ClassId> labels) {
  if (nodes.empty()) throw std::invalid_argument("evaluate: empty node set");
  std::size_t correct = 0;
  for (auto v : nodes) {
    if (argmax(probs.row(v)) == labels[v]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(nodes.size());
}

double mean_cross_entropy(const Tensor& probs, std::span<const NodeId> nodes, std::span<const ClassId> labels) {
  if (nodes.empty()) throw std::invalid_argument("mean_cross_entropy: empty node set");
  double total = 0.0;
  for (auto v : nodes) total -= std::log(std::max(probs(v, static_cast<std::size_t>(labels[v])), ad::kLogEpsilon));
  return total / static_cast<double>(nodes.size());
}

}  // namespace abn
