#include "abn/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace abn {
namespace {

// Bin index with edges exactly b / bins, so rounding in conf * bins cannot
// move a value across an edge.
std::size_t bin_of(double conf, std::size_t bins) {
  const double nb = static_cast<double>(bins);
  auto b = static_cast<std::size_t>(std::max(0.0, std::floor(conf * nb)));
  if (b >= bins) b = bins - 1;
  while (b > 0 && conf < static_cast<double>(b) / nb) --b;
  while (b + 1 < bins && conf >= static_cast<double>(b + 1) / nb) ++b;
  return b;
}

double confidence(const Tensor& probs, NodeId v) {
  return probs(v, static_cast<std::size_t>(argmax(probs.row(v))));
}

}  // namespace

std::vector<double> confidence_histogram(const Tensor& probs, std::span<const NodeId> nodes, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("confidence_histogram: bins must be >= 1");
  std::vector<double> counts(bins, 0.0);
  if (nodes.empty()) return counts;
  for (auto v : nodes) counts[bin_of(confidence(probs, v), bins)] += 1.0;
  for (auto& c : counts) c = 100.0 * c / static_cast<double>(nodes.size());
  return counts;
}

std::vector<double> pseudo_label_distribution(const LabelAssignment& assignment, std::span<const NodeId> nodes,
                                              std::size_t num_classes) {
  std::vector<double> freq(num_classes, 0.0);
  if (nodes.empty()) return freq;
  for (auto v : nodes) {
    const auto& label = assignment.hard_label.at(v);
    if (!label) throw std::invalid_argument("pseudo_label_distribution: node " + std::to_string(v) + " has no label");
    freq.at(static_cast<std::size_t>(*label)) += 1.0;
  }
  for (auto& f : freq) f = 100.0 * f / static_cast<double>(nodes.size());
  return freq;
}

std::vector<std::optional<double>> confidence_accuracy_correlation(const Tensor& probs, std::span<const NodeId> nodes,
                                                                   std::span<const ClassId> labels, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("confidence_accuracy_correlation: bins must be >= 1");
  std::vector<std::size_t> total(bins, 0), correct(bins, 0);
  for (auto v : nodes) {
    const auto c = argmax(probs.row(v));
    const auto b = bin_of(probs(v, static_cast<std::size_t>(c)), bins);
    ++total[b];
    if (c == labels[v]) ++correct[b];
  }
  std::vector<std::optional<double>> out(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    if (total[b] > 0) out[b] = 100.0 * static_cast<double>(correct[b]) / static_cast<double>(total[b]);
  }
  return out;
}

double gradient_gap_bound(double theta, std::size_t num_unlabeled, std::size_t num_labeled, double err_prob) {
  if (num_labeled == 0) throw std::invalid_argument("gradient_gap_bound: needs at least one labeled node");
  if (!(theta >= 0.0)) throw std::invalid_argument("gradient_gap_bound: theta must be >= 0");
  if (!(err_prob >= 0.0 && err_prob <= 1.0)) throw std::invalid_argument("gradient_gap_bound: err_prob outside [0, 1]");
  return 2.0 * theta * static_cast<double>(num_unlabeled) / static_cast<double>(num_labeled) * err_prob;
}

double empirical_error_rate(const LabelAssignment& assignment, std::span<const NodeId> nodes,
                            std::span<const ClassId> labels) {
  if (nodes.empty()) return 0.0;
  std::size_t wrong = 0;
  for (auto v : nodes) {
    const auto& label = assignment.hard_label.at(v);
    if (!label || *label != labels[v]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(nodes.size());
}

double max_node_gradient_norm(const GraphOperands& ops, const ModelParams& params, const ModelConfig& model,
                              std::span<const LabeledNode> nodes) {
  double best = 0.0;
  for (const auto& node : nodes) {
    ad::Tape tape;
    const auto fwd = model_forward(tape, ops.laplacian, ops.features, params, model, DropoutSpec{});
    const LabeledNode one[] = {node};
    const auto loss = supervised_loss(tape, fwd.probs, one);
    tape.backward(loss);
    double sq = 0.0;
    for (auto p : fwd.parameters) {
      for (double g : tape.grad(p).values()) sq += g * g;
    }
    best = std::max(best, std::sqrt(sq));
  }
  return best;
}

}  // namespace abn
