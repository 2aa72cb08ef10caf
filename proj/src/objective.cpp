#include "abn/objective.hpp"

#include <algorithm>
#include <iostream>
#include <stdexcept>

namespace abn {
namespace {

// -sum over (row, class, weight) entries of weight * log_probs(row, class),
// expressed as one Hadamard product with a constant weight matrix.
ad::Var weighted_nll(ad::Tape& tape, ad::Var log_probs, const Tensor& weights) {
  return tape.scale(tape.sum(tape.hadamard(log_probs, tape.constant(weights))), -1.0);
}

void check_label(ClassId label, std::size_t classes) {
  if (label < 0 || static_cast<std::size_t>(label) >= classes) {
    throw std::out_of_range("class id " + std::to_string(label) + " outside [0," + std::to_string(classes) + ")");
  }
}

bool allowed_sizes(SampleSizes s) {
  static constexpr std::pair<std::size_t, std::size_t> kAllowed[] = {{1, 10}, {2, 5}, {5, 2}, {10, 1}};
  return std::any_of(std::begin(kAllowed), std::end(kAllowed),
                     [&](auto p) { return p.first == s.positives && p.second == s.negatives; });
}

}  // namespace

ClassId argmax(std::span<const double> row) {
  if (row.empty()) throw std::invalid_argument("argmax of an empty row");
  std::size_t best = 0;
  for (std::size_t j = 1; j < row.size(); ++j) {
    if (row[j] > row[best]) best = j;
  }
  return static_cast<ClassId>(best);
}

LabelAssignment pseudo_labels(const Tensor& probs, std::span<const NodeId> unlabeled) {
  LabelAssignment out;
  out.hard_label.resize(probs.rows());
  out.confidence.assign(probs.rows(), 0.0);
  for (auto v : unlabeled) {
    const auto c = argmax(probs.row(v));
    out.hard_label[v] = c;
    out.confidence[v] = probs(v, static_cast<std::size_t>(c));
  }
  return out;
}

std::vector<std::size_t> AdaptiveSet::class_counts(std::size_t num_classes) const {
  std::vector<std::size_t> counts(num_classes, 0);
  for (auto c : labels) {
    check_label(c, num_classes);
    ++counts[static_cast<std::size_t>(c)];
  }
  return counts;
}

AdaptiveSet adaptive_pseudo_labels(const Tensor& probs, std::span<const NodeId> unlabeled, double beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0, 1)");
  std::vector<NodeId> order(unlabeled.begin(), unlabeled.end());
  std::sort(order.begin(), order.end());
  AdaptiveSet out;
  for (auto v : order) {
    const auto c = argmax(probs.row(v));
    if (probs(v, static_cast<std::size_t>(c)) >= beta) {
      out.members.push_back(v);
      out.labels.push_back(c);
    }
  }
  return out;
}

AdaptiveSet all_pseudo_labels(const Tensor& probs, std::span<const NodeId> unlabeled) {
  std::vector<NodeId> order(unlabeled.begin(), unlabeled.end());
  std::sort(order.begin(), order.end());
  AdaptiveSet out;
  out.members = order;
  for (auto v : order) out.labels.push_back(argmax(probs.row(v)));
  return out;
}

AdaptiveSet balancing_factors(AdaptiveSet set, bool balancing) {
  set.weights.assign(set.size(), 0.0);
  if (set.empty()) return set;
  if (!balancing) {
    std::fill(set.weights.begin(), set.weights.end(), 1.0 / static_cast<double>(set.size()));
    return set;
  }
  const auto top = *std::max_element(set.labels.begin(), set.labels.end());
  const auto counts = set.class_counts(static_cast<std::size_t>(top) + 1);
  for (std::size_t i = 0; i < set.size(); ++i) {
    set.weights[i] = 1.0 / static_cast<double>(counts[static_cast<std::size_t>(set.labels[i])]);
  }
  return set;
}

NegativeSample sample_negatives(const Graph& graph, std::span<const LabeledNode> pool, SampleSizes sizes, Rng& rng) {
  NegativeSample out;
  if (sizes.positives == 0) return out;
  if (pool.empty()) {
    std::cerr << "[warn] negative sampling: empty positive pool, sample skipped\n";
    return out;
  }
  const std::size_t n = graph.num_nodes();
  const auto has_negative = [&](NodeId v) { return graph.degree(v) + 1 < n; };
  if (std::none_of(pool.begin(), pool.end(), [&](const LabeledNode& p) { return has_negative(p.node); })) {
    throw std::runtime_error("negative sampling: every positive candidate is adjacent to all nodes");
  }
  while (out.positives.size() < sizes.positives) {
    const auto& pos = pool[rng.below(pool.size())];
    if (!has_negative(pos.node)) continue;
    std::vector<NodeId> negs;
    negs.reserve(sizes.negatives);
    while (negs.size() < sizes.negatives) {
      const auto v = static_cast<NodeId>(rng.below(n));
      if (!is_neighbor(graph, pos.node, v)) negs.push_back(v);
    }
    out.positives.push_back(pos.node);
    out.positive_labels.push_back(pos.label);
    out.negatives.push_back(std::move(negs));
  }
  return out;
}

bool negatives_valid(const Graph& graph, const NegativeSample& sample) {
  if (sample.negatives.size() != sample.positives.size()) return false;
  for (std::size_t i = 0; i < sample.positives.size(); ++i) {
    if (sample.negatives[i].size() != sample.negatives.front().size()) return false;
    for (auto j : sample.negatives[i]) {
      if (is_neighbor(graph, sample.positives[i], j)) return false;
    }
  }
  return true;
}

void AbnConfig::validate() const {
  if (adaptive && !(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("abn: beta must lie in (0, 1)");
  if (!(lambda >= 0.0)) throw std::invalid_argument("abn: lambda must be >= 0");
  if (!(lambda1 >= 0.0)) throw std::invalid_argument("abn: lambda1 must be >= 0");
  const bool none = sizes.positives == 0 && sizes.negatives == 0;
  if (!none && !allowed_sizes(sizes)) {
    throw std::invalid_argument("abn: (|I|,|J|) must be one of (1,10) (2,5) (5,2) (10,1) or (0,0)");
  }
  if (none && lambda1 != 0.0) throw std::invalid_argument("abn: lambda1 > 0 requires non-empty sample sizes");
}

AbnConfig supervised_only() {
  AbnConfig c;
  c.lambda = 0.0;
  c.lambda1 = 0.0;
  c.balancing = false;
  c.sizes = {0, 0};
  return c;
}

ad::Var cross_entropy(ad::Tape& tape, const Tensor& target, ad::Var probs) {
  const auto& p = tape.value(probs);
  if (!target.same_shape(p) || target.rows() != 1) {
    throw ShapeError("cross_entropy: target " + target.shape_string() + " vs probs " + p.shape_string());
  }
  std::size_t ones = 0;
  for (double t : target.values()) {
    if (t == 1.0) {
      ++ones;
    } else if (t != 0.0) {
      ones = 2;
      break;
    }
  }
  if (ones != 1) throw std::invalid_argument("cross_entropy: target must be one-hot");
  return weighted_nll(tape, tape.log(probs), target);
}

ad::Var supervised_loss(ad::Tape& tape, ad::Var probs, std::span<const LabeledNode> labeled) {
  if (labeled.empty()) throw std::invalid_argument("loss needs at least one labeled node");
  const auto& f = tape.value(probs);
  Tensor w(f.rows(), f.cols());
  const double scale = 1.0 / static_cast<double>(labeled.size());
  for (const auto& l : labeled) {
    check_label(l.label, f.cols());
    w(l.node, static_cast<std::size_t>(l.label)) += scale;
  }
  return weighted_nll(tape, tape.log(probs), w);
}

ad::Var baseline_pseudo_loss(ad::Tape& tape, ad::Var probs, std::span<const LabeledNode> labeled,
                             std::span<const NodeId> unlabeled, double lambda) {
  auto loss = supervised_loss(tape, probs, labeled);
  if (lambda == 0.0 || unlabeled.empty()) return loss;
  const auto& f = tape.value(probs);
  const auto assignment = pseudo_labels(f, unlabeled);
  Tensor w(f.rows(), f.cols());
  const double scale = lambda / static_cast<double>(unlabeled.size());
  for (auto v : unlabeled) w(v, static_cast<std::size_t>(*assignment.hard_label[v])) += scale;
  return tape.add(loss, weighted_nll(tape, tape.log(probs), w));
}

ad::Var negative_loss(ad::Tape& tape, ad::Var probs, const NegativeSample& sample) {
  if (sample.empty()) return tape.constant(Tensor::scalar(0.0));
  const auto& f = tape.value(probs);
  const double pairs = static_cast<double>(sample.positives.size() * sample.negatives.front().size());
  Tensor w(f.rows(), f.cols());
  for (std::size_t i = 0; i < sample.positives.size(); ++i) {
    check_label(sample.positive_labels[i], f.cols());
    for (auto j : sample.negatives[i]) w(j, static_cast<std::size_t>(sample.positive_labels[i])) += 1.0 / pairs;
  }
  return weighted_nll(tape, tape.log(tape.one_minus(probs)), w);
}

ad::Var abn_loss(ad::Tape& tape, ad::Var probs, std::span<const LabeledNode> labeled, const AdaptiveSet& adaptive,
                 const NegativeSample& sample, const AbnConfig& config) {
  auto loss = supervised_loss(tape, probs, labeled);
  const auto& f = tape.value(probs);
  if (config.lambda != 0.0 && !adaptive.empty()) {
    if (adaptive.weights.size() != adaptive.size()) throw std::invalid_argument("abn_loss: adaptive set has no weights");
    Tensor w(f.rows(), f.cols());
    for (std::size_t i = 0; i < adaptive.size(); ++i) {
      check_label(adaptive.labels[i], f.cols());
      w(adaptive.members[i], static_cast<std::size_t>(adaptive.labels[i])) += config.lambda * adaptive.weights[i];
    }
    loss = tape.add(loss, weighted_nll(tape, tape.log(probs), w));
  }
  if (config.lambda1 != 0.0 && !sample.empty()) {
    loss = tape.add(loss, tape.scale(negative_loss(tape, probs, sample), config.lambda1));
  }
  return loss;
}

}  // namespace abn
