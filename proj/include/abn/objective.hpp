#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "abn/graph.hpp"
#include "abn/rng.hpp"
#include "abn/tape.hpp"
#include "abn/tensor.hpp"

namespace abn {

struct LabeledNode {
  NodeId node;
  ClassId label;
};

/// Index of the largest entry; ties go to the lowest class id.
ClassId argmax(std::span<const double> row);

/// Hard pseudo label and confidence for nodes of the unlabeled set. Entries
/// for nodes outside that set stay empty / zero.
struct LabelAssignment {
  std::vector<std::optional<ClassId>> hard_label;
  std::vector<double> confidence;
};

LabelAssignment pseudo_labels(const Tensor& probs, std::span<const NodeId> unlabeled);

/// Unlabeled nodes that currently hold an adaptive pseudo label, in
/// ascending node order, with their per-node loss weights.
struct AdaptiveSet {
  std::vector<NodeId> members;
  std::vector<ClassId> labels;
  std::vector<double> weights;

  std::size_t size() const { return members.size(); }
  bool empty() const { return members.empty(); }
  std::vector<std::size_t> class_counts(std::size_t num_classes) const;
};

/// Members are the unlabeled nodes whose largest probability is >= beta.
/// Rebuilt from scratch on every call. Weights are left empty.
AdaptiveSet adaptive_pseudo_labels(const Tensor& probs, std::span<const NodeId> unlabeled, double beta);

/// Every unlabeled node with its argmax label (the plain pseudo labeling
/// rule); used when adaptive selection is switched off.
AdaptiveSet all_pseudo_labels(const Tensor& probs, std::span<const NodeId> unlabeled);

/// With balancing: weight 1/N where N counts members sharing the label.
/// Without: the uniform mean weight 1/|U'|.
AdaptiveSet balancing_factors(AdaptiveSet set, bool balancing);

struct SampleSizes {
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

struct NegativeSample {
  std::vector<NodeId> positives;
  std::vector<ClassId> positive_labels;
  std::vector<std::vector<NodeId>> negatives;  // negatives[i] pairs with positives[i]

  bool empty() const { return positives.empty(); }
};

/// Positives uniformly with replacement from `pool`; for each positive,
/// `sizes.negatives` nodes uniformly with replacement among the nodes not
/// adjacent to it (a node counts as adjacent to itself). A positive adjacent
/// to every node is skipped and redrawn.
NegativeSample sample_negatives(const Graph& graph, std::span<const LabeledNode> pool, SampleSizes sizes, Rng& rng);

/// Returns false if any negative is adjacent to its positive.
bool negatives_valid(const Graph& graph, const NegativeSample& sample);

struct AbnConfig {
  double beta = 0.2;
  double lambda = 1.0;
  double lambda1 = 1.0;
  bool balancing = true;
  SampleSizes sizes{5, 2};
  /// false: every unlabeled node takes its argmax label regardless of
  /// confidence (the plain pseudo labeling rule).
  bool adaptive = true;

  /// Throws std::invalid_argument on an inconsistent configuration.
  void validate() const;
};

/// Configuration that switches every extra term off (plain supervised training).
AbnConfig supervised_only();

// ---------------------------------------------------------------------------
// Loss terms. Targets, weights and samples enter the tape as constants, so no
// gradient flows through label assignment or sampling.

/// -sum_j target_j ln(max(probs_j, eps)) for a 1 x c target and probs row.
ad::Var cross_entropy(ad::Tape& tape, const Tensor& target, ad::Var probs);

/// (1/|L|) sum_L CE(Y_i, F_i).
ad::Var supervised_loss(ad::Tape& tape, ad::Var probs, std::span<const LabeledNode> labeled);

/// (1/|L|) sum_L CE(Y_i, F_i) + (lambda/|U|) sum_U CE(pseudo_i, F_i).
ad::Var baseline_pseudo_loss(ad::Tape& tape, ad::Var probs, std::span<const LabeledNode> labeled,
                             std::span<const NodeId> unlabeled, double lambda);

/// (1/(|I||J|)) sum_i sum_j CE(Y_i, 1 - F_j); zero for an empty sample.
ad::Var negative_loss(ad::Tape& tape, ad::Var probs, const NegativeSample& sample);

/// Supervised mean + lambda * sum_U' w_i CE(Y^_i, F_i) + lambda1 * negative loss.
/// Terms with zero weight or no members are not recorded at all.
ad::Var abn_loss(ad::Tape& tape, ad::Var probs, std::span<const LabeledNode> labeled, const AdaptiveSet& adaptive,
                 const NegativeSample& sample, const AbnConfig& config);

}  // namespace abn
