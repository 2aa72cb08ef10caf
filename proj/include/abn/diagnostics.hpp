#pragma once

#include <optional>
#include <span>
#include <vector>

#include "abn/models.hpp"
#include "abn/objective.hpp"
#include "abn/tensor.hpp"
#include "abn/trainer.hpp"

namespace abn {

/// Percentage of `nodes` whose confidence (largest probability) falls in each
/// of `bins` equal-width bins [b/bins, (b+1)/bins); the last bin is closed.
/// All zeros for an empty node set.
std::vector<double> confidence_histogram(const Tensor& probs, std::span<const NodeId> nodes, std::size_t bins = 10);

/// Per-class percentage of hard pseudo labels over `nodes`.
std::vector<double> pseudo_label_distribution(const LabelAssignment& assignment, std::span<const NodeId> nodes,
                                              std::size_t num_classes);

/// Accuracy (%) of the argmax prediction inside each confidence bin; bins
/// with no node are empty optionals.
std::vector<std::optional<double>> confidence_accuracy_correlation(const Tensor& probs, std::span<const NodeId> nodes,
                                                                   std::span<const ClassId> labels,
                                                                   std::size_t bins = 10);

/// 2 * theta * |U| / |L| * err_prob. Throws std::invalid_argument when
/// num_labeled is 0 or an argument is out of range.
double gradient_gap_bound(double theta, std::size_t num_unlabeled, std::size_t num_labeled, double err_prob);

/// Fraction of `nodes` whose hard pseudo label differs from the truth.
double empirical_error_rate(const LabelAssignment& assignment, std::span<const NodeId> nodes,
                            std::span<const ClassId> labels);

/// Largest Euclidean norm, over the given nodes, of the gradient of that
/// node's own cross-entropy with respect to all parameters (dropout off).
/// Used as a running estimate of the per-node gradient bound theta.
double max_node_gradient_norm(const GraphOperands& ops, const ModelParams& params, const ModelConfig& model,
                              std::span<const LabeledNode> nodes);

}  // namespace abn
