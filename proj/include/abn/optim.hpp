#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "abn/models.hpp"
#include "abn/objective.hpp"
#include "abn/rng.hpp"
#include "abn/tensor.hpp"

namespace abn {

/// Uniform in +-sqrt(6 / (rows + cols)).
Tensor xavier_init(std::size_t rows, std::size_t cols, Rng& rng);

/// Fresh parameters for `config` on d features and c classes. The DAGNN
/// adjustment vector s is c x 1 and is Xavier-initialized like the weights.
ModelParams init_params(const ModelConfig& config, std::size_t num_features, std::size_t num_classes, Rng& rng);

enum class L2Scope { AllWeights, FirstLayer };
std::string to_string(L2Scope scope);
L2Scope parse_l2_scope(const std::string& s);

struct AdamState {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t t = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

/// Raised when a gradient or loss stops being finite. what() carries the
/// diagnostic dump.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One bias-corrected Adam update of `params` in place. `l2_rate * param` is
/// added to the gradient of every tensor in scope first (the first tensor
/// only for L2Scope::FirstLayer). Moments are allocated on the first call.
/// Throws DivergenceError on a non-finite gradient, leaving params untouched.
void adam_step(AdamState& state, std::span<Tensor* const> params, std::span<const Tensor> grads, double l2_rate,
               L2Scope scope = L2Scope::AllWeights);

/// Stop when the current validation loss compares against the mean of the
/// preceding window. WorseThanMean (the usual rule) stops once the loss
/// rises above the mean; BetterThanMean stops once it falls below.
enum class StopComparator { WorseThanMean, BetterThanMean };
std::string to_string(StopComparator c);
StopComparator parse_stop_comparator(const std::string& s);

struct TrainConfig {
  std::size_t max_epochs = 1000;
  bool early_stopping = true;
  std::size_t window = 100;
  std::size_t min_epoch = 500;
  double l2_rate = 5e-4;
  L2Scope l2_scope = L2Scope::AllWeights;
  double dropout = 0.5;
  double lr = 0.01;
  std::uint64_t seed = 0;
  StopComparator comparator = StopComparator::WorseThanMean;

  void validate() const;
};

/// `history` holds one validation loss per epoch, the last entry being the
/// current epoch (index history.size() - 1). Fires only past min_epoch and
/// only once a full window of earlier losses exists.
bool early_stop_check(std::span<const double> history, const TrainConfig& config);

/// Fraction of `nodes` whose argmax row equals the ground-truth label.
/// Throws std::invalid_argument on an empty node set.
double evaluate(const Tensor& probs, std::span<const NodeId> nodes, std::span<const ClassId> labels);

/// Mean cross-entropy of `probs` over `nodes` (with the same log clamp as
/// the training loss).
double mean_cross_entropy(const Tensor& probs, std::span<const NodeId> nodes, std::span<const ClassId> labels);

}  // namespace abn
