#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "abn/graph.hpp"
#include "abn/objective.hpp"

namespace abn {

/// Structured load failure naming the offending file and 1-based line
/// (line 0 when the problem is not tied to a line).
class BundleError : public std::runtime_error {
 public:
  BundleError(std::string file, std::size_t line, const std::string& message);
  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

/// Bundle directory layout:
///   meta.json     {"name", "num_nodes", "num_edges", "num_features", "num_classes"}
///   edges.txt     "u v" per line, u < v, lexicographically sorted, each edge once
///   features.txt  line i: node i's nonzeros as "idx:value", idx ascending
///   labels.txt    line i: node i's class id
Graph load_bundle(const std::filesystem::path& dir);
void save_bundle(const Graph& graph, const std::filesystem::path& dir);

/// Shortest decimal string that parses back to exactly `v`.
std::string format_shortest(double v);

struct Split {
  std::vector<NodeId> train;
  std::vector<NodeId> val;
  std::vector<NodeId> test;
  std::uint64_t seed = 0;

  /// V \ train, ascending.
  std::vector<NodeId> unlabeled(std::size_t num_nodes) const;
  /// Train nodes paired with their ground-truth labels.
  std::vector<LabeledNode> labeled(const Graph& graph) const;
  /// Throws std::invalid_argument unless the three sets are disjoint and in range.
  void validate(std::size_t num_nodes) const;
};

struct SplitSizes {
  std::size_t val = 500;
  std::size_t test = 1000;
};

/// Draws `per_class` nodes of every class (without replacement) for
/// training, then `sizes.val` validation nodes from the remainder, then
/// `sizes.test` test nodes from what is left. Deterministic in `seed`.
Split make_split(const Graph& graph, std::size_t per_class, std::uint64_t seed, SplitSizes sizes = {});

/// |train| / n.
double label_rate(const Split& split, const Graph& graph);

/// Row-normalizes features so each nonzero row sums to 1.
CsrMatrix row_normalized(const CsrMatrix& features);

}  // namespace abn
