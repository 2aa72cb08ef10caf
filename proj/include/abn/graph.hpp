#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "abn/tensor.hpp"

namespace abn {

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Undirected, unweighted graph with sparse node features and a class label
/// on every node. Adjacency is stored in both directions without self-loops.
struct Graph {
  std::string name;
  std::size_t num_classes = 0;
  CsrMatrix adjacency;  // n x n, values all 1
  CsrMatrix features;   // n x d, non-negative
  std::vector<ClassId> labels;

  std::size_t num_nodes() const { return adjacency.rows; }
  std::size_t num_features() const { return features.cols; }
  std::size_t num_edges() const { return adjacency.nnz() / 2; }
  std::size_t degree(NodeId v) const { return adjacency.row_end(v) - adjacency.row_begin(v); }
  std::size_t max_degree() const;

  /// Builds the graph from undirected edges listed once each. Duplicates
  /// (in either orientation) and self-loops are rejected with GraphError.
  static Graph from_edges(std::string name, std::size_t num_nodes,
                          const std::vector<std::pair<NodeId, NodeId>>& edges, CsrMatrix features,
                          std::vector<ClassId> labels, std::size_t num_classes);

  /// Undirected edges (u < v) in lexicographic order.
  std::vector<std::pair<NodeId, NodeId>> edge_list() const;

  /// Checks every structural invariant; throws GraphError.
  void validate() const;
};

/// True iff (u, v) is an edge or u == v.
bool is_neighbor(const Graph& graph, NodeId u, NodeId v);

/// D^-1/2 (A + I) D^-1/2 with D the degree after self-loop insertion.
struct NormalizedLaplacian {
  CsrMatrix matrix;
  std::vector<double> sqrt_degree;

  std::size_t size() const { return matrix.rows; }
};

NormalizedLaplacian normalized_laplacian(const Graph& graph);

/// lap * dense via the parallel kernel.
Tensor spmm(const NormalizedLaplacian& lap, const Tensor& dense);

}  // namespace abn
