#include "abn/graph.hpp"

#include <algorithm>
#include <cmath>

#include "abn/kernels.hpp"

namespace abn {

std::size_t Graph::max_degree() const {
  std::size_t best = 0;
  for (std::size_t v = 0; v < num_nodes(); ++v) best = std::max(best, degree(static_cast<NodeId>(v)));
  return best;
}

Graph Graph::from_edges(std::string name, std::size_t num_nodes,
                        const std::vector<std::pair<NodeId, NodeId>>& edges, CsrMatrix features,
                        std::vector<ClassId> labels, std::size_t num_classes) {
  std::vector<std::vector<std::uint32_t>> nbrs(num_nodes);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    auto [u, v] = edges[e];
    if (u >= num_nodes || v >= num_nodes) {
      throw GraphError("edge " + std::to_string(e) + " (" + std::to_string(u) + "," + std::to_string(v) +
                       ") references a node outside [0," + std::to_string(num_nodes) + ")");
    }
    if (u == v) throw GraphError("edge " + std::to_string(e) + " is a self-loop on node " + std::to_string(u));
    nbrs[u].push_back(v);
    nbrs[v].push_back(u);
  }

  Graph g;
  g.name = std::move(name);
  g.num_classes = num_classes;
  g.adjacency.rows = g.adjacency.cols = num_nodes;
  g.adjacency.row_ptr.assign(1, 0);
  for (std::size_t u = 0; u < num_nodes; ++u) {
    auto& row = nbrs[u];
    std::sort(row.begin(), row.end());
    auto dup = std::adjacent_find(row.begin(), row.end());
    if (dup != row.end()) {
      throw GraphError("duplicate edge between " + std::to_string(u) + " and " + std::to_string(*dup));
    }
    g.adjacency.col_idx.insert(g.adjacency.col_idx.end(), row.begin(), row.end());
    g.adjacency.row_ptr.push_back(g.adjacency.col_idx.size());
  }
  g.adjacency.values.assign(g.adjacency.col_idx.size(), 1.0);
  g.features = std::move(features);
  g.labels = std::move(labels);
  g.validate();
  return g;
}

std::vector<std::pair<NodeId, NodeId>> Graph::edge_list() const {
  std::vector<std::pair<NodeId, NodeId>> out;
  out.reserve(num_edges());
  for (std::size_t u = 0; u < num_nodes(); ++u) {
    for (std::size_t k = adjacency.row_begin(u); k < adjacency.row_end(u); ++k) {
      if (adjacency.col_idx[k] > u) out.emplace_back(static_cast<NodeId>(u), adjacency.col_idx[k]);
    }
  }
  return out;
}

void Graph::validate() const {
  try {
    adjacency.validate();
    features.validate();
  } catch (const ShapeError& e) {
    throw GraphError(std::string("malformed CSR: ") + e.what());
  }
  const std::size_t n = num_nodes();
  if (adjacency.cols != n) throw GraphError("adjacency must be square");
  if (features.rows != n) throw GraphError("feature rows do not match node count");
  if (labels.size() != n) throw GraphError("label count does not match node count");
  if (num_classes == 0 && n > 0) throw GraphError("graph must have at least one class");
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t k = adjacency.row_begin(u); k < adjacency.row_end(u); ++k) {
      const auto v = adjacency.col_idx[k];
      if (v == u) throw GraphError("self-loop stored on node " + std::to_string(u));
      if (!is_neighbor(*this, v, static_cast<NodeId>(u))) {
        throw GraphError("adjacency not symmetric at (" + std::to_string(u) + "," + std::to_string(v) + ")");
      }
    }
    if (labels[u] < 0 || static_cast<std::size_t>(labels[u]) >= num_classes) {
      throw GraphError("node " + std::to_string(u) + " has class id " + std::to_string(labels[u]) +
                       " outside [0," + std::to_string(num_classes) + ")");
    }
  }
  for (double v : features.values) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw GraphError("features must be finite and non-negative");
  }
}

bool is_neighbor(const Graph& graph, NodeId u, NodeId v) {
  const auto n = graph.num_nodes();
  if (u >= n || v >= n) {
    throw std::out_of_range("is_neighbor: node id out of range (" + std::to_string(u) + "," +
                            std::to_string(v) + ") for n=" + std::to_string(n));
  }
  if (u == v) return true;
  const auto* first = graph.adjacency.col_idx.data() + graph.adjacency.row_begin(u);
  const auto* last = graph.adjacency.col_idx.data() + graph.adjacency.row_end(u);
  return std::binary_search(first, last, v);
}

NormalizedLaplacian normalized_laplacian(const Graph& graph) {
  const auto& adj = graph.adjacency;
  try {
    adj.validate();
  } catch (const ShapeError& e) {
    throw GraphError(std::string("malformed CSR: ") + e.what());
  }
  const std::size_t n = adj.rows;
  NormalizedLaplacian lap;
  std::vector<double> degree(n);
  lap.sqrt_degree.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    degree[i] = static_cast<double>(adj.row_end(i) - adj.row_begin(i) + 1);
    lap.sqrt_degree[i] = std::sqrt(degree[i]);
  }

  auto& m = lap.matrix;
  m.rows = m.cols = n;
  m.row_ptr.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) m.row_ptr[i + 1] = m.row_ptr[i] + (adj.row_end(i) - adj.row_begin(i)) + 1;
  m.col_idx.resize(m.row_ptr[n]);
  m.values.resize(m.row_ptr[n]);

  // Structure: each row of A with the diagonal merged in ascending position.
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t dst = m.row_ptr[i];
    bool diag_done = false;
    for (std::size_t k = adj.row_begin(i); k < adj.row_end(i); ++k) {
      if (!diag_done && adj.col_idx[k] > i) {
        m.col_idx[dst++] = static_cast<std::uint32_t>(i);
        diag_done = true;
      }
      m.col_idx[dst++] = adj.col_idx[k];
    }
    if (!diag_done) m.col_idx[dst++] = static_cast<std::uint32_t>(i);
  }

  // Values: computed once for j >= i and mirrored into (j, i).
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) {
      const std::size_t j = m.col_idx[k];
      if (j < i) continue;
      const double v = 1.0 / std::sqrt(degree[i] * degree[j]);
      m.values[k] = v;
      if (j != i) {
        const auto* first = m.col_idx.data() + m.row_ptr[j];
        const auto* last = m.col_idx.data() + m.row_ptr[j + 1];
        const auto* pos = std::lower_bound(first, last, static_cast<std::uint32_t>(i));
        m.values[static_cast<std::size_t>(pos - m.col_idx.data())] = v;
      }
    }
  }
  return lap;
}

Tensor spmm(const NormalizedLaplacian& lap, const Tensor& dense) {
  if (dense.cols() < 1) throw ShapeError("spmm: dense operand needs at least one column");
  return kernels::spmm(lap.matrix, dense);
}

}  // namespace abn
