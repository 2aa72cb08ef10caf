#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "abn/graph.hpp"
#include "abn/models.hpp"
#include "abn/rng.hpp"
#include "abn/tensor.hpp"

namespace testutil {

inline std::string fixture(const std::string& name) { return std::string(ABN_FIXTURE_DIR) + "/" + name; }
inline std::string dataset(const std::string& name) { return std::string(ABN_DATA_DIR) + "/" + name; }

inline abn::Tensor random_tensor(std::size_t rows, std::size_t cols, abn::Rng& rng, double lo = -1.0, double hi = 1.0) {
  abn::Tensor t(rows, cols);
  for (auto& x : t.values()) x = rng.uniform(lo, hi);
  return t;
}

/// Erdos-Renyi style graph with random sparse non-negative features and
/// labels covering every class.
inline abn::Graph random_graph(std::size_t n, std::size_t d, std::size_t c, double edge_p, abn::Rng& rng) {
  std::vector<std::pair<abn::NodeId, abn::NodeId>> edges;
  for (abn::NodeId u = 0; u < n; ++u) {
    for (abn::NodeId v = u + 1; v < n; ++v) {
      if (rng.uniform() < edge_p) edges.emplace_back(u, v);
    }
  }
  abn::Tensor x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      if (rng.uniform() < 0.5) x(i, j) = rng.uniform(0.1, 2.0);
    }
  }
  std::vector<abn::ClassId> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<abn::ClassId>(i < c ? i : rng.below(c));
  return abn::Graph::from_edges("random", n, edges, abn::CsrMatrix::from_dense(x), labels, c);
}

/// D^-1/2 (A + I) D^-1/2 built densely from the definition.
inline abn::Tensor dense_laplacian(const abn::Graph& g) {
  const auto n = g.num_nodes();
  abn::Tensor a = g.adjacency.to_dense();
  for (std::size_t i = 0; i < n; ++i) a(i, i) += 1.0;
  std::vector<double> deg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) deg[i] += a(i, j);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a(i, j) /= std::sqrt(deg[i] * deg[j]);
  }
  return a;
}

inline abn::Tensor dense_mul(const abn::Tensor& a, const abn::Tensor& b) {
  abn::Tensor out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += a(i, k) * b(k, j);
    }
  }
  return out;
}

inline abn::Tensor dense_softmax(abn::Tensor z) {
  for (std::size_t i = 0; i < z.rows(); ++i) {
    double m = z(i, 0);
    for (std::size_t j = 1; j < z.cols(); ++j) m = std::max(m, z(i, j));
    double s = 0.0;
    for (std::size_t j = 0; j < z.cols(); ++j) s += (z(i, j) = std::exp(z(i, j) - m));
    for (std::size_t j = 0; j < z.cols(); ++j) z(i, j) /= s;
  }
  return z;
}

inline double max_abs_diff(const abn::Tensor& a, const abn::Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

struct GradCheckResult {
  double max_rel = 0.0;      // over entries where either side is >= 1e-6
  double max_small_abs = 0.0;  // over entries where both sides are < 1e-6
};

/// Central finite differences (step h) of `loss` around `params`, compared
/// entrywise with `analytic` (same order as abn::trainable).
inline GradCheckResult grad_check(const std::function<double(const abn::ModelParams&)>& loss, abn::ModelParams params,
                                  const std::vector<abn::Tensor>& analytic, double h = 1e-5) {
  GradCheckResult r;
  auto targets = abn::trainable(params);
  for (std::size_t p = 0; p < targets.size(); ++p) {
    for (std::size_t k = 0; k < targets[p]->size(); ++k) {
      double& x = (*targets[p])[k];
      const double saved = x;
      x = saved + h;
      const double up = loss(params);
      x = saved - h;
      const double down = loss(params);
      x = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[p][k];
      if (std::abs(a) < 1e-6 && std::abs(numeric) < 1e-6) {
        r.max_small_abs = std::max(r.max_small_abs, std::abs(a - numeric));
      } else {
        r.max_rel = std::max(r.max_rel, std::abs(a - numeric) / std::max(std::abs(a), std::abs(numeric)));
      }
    }
  }
  return r;
}

}  // namespace testutil
