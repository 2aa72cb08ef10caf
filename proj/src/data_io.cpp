#include "abn/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <set>
#include <string_view>

#include "json.hpp"

#include "abn/rng.hpp"

namespace abn {
namespace {

namespace fs = std::filesystem;

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw BundleError(p.filename().string(), 0, "cannot open " + p.string());
  return in;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
bool parse_num(std::string_view s, T& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

// Partial Fisher-Yates: the first k entries of `pool` become a uniform
// sample without replacement.
std::vector<NodeId> draw(std::vector<NodeId> pool, std::size_t k, Rng& rng) {
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace

BundleError::BundleError(std::string file, std::size_t line, const std::string& message)
    : std::runtime_error(file + (line ? ":" + std::to_string(line) : std::string()) + ": " + message),
      file_(std::move(file)),
      line_(line) {}

std::string format_shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("format_shortest failed");
  return std::string(buf, ptr);
}

Graph load_bundle(const fs::path& dir) {
  nlohmann::json meta;
  {
    auto in = open_in(dir / "meta.json");
    try {
      meta = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw BundleError("meta.json", 0, e.what());
    }
  }
  std::size_t n = 0, m = 0, d = 0, c = 0;
  std::string name;
  try {
    name = meta.at("name").get<std::string>();
    n = meta.at("num_nodes").get<std::size_t>();
    m = meta.at("num_edges").get<std::size_t>();
    d = meta.at("num_features").get<std::size_t>();
    c = meta.at("num_classes").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw BundleError("meta.json", 0, e.what());
  }

  std::vector<std::pair<NodeId, NodeId>> edges;
  {
    auto in = open_in(dir / "edges.txt");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto tok = split_ws(line);
      if (tok.empty()) continue;
      NodeId u = 0, v = 0;
      if (tok.size() != 2 || !parse_num(tok[0], u) || !parse_num(tok[1], v)) {
        throw BundleError("edges.txt", lineno, "expected two node ids 'u v'");
      }
      if (u >= n || v >= n) throw BundleError("edges.txt", lineno, "node id out of range [0," + std::to_string(n) + ")");
      if (u == v) throw BundleError("edges.txt", lineno, "self-loop on node " + std::to_string(u));
      if (u > v) throw BundleError("edges.txt", lineno, "edge must be written with u < v");
      if (!edges.empty()) {
        if (edges.back() == std::make_pair(u, v)) throw BundleError("edges.txt", lineno, "duplicate edge");
        if (std::make_pair(u, v) < edges.back()) throw BundleError("edges.txt", lineno, "edges not sorted");
      }
      edges.emplace_back(u, v);
    }
    if (edges.size() != m) {
      throw BundleError("edges.txt", 0, "meta.json declares " + std::to_string(m) + " edges, file has " +
                                            std::to_string(edges.size()));
    }
  }

  CsrMatrix features;
  features.rows = n;
  features.cols = d;
  {
    auto in = open_in(dir / "features.txt");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (lineno > n) {
        if (split_ws(line).empty()) continue;
        throw BundleError("features.txt", lineno, "more feature rows than nodes");
      }
      long prev = -1;
      for (auto tok : split_ws(line)) {
        const auto colon = tok.find(':');
        std::uint32_t idx = 0;
        double value = 0.0;
        if (colon == std::string_view::npos || !parse_num(tok.substr(0, colon), idx) ||
            !parse_num(tok.substr(colon + 1), value)) {
          throw BundleError("features.txt", lineno, "malformed entry '" + std::string(tok) + "'");
        }
        if (idx >= d) throw BundleError("features.txt", lineno, "feature index " + std::to_string(idx) + " >= " + std::to_string(d));
        if (static_cast<long>(idx) <= prev) throw BundleError("features.txt", lineno, "feature indices not ascending");
        if (!(value >= 0.0)) throw BundleError("features.txt", lineno, "negative feature value");
        prev = idx;
        features.col_idx.push_back(idx);
        features.values.push_back(value);
      }
      features.row_ptr.push_back(features.col_idx.size());
    }
    if (features.row_ptr.size() != n + 1) {
      throw BundleError("features.txt", 0, "expected " + std::to_string(n) + " rows, found " +
                                               std::to_string(features.row_ptr.size() - 1));
    }
  }

  std::vector<ClassId> labels;
  {
    auto in = open_in(dir / "labels.txt");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto tok = split_ws(line);
      if (tok.empty() && lineno > n) continue;
      ClassId y = 0;
      if (tok.size() != 1 || !parse_num(tok[0], y)) throw BundleError("labels.txt", lineno, "expected one class id");
      if (y < 0 || static_cast<std::size_t>(y) >= c) {
        throw BundleError("labels.txt", lineno, "class id " + std::to_string(y) + " outside [0," + std::to_string(c) + ")");
      }
      labels.push_back(y);
    }
    if (labels.size() != n) {
      throw BundleError("labels.txt", 0, "expected " + std::to_string(n) + " labels, found " + std::to_string(labels.size()));
    }
  }
  std::vector<bool> seen(c, false);
  for (auto y : labels) seen[static_cast<std::size_t>(y)] = true;
  if (n > 0 && std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw BundleError("labels.txt", 0, "class ids are not dense in [0," + std::to_string(c) + ")");
  }

  try {
    return Graph::from_edges(name, n, edges, std::move(features), std::move(labels), c);
  } catch (const GraphError& e) {
    throw BundleError(dir.filename().string(), 0, e.what());
  }
}

void save_bundle(const Graph& graph, const fs::path& dir) {
  fs::create_directories(dir);
  nlohmann::json meta = {{"name", graph.name},
                         {"num_nodes", graph.num_nodes()},
                         {"num_edges", graph.num_edges()},
                         {"num_features", graph.num_features()},
                         {"num_classes", graph.num_classes}};
  std::ofstream(dir / "meta.json") << meta.dump() << '\n';
  {
    std::ofstream out(dir / "edges.txt");
    for (auto [u, v] : graph.edge_list()) out << u << ' ' << v << '\n';
  }
  {
    std::ofstream out(dir / "features.txt");
    const auto& f = graph.features;
    for (std::size_t r = 0; r < f.rows; ++r) {
      bool first = true;
      for (std::size_t k = f.row_begin(r); k < f.row_end(r); ++k) {
        if (f.values[k] == 0.0) continue;
        if (!first) out << ' ';
        out << f.col_idx[k] << ':' << format_shortest(f.values[k]);
        first = false;
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(dir / "labels.txt");
    for (auto y : graph.labels) out << y << '\n';
  }
}

std::vector<NodeId> Split::unlabeled(std::size_t num_nodes) const {
  std::vector<bool> in_train(num_nodes, false);
  for (auto v : train) in_train[v] = true;
  std::vector<NodeId> out;
  out.reserve(num_nodes - train.size());
  for (std::size_t v = 0; v < num_nodes; ++v) {
    if (!in_train[v]) out.push_back(static_cast<NodeId>(v));
  }
  return out;
}

std::vector<LabeledNode> Split::labeled(const Graph& graph) const {
  std::vector<LabeledNode> out;
  out.reserve(train.size());
  for (auto v : train) out.push_back({v, graph.labels.at(v)});
  return out;
}

void Split::validate(std::size_t num_nodes) const {
  std::vector<int> owner(num_nodes, -1);
  const std::vector<NodeId>* sets[] = {&train, &val, &test};
  for (int s = 0; s < 3; ++s) {
    for (auto v : *sets[s]) {
      if (v >= num_nodes) throw std::invalid_argument("split: node id " + std::to_string(v) + " out of range");
      if (owner[v] != -1) throw std::invalid_argument("split: node " + std::to_string(v) + " appears twice");
      owner[v] = s;
    }
  }
  if (train.empty()) throw std::invalid_argument("split: empty training set");
}

Split make_split(const Graph& graph, std::size_t per_class, std::uint64_t seed, SplitSizes sizes) {
  const std::size_t n = graph.num_nodes();
  std::vector<std::vector<NodeId>> by_class(graph.num_classes);
  for (std::size_t v = 0; v < n; ++v) by_class[static_cast<std::size_t>(graph.labels[v])].push_back(static_cast<NodeId>(v));
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].size() < per_class) {
      throw std::invalid_argument("make_split: class " + std::to_string(c) + " has only " +
                                  std::to_string(by_class[c].size()) + " nodes, need " + std::to_string(per_class));
    }
  }
  if (n < per_class * graph.num_classes + sizes.val + sizes.test) {
    throw std::invalid_argument("make_split: graph has " + std::to_string(n) + " nodes, split needs " +
                                std::to_string(per_class * graph.num_classes + sizes.val + sizes.test));
  }

  Rng rng(seed);
  Split split;
  split.seed = seed;
  std::vector<bool> used(n, false);
  for (const auto& members : by_class) {
    for (auto v : draw(members, per_class, rng)) {
      split.train.push_back(v);
      used[v] = true;
    }
  }
  auto remainder = [&] {
    std::vector<NodeId> rest;
    for (std::size_t v = 0; v < n; ++v) {
      if (!used[v]) rest.push_back(static_cast<NodeId>(v));
    }
    return rest;
  };
  split.val = draw(remainder(), sizes.val, rng);
  for (auto v : split.val) used[v] = true;
  split.test = draw(remainder(), sizes.test, rng);
  return split;
}

double label_rate(const Split& split, const Graph& graph) {
  return static_cast<double>(split.train.size()) / static_cast<double>(graph.num_nodes());
}

CsrMatrix row_normalized(const CsrMatrix& features) {
  CsrMatrix out = features;
  for (std::size_t r = 0; r < out.rows; ++r) {
    double total = 0.0;
    for (std::size_t k = out.row_begin(r); k < out.row_end(r); ++k) total += out.values[k];
    if (total == 0.0) continue;
    for (std::size_t k = out.row_begin(r); k < out.row_end(r); ++k) out.values[k] /= total;
  }
  return out;
}

}  // namespace abn
