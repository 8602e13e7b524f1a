#include "hypertropy/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

namespace hypertropy {

NodeSubset::NodeSubset(std::size_t n, std::span<const NodeId> members) : mask_(n, false) {
  for (NodeId i : members) insert(i);
}

NodeSubset NodeSubset::all(std::size_t n) {
  NodeSubset s(n);
  s.mask_.assign(n, true);
  return s;
}

NodeSubset NodeSubset::from_bits(std::size_t n, std::uint64_t bits) {
  if (n > 64) throw std::invalid_argument("NodeSubset::from_bits supports at most 64 nodes");
  NodeSubset s(n);
  for (std::size_t i = 0; i < n; ++i) s.mask_[i] = (bits >> i) & 1U;
  return s;
}

void NodeSubset::insert(NodeId i) {
  if (i < 0 || static_cast<std::size_t>(i) >= mask_.size())
    throw std::out_of_range("node id " + std::to_string(i) + " outside subset universe");
  mask_[static_cast<std::size_t>(i)] = true;
}

std::size_t NodeSubset::size() const {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), true));
}

std::vector<NodeId> NodeSubset::members() const {
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < mask_.size(); ++i)
    if (mask_[i]) out.push_back(static_cast<NodeId>(i));
  return out;
}

NodeSubset NodeSubset::complement() const {
  NodeSubset c(mask_.size());
  for (std::size_t i = 0; i < mask_.size(); ++i) c.mask_[i] = !mask_[i];
  return c;
}

Graph Graph::from_edges(std::size_t n_nodes, std::span<const Edge> edges) {
  Graph g;
  std::map<std::pair<NodeId, NodeId>, double> merged;
  for (const Edge& e : edges) {
    if (e.u < 0 || e.v < 0 || static_cast<std::size_t>(e.u) >= n_nodes ||
        static_cast<std::size_t>(e.v) >= n_nodes)
      throw ParseError("edge endpoint outside 0.." + std::to_string(n_nodes - 1), 0);
    if (!std::isfinite(e.w) || e.w < 0.0)
      throw ParseError("edge weight must be finite and non-negative", 0);
    if (e.u == e.v) {
      ++g.dropped_self_loops_;
      continue;
    }
    if (e.w == 0.0) continue;
    merged[{std::min(e.u, e.v), std::max(e.u, e.v)}] += e.w;
  }

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * merged.size());
  g.degrees_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_nodes));
  for (const auto& [key, w] : merged) {
    g.edges_.push_back({key.first, key.second, w});
    triplets.emplace_back(key.first, key.second, w);
    triplets.emplace_back(key.second, key.first, w);
    g.degrees_[key.first] += w;
    g.degrees_[key.second] += w;
  }
  for (std::size_t i = 0; i < n_nodes; ++i)
    if (g.degrees_[static_cast<Eigen::Index>(i)] <= 0.0)
      throw ParseError("node " + std::to_string(i) + " has no incident edges", 0);

  const auto n = static_cast<Eigen::Index>(n_nodes);
  g.adjacency_.resize(n, n);
  g.adjacency_.setFromTriplets(triplets.begin(), triplets.end());
  g.adjacency_.makeCompressed();
  g.volume_ = g.degrees_.sum();
  g.names_.resize(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i) g.names_[i] = std::to_string(i);
  return g;
}

void Graph::set_features(Eigen::MatrixXd features) {
  if (static_cast<std::size_t>(features.rows()) != num_nodes())
    throw std::invalid_argument("feature matrix must have one row per node");
  if (!features.allFinite()) throw std::invalid_argument("features must be finite");
  features_ = std::move(features);
}

void Graph::set_labels(std::vector<int> labels) {
  if (labels.size() != num_nodes())
    throw std::invalid_argument("label vector must have one entry per node");
  labels_ = std::move(labels);
}

void Graph::set_node_names(std::vector<std::string> names) {
  if (names.size() != num_nodes()) throw std::invalid_argument("one name per node required");
  names_ = std::move(names);
}

bool Graph::is_connected() const {
  const std::size_t n = num_nodes();
  if (n == 0) return true;
  std::vector<char> seen(n, 0);
  std::vector<Eigen::Index> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    Eigen::Index u = stack.back();
    stack.pop_back();
    for (SparseMatrix::InnerIterator it(adjacency_, u); it; ++it) {
      if (!seen[static_cast<std::size_t>(it.col())]) {
        seen[static_cast<std::size_t>(it.col())] = 1;
        ++count;
        stack.push_back(it.col());
      }
    }
  }
  return count == n;
}

std::uint64_t Graph::fingerprint() const {
  // FNV-1a over (n, edges) in canonical order.
  std::uint64_t h = 14695981039346656037ULL;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  const std::uint64_t n = num_nodes();
  mix(&n, sizeof n);
  for (const Edge& e : edges_) {
    mix(&e.u, sizeof e.u);
    mix(&e.v, sizeof e.v);
    mix(&e.w, sizeof e.w);
  }
  return h;
}

namespace {

struct RawEdge {
  std::string u, v;
  double w;
};

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

bool is_index(const std::string& s) {
  return !s.empty() && s.size() < 10 &&
         std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

double parse_double(const std::string& s, std::size_t line) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line) + ": cannot parse number '" + s + "'", line);
  }
}

class NodeIndex {
 public:
  explicit NodeIndex(bool numeric) : numeric_(numeric) {}

  NodeId intern(const std::string& tok) {
    if (numeric_) {
      auto id = static_cast<NodeId>(std::stol(tok));
      max_id_ = std::max(max_id_, id);
      return id;
    }
    auto [it, inserted] = ids_.try_emplace(tok, static_cast<NodeId>(names_.size()));
    if (inserted) names_.push_back(tok);
    return it->second;
  }

  std::optional<NodeId> find(const std::string& tok) const {
    if (numeric_) {
      if (!is_index(tok)) return std::nullopt;
      auto id = static_cast<NodeId>(std::stol(tok));
      if (id > max_id_) return std::nullopt;
      return id;
    }
    auto it = ids_.find(tok);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t size() const {
    return numeric_ ? static_cast<std::size_t>(max_id_ + 1) : names_.size();
  }
  std::vector<std::string> names() const {
    if (!numeric_) return names_;
    std::vector<std::string> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::to_string(i);
    return out;
  }

 private:
  bool numeric_;
  NodeId max_id_ = -1;
  std::unordered_map<std::string, NodeId> ids_;
  std::vector<std::string> names_;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFoundError(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename Fn>
void for_each_record(const std::string& text, Fn&& fn) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto fields = split_fields(line);
    if (fields.empty()) continue;
    fn(fields, lineno);
  }
}

struct ParsedEdges {
  Graph graph;
  NodeIndex index;
};

ParsedEdges parse_edges(const std::string& text) {
  std::vector<RawEdge> raw;
  bool numeric = true;
  for_each_record(text, [&](const std::vector<std::string>& f, std::size_t line) {
    if (f.size() < 2 || f.size() > 3)
      throw ParseError("line " + std::to_string(line) + ": expected 'u v [w]'", line);
    double w = f.size() == 3 ? parse_double(f[2], line) : 1.0;
    if (w < 0.0 || !std::isfinite(w))
      throw ParseError("line " + std::to_string(line) + ": negative or non-finite weight", line);
    numeric = numeric && is_index(f[0]) && is_index(f[1]);
    raw.push_back({f[0], f[1], w});
  });
  if (raw.empty()) throw ParseError("edge list is empty", 0);

  NodeIndex index(numeric);
  std::vector<Edge> edges;
  edges.reserve(raw.size());
  for (const RawEdge& e : raw) {
    NodeId u = index.intern(e.u);
    NodeId v = index.intern(e.v);
    edges.push_back({u, v, e.w});
  }
  Graph g = Graph::from_edges(index.size(), edges);
  g.set_node_names(index.names());
  return {std::move(g), std::move(index)};
}

}  // namespace

Graph parse_edge_list(const std::string& text) { return parse_edges(text).graph; }

Graph load_graph(const std::string& edge_path, const std::optional<std::string>& feature_path,
                 const std::optional<std::string>& label_path) {
  auto [g, index] = parse_edges(read_file(edge_path));
  const std::size_t n = g.num_nodes();

  if (feature_path) {
    std::vector<std::vector<double>> rows(n);
    std::size_t dim = 0;
    for_each_record(read_file(*feature_path), [&](const std::vector<std::string>& f,
                                                  std::size_t line) {
      auto id = index.find(f[0]);
      if (!id)
        throw ParseError("line " + std::to_string(line) + ": feature row for unknown node '" +
                             f[0] + "'",
                         line);
      if (dim == 0) dim = f.size() - 1;
      if (f.size() - 1 != dim || dim == 0)
        throw ParseError("line " + std::to_string(line) + ": inconsistent feature width", line);
      auto& row = rows[static_cast<std::size_t>(*id)];
      row.clear();
      for (std::size_t k = 1; k < f.size(); ++k) row.push_back(parse_double(f[k], line));
    });
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                              static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < n; ++i) {
      if (rows[i].size() != dim)
        throw ParseError("missing feature row for node " + g.node_names()[i], 0);
      for (std::size_t k = 0; k < dim; ++k)
        x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
    g.set_features(std::move(x));
  }

  if (label_path) {
    std::vector<int> labels(n, -1);
    for_each_record(read_file(*label_path), [&](const std::vector<std::string>& f,
                                                std::size_t line) {
      if (f.size() != 2)
        throw ParseError("line " + std::to_string(line) + ": expected 'node class'", line);
      auto id = index.find(f[0]);
      if (!id)
        throw ParseError("line " + std::to_string(line) + ": label for node '" + f[0] +
                             "' that has no edges",
                         line);
      labels[static_cast<std::size_t>(*id)] = static_cast<int>(parse_double(f[1], line));
    });
    for (std::size_t i = 0; i < n; ++i)
      if (labels[i] < 0) throw ParseError("missing label for node " + g.node_names()[i], 0);
    g.set_labels(std::move(labels));
  }
  return g;
}

double subset_volume(const Graph& g, const NodeSubset& s) {
  double vol = 0.0;
  for (NodeId i : s.members()) vol += g.degree(i);
  return vol;
}

double cut_weight(const Graph& g, const NodeSubset& s) {
  double cut = 0.0;
  for (const Edge& e : g.edges())
    if (s.contains(e.u) != s.contains(e.v)) cut += e.w;
  return cut;
}

double subset_conductance(const Graph& g, const NodeSubset& s) {
  const std::size_t k = s.size();
  if (k == 0 || k == g.num_nodes())
    throw std::invalid_argument("conductance requires a proper non-empty subset");
  const double vol = subset_volume(g, s);
  return cut_weight(g, s) / std::min(vol, g.volume() - vol);
}

double graph_conductance(const Graph& g, std::size_t max_n) {
  const std::size_t n = g.num_nodes();
  if (n > max_n || n > 30)
    throw SizeCapError("exhaustive conductance needs N <= " + std::to_string(std::min<std::size_t>(max_n, 30)) +
                       " (graph has " + std::to_string(n) + " nodes)");
  if (n < 2) throw std::invalid_argument("conductance needs at least two nodes");

  // Subsets and complements give the same value, so fixing node n-1 outside halves the work.
  const std::uint64_t limit = std::uint64_t{1} << (n - 1);
  std::vector<double> deg(n);
  for (std::size_t i = 0; i < n; ++i) deg[i] = g.degree(static_cast<NodeId>(i));
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t bits = 1; bits < limit; ++bits) {
    double vol = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if ((bits >> i) & 1U) vol += deg[i];
    const double denom = std::min(vol, g.volume() - vol);
    if (denom <= 0.0) continue;
    double cut = 0.0;
    for (const Edge& e : g.edges())
      if (((bits >> e.u) & 1U) != ((bits >> e.v) & 1U)) cut += e.w;
    best = std::min(best, cut / denom);
  }
  return best;
}

}  // namespace hypertropy
