#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace hypertropy {

using NodeId = std::int32_t;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Raised for malformed graph input. Carries the 1-based line number when the
/// problem was found while reading a file (0 otherwise).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class FileNotFoundError : public std::runtime_error {
 public:
  explicit FileNotFoundError(const std::string& path)
      : std::runtime_error("cannot open file: " + path), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Raised when an exhaustive routine is asked to run on a graph that is too large.
class SizeCapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Edge {
  NodeId u;
  NodeId v;
  double w;
};

/// Membership set over the nodes 0..n-1 of a graph.
class NodeSubset {
 public:
  explicit NodeSubset(std::size_t n) : mask_(n, false) {}
  NodeSubset(std::size_t n, std::span<const NodeId> members);

  static NodeSubset all(std::size_t n);
  /// Bit i of `bits` selects node i. Requires n <= 64.
  static NodeSubset from_bits(std::size_t n, std::uint64_t bits);

  void insert(NodeId i);
  bool contains(NodeId i) const { return mask_[static_cast<std::size_t>(i)]; }
  std::size_t universe() const { return mask_.size(); }
  std::size_t size() const;
  bool empty() const { return size() == 0; }
  std::vector<NodeId> members() const;
  NodeSubset complement() const;

 private:
  std::vector<bool> mask_;
};

/// Undirected weighted graph without self-loops. The adjacency matrix is stored
/// symmetrically, so every undirected edge appears as two ordered pairs.
class Graph {
 public:
  /// Builds a graph from undirected edges. Duplicates are summed and self-loops
  /// dropped; throws ParseError on negative or non-finite weights and on nodes
  /// without incident edges.
  static Graph from_edges(std::size_t n_nodes, std::span<const Edge> edges);

  std::size_t num_nodes() const { return degrees_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  /// Canonical undirected edge list (u < v), sorted.
  const std::vector<Edge>& edges() const { return edges_; }
  const SparseMatrix& adjacency() const { return adjacency_; }
  const Eigen::VectorXd& degrees() const { return degrees_; }
  double degree(NodeId i) const { return degrees_[i]; }
  double volume() const { return volume_; }
  double weight(NodeId u, NodeId v) const { return adjacency_.coeff(u, v); }
  bool has_edge(NodeId u, NodeId v) const { return weight(u, v) != 0.0; }

  const std::optional<Eigen::MatrixXd>& features() const { return features_; }
  const std::optional<std::vector<int>>& labels() const { return labels_; }
  void set_features(Eigen::MatrixXd features);
  void set_labels(std::vector<int> labels);

  /// Number of self-loop entries dropped during construction.
  std::size_t dropped_self_loops() const { return dropped_self_loops_; }
  /// Original token for each node id (identity when ids were numeric).
  const std::vector<std::string>& node_names() const { return names_; }
  void set_node_names(std::vector<std::string> names);

  bool is_connected() const;
  /// Stable 64-bit fingerprint of the edge list and weights.
  std::uint64_t fingerprint() const;

 private:
  std::vector<Edge> edges_;
  SparseMatrix adjacency_;
  Eigen::VectorXd degrees_;
  double volume_ = 0.0;
  std::optional<Eigen::MatrixXd> features_;
  std::optional<std::vector<int>> labels_;
  std::vector<std::string> names_;
  std::size_t dropped_self_loops_ = 0;
};

/// Reads a TSV edge list ("u<TAB>v[<TAB>w]", '#' comments, blank lines ignored).
/// Tokens that are all non-negative integers are used as ids directly; otherwise
/// tokens are remapped to 0-based ids in order of first appearance.
/// Optional feature rows are "node<TAB>f1<TAB>...<TAB>fd"; label rows are
/// "node<TAB>class".
Graph load_graph(const std::string& edge_path,
                 const std::optional<std::string>& feature_path = std::nullopt,
                 const std::optional<std::string>& label_path = std::nullopt);

/// Same as load_graph, reading the edge list from an in-memory string.
Graph parse_edge_list(const std::string& text);

double subset_volume(const Graph& g, const NodeSubset& s);
double cut_weight(const Graph& g, const NodeSubset& s);
/// cut(s) / min(Vol(s), Vol(G) - Vol(s)); throws for empty or full subsets.
double subset_conductance(const Graph& g, const NodeSubset& s);
/// Exhaustive minimum conductance over all proper non-empty subsets.
double graph_conductance(const Graph& g, std::size_t max_n = 16);

}  // namespace hypertropy
