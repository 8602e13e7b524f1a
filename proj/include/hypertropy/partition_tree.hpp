#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "hypertropy/assignment.hpp"
#include "hypertropy/graph.hpp"

namespace hypertropy {

struct TreeNode {
  int id = 0;
  int height = 0;
  /// Graph nodes in this module, ascending.
  std::vector<NodeId> members;
  std::vector<int> children;
  int parent = -1;
  /// Column index at `height` in the assignment stack this node was decoded from.
  int level_index = -1;
  /// Lorentz coordinates (time first), when embeddings were supplied.
  std::optional<Eigen::VectorXd> coords;
  double volume = 0.0;
  double cut = 0.0;
};

/// Rooted tree of nested vertex modules. Nodes are stored in an arena and
/// addressed by id; the root has id 0 and holds every graph node.
class PartitionTree {
 public:
  explicit PartitionTree(std::size_t num_graph_nodes = 0, double curvature = -1.0);

  int root() const { return 0; }
  const TreeNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  TreeNode& node(int id) { return nodes_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return nodes_.size(); }
  std::size_t num_graph_nodes() const { return num_graph_nodes_; }
  double curvature() const { return curvature_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }

  /// Appends a child; members are sorted. Returns the new node's id.
  int add_child(int parent, std::vector<NodeId> members,
                std::optional<Eigen::VectorXd> coords = std::nullopt);
  void set_root_coords(Eigen::VectorXd coords) { nodes_.front().coords = std::move(coords); }

  /// Largest node height.
  int height() const;
  std::vector<int> nodes_at_height(int h) const;
  std::vector<int> leaves() const;

  /// Recomputes volume and cut of every node from the graph.
  void refresh_statistics(const Graph& g);

  /// Checks the partitioning-tree invariants: children's modules partition the
  /// parent's module, non-empty leaves are singletons, the root covers every
  /// graph node. Empty modules are allowed unless `allow_empty` is false.
  /// Throws std::logic_error naming the first violation.
  void validate(bool allow_empty = true) const;

 private:
  std::vector<TreeNode> nodes_;
  std::size_t num_graph_nodes_;
  double curvature_;
};

/// Row-wise argmax one-hot; ties go to the lowest column.
AssignmentStack harden(const AssignmentStack& soft);

/// Breadth-first decoding of a hard stack. `embeddings[h]` (optional; pass an
/// empty vector to skip) holds one Lorentz point per row for the N_h nodes at
/// height h, h = 0..H. Tree nodes whose module would be empty are not created.
PartitionTree decode(const AssignmentStack& hard, const std::vector<Eigen::MatrixXd>& embeddings,
                     const Graph& g, double curvature = -1.0);

/// Removes empty modules and collapses single-child chains whose child has the
/// same module. When the root is part of a chain the root is kept; otherwise the
/// lower node takes the place of the removed one.
PartitionTree repair(const PartitionTree& t);

/// Cluster id per graph node. Ids are canonical: numbered 0, 1, ... in order of
/// each cluster's smallest graph node.
using Labeling = std::vector<int>;

/// Labels each graph node by its ancestor among the root's children.
Labeling natural_clusters(const PartitionTree& t);
std::size_t natural_cluster_count(const PartitionTree& t);

/// Divisive/agglomerative extraction of exactly K clusters from a tree with
/// coordinates, ordered by geodesic distance from the root. Throws
/// std::invalid_argument for K outside [1, N] or missing coordinates, and
/// std::runtime_error when more clusters are requested than the tree can split into.
Labeling extract_k(const PartitionTree& t, std::size_t k);

/// Renumbers cluster ids in order of first appearance.
Labeling canonical_labels(const Labeling& labels);

/// Nested { id, height, members, poincare_xy, coords, children[] }.
nlohmann::json tree_to_json(const PartitionTree& t);
PartitionTree tree_from_json(const nlohmann::json& j);

}  // namespace hypertropy
