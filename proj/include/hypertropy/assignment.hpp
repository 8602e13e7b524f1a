#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace hypertropy {

/// Level-wise parent assignments of a partitioning tree of height H.
///
/// level(h) is C^h, an N_h x N_{h-1} row-stochastic matrix mapping the tree
/// nodes at height h to their parents at height h-1. Height H holds the graph
/// nodes (N_H = N) and height 0 the root (N_0 = 1), so level(1) is a single
/// column of ones.
class AssignmentStack {
 public:
  /// `levels[h-1]` is C^h for h = 1..H. Throws std::invalid_argument when the
  /// shapes do not chain or C^1 has more than one column.
  explicit AssignmentStack(std::vector<Eigen::MatrixXd> levels);

  /// H = 1: every graph node hangs directly off the root.
  static AssignmentStack flat(Eigen::Index n);
  /// Hard stack from parent indices. `parents[h-1][k]` is the parent (at height
  /// h-1) of node k at height h; parents[0] must be all zeros.
  static AssignmentStack from_parents(const std::vector<std::vector<int>>& parents);

  int height() const { return static_cast<int>(levels_.size()); }
  const Eigen::MatrixXd& level(int h) const;
  /// Widths [N_0, N_1, ..., N_H].
  std::vector<Eigen::Index> widths() const;
  Eigen::Index num_leaves() const { return levels_.back().rows(); }
  const std::vector<Eigen::MatrixXd>& levels() const { return levels_; }

  /// True when every entry is exactly 0 or 1.
  bool is_hard() const;
  /// Max over all rows of |row sum - 1|.
  double max_row_deviation() const;
  /// Throws std::invalid_argument if some row deviates from summing to 1 by more than tol
  /// or an entry is negative.
  void require_row_stochastic(double tol) const;

  /// S^h = C^H C^{H-1} ... C^{h+1}: membership of graph nodes in height-h tree nodes.
  /// S^H is the identity.
  Eigen::MatrixXd cumulative(int h) const;

 private:
  std::vector<Eigen::MatrixXd> levels_;
};

/// Volumes implied by a stack on a graph with degree vector d.
struct LevelVolumes {
  /// volume[h] = (S^h)^T d, length N_h, for h = 0..H.
  std::vector<Eigen::VectorXd> volume;
  /// parent_volume[h] = C^h volume[h-1], length N_h, for h = 1..H (index 0 unused).
  std::vector<Eigen::VectorXd> parent_volume;
};

LevelVolumes level_volumes(const AssignmentStack& stack, const Eigen::VectorXd& degrees);

}  // namespace hypertropy
