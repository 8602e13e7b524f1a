#pragma once

// Structural information of a graph under a partitioning tree, in bits.
//
// Two evaluation routes coexist and are cross-checked in the tests:
//  * nodewise_structural_information walks a discrete tree and sums
//    -(g_a / V) log2(V_a / V_parent) over non-root nodes;
//  * dsi_loss evaluates the level-wise form over an assignment stack, which
//    stays differentiable when the assignments are soft.

#include <span>
#include <utility>
#include <vector>

#include "hypertropy/assignment.hpp"
#include "hypertropy/autodiff.hpp"
#include "hypertropy/graph.hpp"
#include "hypertropy/partition_tree.hpp"

namespace hypertropy {

/// Floor applied to volumes inside logarithms of the level-wise objective.
inline constexpr double kLogFloor = 1e-10;

/// H^1(G) = -(1/V) sum_i d_i log2(d_i / V).
double one_dim_entropy(const Graph& g);

/// Classic node-wise structural information of `g` under tree `t`. Empty
/// modules contribute nothing. Throws std::invalid_argument when a non-empty
/// module has zero volume or the tree violates the partition invariants.
double nodewise_structural_information(const Graph& g, const PartitionTree& t);

/// Level-wise objective recorded on a tape. `levels[h-1]` is C^h (h = 1..H).
/// Edge sums run over the symmetric adjacency (ordered pairs).
ad::Var dsi_loss(ad::Tape& tape, const Graph& g, std::span<const ad::Var> levels);

/// Value-only evaluation. Throws std::invalid_argument if the stack is not
/// row-stochastic within 1e-6 or does not match the graph.
double dsi_loss(const Graph& g, const AssignmentStack& stack);

/// Per-height contributions H(G; h), h = 1..H (index 0 unused, always 0).
std::vector<double> dsi_terms(const Graph& g, const AssignmentStack& stack);

/// Sum over heights and parents of (V_j / V) * E(child volume shares). Equals
/// H^1(G) for every hard stack. Throws std::invalid_argument for soft stacks.
double additivity_decomposition(const Graph& g, const AssignmentStack& hard);

struct BruteForceResult {
  double value = 0.0;
  PartitionTree tree;
  /// Cluster index of each graph node in the optimal level-1 partition.
  std::vector<int> partition;
};

/// Exact minimum structural information over all height-2 trees, by
/// enumerating every set partition of the vertices. Requires N <= 7 and H == 2.
BruteForceResult brute_force_entropy(const Graph& g, int height = 2);

struct NormalizedEntropy {
  double entropy = 0.0;       // H^H(G)
  double one_dim = 0.0;       // H^1(G)
  double tau = 0.0;           // entropy / one_dim
  double conductance = 0.0;   // Phi(G)
  bool bound_holds = false;   // tau >= Phi - 1e-12
};

/// tau(G;H) together with the exhaustive conductance. Throws SizeCapError when
/// N > max_n.
NormalizedEntropy normalized_entropy(const Graph& g, int height = 2, std::size_t max_n = 7);

struct GreedyResult {
  PartitionTree tree;
  double value = 0.0;
  std::vector<int> partition;
  /// Objective after each accepted merge (starting with the all-singleton value).
  std::vector<double> trajectory;
};

/// Agglomerative two-level baseline: starting from singleton modules, merge the
/// pair with the largest strict decrease of the objective until none decreases it.
/// Ties go to the lexicographically smallest (min node id, min node id) pair.
GreedyResult cse_greedy(const Graph& g);

/// Value of the two-level tree root -> modules -> leaves for a node->module map.
double two_level_value(const Graph& g, std::span<const int> partition);

}  // namespace hypertropy
