#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "hypertropy/graph.hpp"

namespace hypertropy {

/// Mutual information over the arithmetic mean of the two label entropies.
/// When both entropies vanish the result is 1 if the partitions coincide, else 0.
double nmi(std::span<const int> pred, std::span<const int> truth);

/// Pair-counting adjusted Rand index.
double ari(std::span<const int> pred, std::span<const int> truth);

/// P(score of a positive > score of a negative), ties counted as 1/2.
double auc_score(std::span<const double> positive, std::span<const double> negative);

struct LinkSplit {
  std::vector<std::pair<NodeId, NodeId>> positives;
  std::vector<std::pair<NodeId, NodeId>> negatives;
};

/// Seeded held-out split: `fraction` of the edges (at least one) and as many
/// uniform non-edges. Throws std::invalid_argument with fewer than two edges or
/// no non-edge.
LinkSplit link_split(const Graph& g, double fraction, std::uint64_t seed);

/// AUC of negative geodesic distance between embedding rows (Lorentz points,
/// time first) on a held-out split.
double auc_link(const Eigen::MatrixXd& embeddings, const Graph& g, double curvature,
                double fraction = 0.1, std::uint64_t seed = 0);

/// All-pairs weighted shortest-path lengths.
Eigen::MatrixXd shortest_paths(const Graph& g);

inline constexpr double kCoincidentPenalty = 1e6;

struct DistortionResult {
  double value = 0.0;
  /// Pairs of distinct nodes whose embedded points coincide.
  std::size_t coincident_pairs = 0;
};

/// Mean over ordered pairs i != j of |d_G(i,j) / d(x_i, x_j) - 1|, divided by N(N-1).
/// Throws std::invalid_argument when the graph is disconnected.
DistortionResult distortion(const Eigen::MatrixXd& embeddings, const Graph& g, double curvature);

struct MetricsReport {
  std::optional<double> nmi;
  std::optional<double> ari;
  std::optional<double> auc;
  std::optional<double> distortion;
  std::optional<double> conductance;
  std::optional<double> tau;
  std::optional<double> structural_information;
  std::size_t k_natural = 0;
  std::optional<std::size_t> k;
};

nlohmann::json to_json(const MetricsReport& r);

}  // namespace hypertropy
