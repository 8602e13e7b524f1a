#pragma once

// The hyperbolic network that produces a soft assignment stack from a graph.
// Point batches are row matrices, one Lorentz point per row, time coordinate first.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "hypertropy/assignment.hpp"
#include "hypertropy/autodiff.hpp"
#include "hypertropy/graph.hpp"

namespace hypertropy {

inline constexpr double kLeakySlope = 0.1;

struct ModelConfig {
  int height = 2;
  /// Node counts per height from the leaves up: widths[0] = N, widths.back() = 1.
  /// Empty means the default schedule.
  std::vector<int> widths;
  int embed_dim = 2;
  int hidden_dim = 64;
  double curvature = -1.0;
  std::uint64_t seed = 0;

  /// Widths for a graph of `n` nodes: the configured list (validated), or
  /// N, ceil(N/4), ceil(N/16), ... truncated to `height` and ending at 1.
  std::vector<int> resolve_widths(std::size_t n) const;
  void validate() const;
};

nlohmann::json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// Named parameter tensors in a fixed layout:
///   encoder: enc.{q,k,v}.{W,b}
///   per height h with N_{h-1} > 1: lvl{h}.{q,k}.{W,b}, lvl{h}.mlp{0,1,2}.{W,b}
struct ModelParams {
  std::vector<std::string> names;
  std::vector<Eigen::MatrixXd> tensors;

  std::size_t size() const { return tensors.size(); }
  std::size_t index(const std::string& name) const;
  std::size_t num_scalars() const;
  bool all_finite() const;
};

/// Xavier-uniform weights and zero biases, drawn from a seeded 64-bit Mersenne twister.
ModelParams init_params(const ModelConfig& config, std::size_t num_nodes, Eigen::Index feature_dim);

/// Lorentz points of the input features: identity one-hot rows when the graph
/// carries none, each row L2-normalized and mapped from the origin's tangent space.
Eigen::MatrixXd lifted_features(const Graph& g, double curvature);

// ---------------------------------------------------------------------------
// Layers, recorded on a tape.
// ---------------------------------------------------------------------------

/// Spatial part leaky_relu(x W + b); time recomputed as sqrt(|spatial|^2 - 1/k).
/// W is (d_in + 1) x d_out, b is 1 x d_out.
ad::Var llinear(const ad::Var& x, const ad::Var& w, const ad::Var& b, double curvature);

/// Pairwise squared Lorentzian distance 2/k - 2<q_i, k_j>_L.
ad::Var sq_lorentz_dist_matrix(const ad::Var& q, const ad::Var& k, double curvature);

/// Row softmax of -d^2(q_i, k_j) / sqrt(N) restricted to entries where mask > 0.
/// A row with an empty mask puts all weight on its own index.
ad::Var latt(const ad::Var& q, const ad::Var& k, const Eigen::MatrixXd& mask, double curvature);

/// Row i is the Lorentz centroid of the rows of x weighted by weights(i, :).
ad::Var lagg(const ad::Var& weights, const ad::Var& x, double curvature);

/// Encoder producing the leaf embeddings Z^H.
ad::Var lconv(const ad::Var& features, const Graph& g, std::span<const ad::Var> params,
              const ModelParams& layout, double curvature);

/// Soft assignment of the N_h nodes at height h to N_{h-1} parents.
/// `adjacency` is A^h (dense, N_h x N_h).
ad::Var assigner(const ad::Var& z, const ad::Var& adjacency, int height, int parent_width,
                 std::span<const ad::Var> params, const ModelParams& layout, double curvature);

/// Parent j = centroid of the children weighted by column j of C.
ad::Var parent_embeddings(const ad::Var& c, const ad::Var& z, double curvature);

/// A^{h-1} = C^T A^h C.
ad::Var coarsen(const ad::Var& c, const ad::Var& adjacency);

struct ForwardResult {
  /// levels[h-1] = C^h, h = 1..H.
  std::vector<ad::Var> levels;
  /// embeddings[h] = Z^h, h = 0..H (Z^0 is the root).
  std::vector<ad::Var> embeddings;
};

/// Bottom-up pass: Z^H from the encoder, then for h = H..1 the assignment C^h,
/// the parent embeddings Z^{h-1} and the coarsened graph A^{h-1}.
ForwardResult forward(ad::Tape& tape, const Graph& g, const Eigen::MatrixXd& features,
                      const ModelConfig& config, std::span<const ad::Var> params,
                      const ModelParams& layout);

/// Same pass starting from given leaf embeddings (the free-embedding mode).
ForwardResult forward_from_leaves(ad::Tape& tape, const Graph& g, const ad::Var& leaves,
                                  const ModelConfig& config, std::span<const ad::Var> params,
                                  const ModelParams& layout);

/// Value-only snapshot of a forward pass.
struct ForwardValues {
  AssignmentStack stack = AssignmentStack::flat(1);
  std::vector<Eigen::MatrixXd> embeddings;
  double loss = 0.0;
};

ForwardValues evaluate(const Graph& g, const Eigen::MatrixXd& features, const ModelConfig& config,
                       const ModelParams& params);
/// Value-only pass from fixed leaf embeddings.
ForwardValues evaluate_from_leaves(const Graph& g, const Eigen::MatrixXd& leaves,
                                   const ModelConfig& config, const ModelParams& params);

}  // namespace hypertropy
