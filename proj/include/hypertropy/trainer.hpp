#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "hypertropy/autodiff.hpp"
#include "hypertropy/graph.hpp"
#include "hypertropy/layers.hpp"

namespace hypertropy {

struct TrainConfig {
  int epochs = 500;
  double lr = 0.003;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Link-prediction epochs run on the encoder before the main loop.
  int pretrain_epochs = 0;
  double link_margin = 2.0;
  double link_temperature = 1.0;
  /// Positive edges drawn per epoch for the link loss; 0 uses every edge.
  int link_samples = 0;
  /// Weight of the link loss added to the objective during the main loop.
  double link_weight = 0.0;
  /// Optimize the leaf embeddings directly (Riemannian Adam) instead of the encoder.
  bool free_embeddings = false;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

/// Raised when a gradient becomes NaN or the loss stops being finite. Carries the
/// best parameters seen before the failure.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, int epoch, ModelParams last_good)
      : std::runtime_error(what), epoch_(epoch), last_good_(std::move(last_good)) {}
  int epoch() const { return epoch_; }
  const ModelParams& last_good() const { return last_good_; }

 private:
  int epoch_;
  ModelParams last_good_;
};

struct AdamState {
  std::vector<Eigen::MatrixXd> m;
  std::vector<Eigen::MatrixXd> v;
  long step = 0;
};

/// One bias-corrected Adam update. Throws std::domain_error on a non-finite gradient.
void adam_step(std::vector<Eigen::MatrixXd>& params, const std::vector<Eigen::MatrixXd>& grads,
               AdamState& state, const TrainConfig& config);

/// Adam on the hyperboloid: Euclidean gradients are turned into Riemannian ones
/// (time sign flip, tangent projection), moments live in the tangent space and are
/// re-projected after each exponential-map retraction. One point per row.
class RiemannianAdam {
 public:
  RiemannianAdam(double curvature, const TrainConfig& config) : k_(curvature), config_(config) {}
  void step(Eigen::MatrixXd& points, const Eigen::MatrixXd& euclidean_grad);

 private:
  double k_;
  TrainConfig config_;
  Eigen::MatrixXd m_;
  Eigen::VectorXd v_;
  long t_ = 0;
};

/// sigmoid((s - d) / tau).
double link_probability(double distance, double margin, double temperature);

/// Binary cross-entropy of the edge model on `positives` and `negatives`
/// (node pairs), using geodesic distances between rows of z.
ad::Var link_loss(const ad::Var& z, const std::vector<std::pair<NodeId, NodeId>>& positives,
                  const std::vector<std::pair<NodeId, NodeId>>& negatives, double curvature,
                  double margin, double temperature);

/// Draws positive edges (all of them when samples == 0) and the same number of
/// uniform non-edges. Returns false when the graph has no non-edge.
bool sample_link_pairs(const Graph& g, int samples, std::mt19937_64& rng,
                       std::vector<std::pair<NodeId, NodeId>>& positives,
                       std::vector<std::pair<NodeId, NodeId>>& negatives);

/// Link loss on freshly sampled pairs, recorded on z's tape.
ad::Var pretrain_link_loss(const ad::Var& z, const Graph& g, double curvature, double margin,
                           double temperature, int samples, std::mt19937_64& rng);

struct TrainResult {
  ModelParams params;  // best-loss parameters
  /// Leaf embeddings in free-embedding mode (best-loss snapshot).
  std::optional<Eigen::MatrixXd> leaves;
  std::vector<double> loss_history;
  std::vector<double> pretrain_history;
  double best_loss = 0.0;
  int best_epoch = -1;
  /// Forward pass at the best parameters.
  ForwardValues best;
};

/// Algorithm: encode, assign level by level, evaluate the level-wise objective,
/// backpropagate, Adam step. Deterministic for a fixed seed.
TrainResult train(const Graph& g, const ModelConfig& model, const TrainConfig& config);

/// Trains one model per seed on up to `threads` workers; results are in seed order.
std::vector<TrainResult> train_seeds(const Graph& g, const ModelConfig& model,
                                     const TrainConfig& config, const std::vector<std::uint64_t>& seeds,
                                     unsigned threads);

/// Worker count from HYPERTROPY_THREADS (capped by the hardware), at least 1.
unsigned worker_threads(unsigned requested = 0);

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  ModelConfig model;
  TrainConfig train;
  std::uint64_t graph_fingerprint = 0;
  ModelParams params;
  std::optional<Eigen::MatrixXd> leaves;
  /// Cluster count used when the run was labeled, if any.
  std::optional<std::size_t> k;
};

inline constexpr int kCheckpointVersion = 1;

nlohmann::json checkpoint_to_json(const Checkpoint& c);
/// Throws CheckpointError on a malformed document or checksum mismatch.
Checkpoint checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const std::string& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::string& path);

/// FNV-1a over bytes.
std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed = 14695981039346656037ULL);

}  // namespace hypertropy
