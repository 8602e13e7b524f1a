#pragma once

// End-to-end clustering runs shared by the command-line tool and the bindings.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hypertropy/graph.hpp"
#include "hypertropy/layers.hpp"
#include "hypertropy/metrics.hpp"
#include "hypertropy/partition_tree.hpp"
#include "hypertropy/trainer.hpp"

namespace hypertropy {

/// Model config with the level under the root widened/narrowed to k when k is
/// set and no explicit widths were given.
ModelConfig widths_for_k(const ModelConfig& model, std::size_t num_nodes, std::optional<std::size_t> k);

struct RunOutcome {
  std::uint64_t seed = 0;
  TrainResult training;
  PartitionTree tree;
  Labeling natural;
  /// extract_k labels when k is set, otherwise the natural clusters.
  Labeling labels;
  MetricsReport metrics;
};

/// Hardens, decodes and repairs the best-loss forward pass, then labels and scores it.
RunOutcome finish_run(const Graph& g, const ModelConfig& model, TrainResult training,
                      std::optional<std::size_t> k);

struct Summary {
  std::size_t best_by_loss = 0;
  std::optional<std::size_t> best_by_nmi;
  std::optional<double> nmi_mean, nmi_std, ari_mean, ari_std;
};

Summary summarize(const std::vector<RunOutcome>& runs);

/// Trains every seed (fanned out over `threads` workers) and finishes each run.
std::vector<RunOutcome> cluster(const Graph& g, const ModelConfig& model, const TrainConfig& train,
                                const std::vector<std::uint64_t>& seeds, std::optional<std::size_t> k,
                                unsigned threads);

/// metrics.json document: the best-by-loss run's metrics at top level, plus
/// per-seed entries, best NMI and mean/std.
nlohmann::json cluster_report(const std::vector<RunOutcome>& runs, const Summary& s);

/// "node<TAB>cluster" lines using the graph's original node names.
std::string labels_tsv(const Graph& g, const Labeling& labels);
/// "epoch,loss" lines with round-trip precision.
std::string loss_history_csv(const std::vector<double>& history);

/// Writes text to a file, throwing std::runtime_error on failure.
void write_text(const std::string& path, const std::string& text);

}  // namespace hypertropy
