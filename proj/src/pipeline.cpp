#include "hypertropy/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "hypertropy/entropy.hpp"

namespace hypertropy {

namespace {

inline constexpr std::size_t kConductanceCap = 16;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

}  // namespace

ModelConfig widths_for_k(const ModelConfig& model, std::size_t num_nodes, std::optional<std::size_t> k) {
  ModelConfig out = model;
  if (!k || !model.widths.empty() || model.height < 2) return out;
  out.widths = model.resolve_widths(num_nodes);
  out.widths[static_cast<std::size_t>(model.height - 1)] = static_cast<int>(*k);
  return out;
}

RunOutcome finish_run(const Graph& g, const ModelConfig& model, TrainResult training,
                      std::optional<std::size_t> k) {
  RunOutcome r;
  r.seed = model.seed;
  const AssignmentStack hard = harden(training.best.stack);
  r.tree = repair(decode(hard, training.best.embeddings, g, model.curvature));
  r.natural = natural_clusters(r.tree);
  r.labels = k ? extract_k(r.tree, *k) : r.natural;

  MetricsReport& m = r.metrics;
  m.k_natural = natural_cluster_count(r.tree);
  m.k = k;
  m.structural_information = nodewise_structural_information(g, r.tree);
  if (g.labels()) {
    m.nmi = nmi(r.labels, *g.labels());
    m.ari = ari(r.labels, *g.labels());
  }
  if (g.num_nodes() <= kConductanceCap && g.is_connected()) {
    m.conductance = graph_conductance(g, kConductanceCap);
    m.tau = *m.structural_information / one_dim_entropy(g);
  }
  r.training = std::move(training);
  return r;
}

Summary summarize(const std::vector<RunOutcome>& runs) {
  if (runs.empty()) throw std::invalid_argument("no runs to summarize");
  Summary s;
  std::vector<double> nmis, aris;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (runs[i].training.best_loss < runs[s.best_by_loss].training.best_loss) s.best_by_loss = i;
    if (runs[i].metrics.nmi) {
      nmis.push_back(*runs[i].metrics.nmi);
      aris.push_back(*runs[i].metrics.ari);
      if (!s.best_by_nmi || *runs[i].metrics.nmi > *runs[*s.best_by_nmi].metrics.nmi) s.best_by_nmi = i;
    }
  }
  if (!nmis.empty()) {
    std::tie(s.nmi_mean, s.nmi_std) = mean_std(nmis);
    std::tie(s.ari_mean, s.ari_std) = mean_std(aris);
  }
  return s;
}

std::vector<RunOutcome> cluster(const Graph& g, const ModelConfig& model, const TrainConfig& train,
                                const std::vector<std::uint64_t>& seeds, std::optional<std::size_t> k,
                                unsigned threads) {
  if (seeds.empty()) throw std::invalid_argument("at least one seed is required");
  if (k && (*k < 1 || *k > g.num_nodes())) throw std::invalid_argument("k must lie in [1, N]");
  const ModelConfig m = widths_for_k(model, g.num_nodes(), k);
  std::vector<TrainResult> results = train_seeds(g, m, train, seeds, threads);
  std::vector<RunOutcome> runs;
  for (std::size_t i = 0; i < results.size(); ++i) {
    ModelConfig mi = m;
    mi.seed = seeds[i];
    runs.push_back(finish_run(g, mi, std::move(results[i]), k));
  }
  return runs;
}

nlohmann::json cluster_report(const std::vector<RunOutcome>& runs, const Summary& s) {
  const RunOutcome& best = runs[s.best_by_loss];
  nlohmann::json j = to_json(best.metrics);
  j["seed"] = best.seed;
  j["loss"] = best.training.best_loss;
  nlohmann::json per_seed = nlohmann::json::array();
  for (const auto& r : runs) {
    nlohmann::json e = to_json(r.metrics);
    e["seed"] = r.seed;
    e["loss"] = r.training.best_loss;
    e["best_epoch"] = r.training.best_epoch;
    per_seed.push_back(std::move(e));
  }
  j["runs"] = per_seed;
  j["best_by_loss"] = {{"seed", best.seed}, {"loss", best.training.best_loss}};
  if (best.metrics.nmi) j["best_by_loss"]["nmi"] = *best.metrics.nmi;
  if (best.metrics.ari) j["best_by_loss"]["ari"] = *best.metrics.ari;
  if (s.best_by_nmi) {
    const RunOutcome& b = runs[*s.best_by_nmi];
    j["best_nmi"] = {{"seed", b.seed}, {"nmi", *b.metrics.nmi}, {"ari", *b.metrics.ari}};
    j["nmi_mean"] = *s.nmi_mean;
    j["nmi_std"] = *s.nmi_std;
    j["ari_mean"] = *s.ari_mean;
    j["ari_std"] = *s.ari_std;
  }
  return j;
}

std::string labels_tsv(const Graph& g, const Labeling& labels) {
  if (labels.size() != g.num_nodes()) throw std::invalid_argument("one label per node required");
  std::ostringstream out;
  const auto& names = g.node_names();
  for (std::size_t i = 0; i < labels.size(); ++i)
    out << (i < names.size() ? names[i] : std::to_string(i)) << '\t' << labels[i] << '\n';
  return out.str();
}

std::string loss_history_csv(const std::vector<double>& history) {
  std::string out = "epoch,loss\n";
  for (std::size_t e = 0; e < history.size(); ++e)
    out += std::to_string(e) + ',' + format_double(history[e]) + '\n';
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace hypertropy
