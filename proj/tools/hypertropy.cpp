// hypertropy: hierarchical graph clustering by structural information
// minimization in hyperbolic space.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hypertropy/entropy.hpp"
#include "hypertropy/graph.hpp"
#include "hypertropy/metrics.hpp"
#include "hypertropy/partition_tree.hpp"
#include "hypertropy/pipeline.hpp"
#include "hypertropy/trainer.hpp"
#include "hypertropy/viz.hpp"

namespace fs = std::filesystem;
using namespace hypertropy;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kMissingFile = 2, kSizeCap = 3, kCheckpoint = 4, kViz = 5 };

struct GraphFlags {
  std::string edges;
  std::string features;
  std::string labels;
  std::string config;
  std::string out = "out";
};

struct ModelFlags {
  int height = 2;
  std::vector<int> widths;
  double curvature = -1.0;
  int embed_dim = 2;
  int hidden_dim = 64;
  int epochs = 500;
  double lr = 0.003;
  int pretrain_epochs = 0;
  std::uint64_t seed = 0;
  int seeds = 1;
  std::size_t k = 0;
  unsigned threads = 0;
};

void add_graph_flags(CLI::App* app, GraphFlags& f, bool with_config = false) {
  auto* e = app->add_option("--edges", f.edges, "Edge list (TSV: u v [w])");
  if (!with_config) e->required();
  app->add_option("--features", f.features, "Node features (TSV: node f1 ... fd)");
  app->add_option("--labels", f.labels, "Ground-truth classes (TSV: node class)");
  if (with_config) app->add_option("--config", f.config, "JSON run configuration; flags take precedence");
  app->add_option("--out", f.out, "Output directory")->capture_default_str();
}

void add_model_flags(CLI::App* app, ModelFlags& f) {
  app->add_option("--height", f.height, "Tree height H")->capture_default_str();
  app->add_option("--widths", f.widths, "Level widths from leaves to root, e.g. 34 4 1");
  app->add_option("--curvature", f.curvature, "Curvature (negative)")->capture_default_str();
  app->add_option("--embed-dim", f.embed_dim, "Embedding dimension")->capture_default_str();
  app->add_option("--hidden-dim", f.hidden_dim, "Assigner MLP width")->capture_default_str();
  app->add_option("--epochs", f.epochs, "Training epochs")->capture_default_str();
  app->add_option("--lr", f.lr, "Learning rate")->capture_default_str();
  app->add_option("--pretrain-epochs", f.pretrain_epochs, "Link-prediction pretraining epochs");
  app->add_option("--seed", f.seed, "First seed")->capture_default_str();
  app->add_option("--seeds", f.seeds, "Number of seeds (seed, seed+1, ...)")->capture_default_str();
  app->add_option("--k", f.k, "Number of clusters to extract");
  app->add_option("--threads", f.threads, "Worker threads (also capped by HYPERTROPY_THREADS)");
}

std::optional<std::string> opt_path(const std::string& s) {
  return s.empty() ? std::nullopt : std::optional<std::string>(s);
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFoundError(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::invalid_argument(path + ": invalid JSON: " + e.what());
  }
}

/// Defaults, then the config file, then explicitly given flags.
void apply_config(const CLI::App* app, GraphFlags& g, ModelFlags& m) {
  if (g.config.empty()) return;
  const json c = read_json_file(g.config);
  auto take = [&](const char* key, const char* flag, auto& target) {
    if (c.contains(key) && app->count(flag) == 0) c.at(key).get_to(target);
  };
  take("edges", "--edges", g.edges);
  take("features", "--features", g.features);
  take("labels", "--labels", g.labels);
  take("out", "--out", g.out);
  take("seed", "--seed", m.seed);
  take("seeds", "--seeds", m.seeds);
  take("k", "--k", m.k);
  take("threads", "--threads", m.threads);
  const json model = c.value("model", json::object());
  const json train = c.value("train", json::object());
  auto take_in = [&](const json& obj, const char* key, const char* flag, auto& target) {
    if (obj.contains(key) && app->count(flag) == 0) obj.at(key).get_to(target);
  };
  for (const json* obj : {&c, &model}) {
    take_in(*obj, "height", "--height", m.height);
    take_in(*obj, "widths", "--widths", m.widths);
    take_in(*obj, "curvature", "--curvature", m.curvature);
    take_in(*obj, "embed_dim", "--embed-dim", m.embed_dim);
    take_in(*obj, "hidden_dim", "--hidden-dim", m.hidden_dim);
  }
  for (const json* obj : {&c, &train}) {
    take_in(*obj, "epochs", "--epochs", m.epochs);
    take_in(*obj, "lr", "--lr", m.lr);
    take_in(*obj, "pretrain_epochs", "--pretrain-epochs", m.pretrain_epochs);
  }
}

Graph load(const GraphFlags& f) {
  return load_graph(f.edges, opt_path(f.features), opt_path(f.labels));
}

void print_json_summary(const json& j) { std::cout << j.dump(2) << '\n'; }

int cmd_cluster(const CLI::App* app, GraphFlags gf, ModelFlags mf) {
  apply_config(app, gf, mf);
  if (gf.edges.empty()) throw std::invalid_argument("--edges is required (flag or config file)");
  if (mf.seeds < 1) throw std::invalid_argument("--seeds must be at least 1");
  const Graph g = load(gf);

  ModelConfig model;
  model.height = mf.height;
  model.widths = mf.widths;
  model.curvature = mf.curvature;
  model.embed_dim = mf.embed_dim;
  model.hidden_dim = mf.hidden_dim;
  model.seed = mf.seed;
  model.validate();
  TrainConfig train;
  train.epochs = mf.epochs;
  train.lr = mf.lr;
  train.pretrain_epochs = mf.pretrain_epochs;
  train.validate();
  const std::optional<std::size_t> k = mf.k > 0 ? std::optional<std::size_t>(mf.k) : std::nullopt;

  std::vector<std::uint64_t> seeds;
  for (int s = 0; s < mf.seeds; ++s) seeds.push_back(mf.seed + static_cast<std::uint64_t>(s));
  const unsigned threads = worker_threads(mf.threads);
  const std::vector<RunOutcome> runs = cluster(g, model, train, seeds, k, threads);
  const Summary summary = summarize(runs);
  const RunOutcome& best = runs[summary.best_by_loss];

  fs::create_directories(gf.out);
  const fs::path out(gf.out);
  const json report = cluster_report(runs, summary);
  write_text((out / "metrics.json").string(), report.dump(2) + "\n");
  write_text((out / "labels.tsv").string(), labels_tsv(g, best.labels));
  write_text((out / "tree.json").string(), tree_to_json(best.tree).dump(2) + "\n");
  write_text((out / "loss_history.csv").string(), loss_history_csv(best.training.loss_history));

  Checkpoint ckpt;
  ckpt.model = widths_for_k(model, g.num_nodes(), k);
  ckpt.model.seed = best.seed;
  ckpt.train = train;
  ckpt.graph_fingerprint = g.fingerprint();
  ckpt.params = best.training.params;
  ckpt.leaves = best.training.leaves;
  ckpt.k = k;
  save_checkpoint((out / "checkpoint.json").string(), ckpt);

  json config{{"edges", gf.edges},
              {"out", gf.out},
              {"seed", mf.seed},
              {"seeds", mf.seeds},
              {"model", to_json(widths_for_k(model, g.num_nodes(), k))},
              {"train", to_json(train)}};
  if (!gf.features.empty()) config["features"] = gf.features;
  if (!gf.labels.empty()) config["labels"] = gf.labels;
  if (k) config["k"] = *k;
  write_text((out / "config.json").string(), config.dump(2) + "\n");

  std::printf("seeds: %zu  best-by-loss seed %llu  loss %.6f  k_natural %zu\n", runs.size(),
              static_cast<unsigned long long>(best.seed), best.training.best_loss, best.metrics.k_natural);
  if (best.metrics.nmi)
    std::printf("best-by-loss NMI %.4f  ARI %.4f\n", *best.metrics.nmi, *best.metrics.ari);
  if (summary.best_by_nmi) {
    const RunOutcome& b = runs[*summary.best_by_nmi];
    std::printf("best NMI %.4f (seed %llu)  mean NMI %.4f +- %.4f  mean ARI %.4f +- %.4f\n", *b.metrics.nmi,
                static_cast<unsigned long long>(b.seed), *summary.nmi_mean, *summary.nmi_std,
                *summary.ari_mean, *summary.ari_std);
  }
  std::printf("outputs written to %s\n", gf.out.c_str());
  return kOk;
}

int cmd_entropy(const GraphFlags& gf, int height, bool brute, bool cse) {
  const Graph g = load(gf);
  json j;
  const double h1 = one_dim_entropy(g);
  j["h1"] = h1;
  std::printf("H1 = %.6f\n", h1);
  int code = kOk;
  if (brute) {
    const NormalizedEntropy ne = normalized_entropy(g, height);
    j["h2"] = ne.entropy;
    j["tau"] = ne.tau;
    j["conductance"] = ne.conductance;
    j["bound_holds"] = ne.bound_holds;
    std::printf("H%d = %.6f\ntau = %.6f\nPhi = %.6f\nbound tau >= Phi: %s\n", height, ne.entropy, ne.tau,
                ne.conductance, ne.bound_holds ? "holds" : "VIOLATED");
    if (!ne.bound_holds) code = kFailure;
  }
  if (cse) {
    const GreedyResult gr = cse_greedy(g);
    j["cse"] = {{"value", gr.value}, {"partition", gr.partition}, {"trajectory", gr.trajectory}};
    std::printf("CSE greedy = %.6f (%zu modules)\n", gr.value, gr.tree.node(gr.tree.root()).children.size());
  }
  if (!gf.out.empty()) {
    fs::create_directories(gf.out);
    write_text((fs::path(gf.out) / "entropy.json").string(), j.dump(2) + "\n");
  }
  return code;
}

int cmd_eval(const GraphFlags& gf, const std::string& checkpoint_path, std::size_t k_flag, bool require_auc,
             double auc_fraction, std::uint64_t auc_seed) {
  if (!fs::exists(checkpoint_path)) throw FileNotFoundError(checkpoint_path);
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  const Graph g = load(gf);
  if (ckpt.graph_fingerprint != g.fingerprint())
    throw CheckpointError("checkpoint was trained on a different graph (fingerprint mismatch)");

  std::optional<std::size_t> k = ckpt.k;
  if (k_flag > 0) k = k_flag;
  TrainResult tr;
  tr.params = ckpt.params;
  tr.leaves = ckpt.leaves;
  tr.best = ckpt.leaves ? evaluate_from_leaves(g, *ckpt.leaves, ckpt.model, ckpt.params)
                        : evaluate(g, lifted_features(g, ckpt.model.curvature), ckpt.model, ckpt.params);
  tr.best_loss = tr.best.loss;
  RunOutcome r = finish_run(g, ckpt.model, std::move(tr), k);

  const Eigen::MatrixXd& leaves = r.training.best.embeddings.back();
  try {
    r.metrics.auc = auc_link(leaves, g, ckpt.model.curvature, auc_fraction, auc_seed);
  } catch (const std::invalid_argument& e) {
    if (require_auc) throw;
    std::fprintf(stderr, "warning: AUC skipped: %s\n", e.what());
  }
  if (g.is_connected()) {
    const DistortionResult d = distortion(leaves, g, ckpt.model.curvature);
    r.metrics.distortion = d.value;
    if (d.coincident_pairs > 0)
      std::fprintf(stderr, "warning: %zu coincident embedded pairs (penalty %.0g each)\n", d.coincident_pairs,
                   kCoincidentPenalty);
  } else {
    std::fprintf(stderr, "warning: distortion skipped: graph is disconnected\n");
  }
  json j = to_json(r.metrics);
  j["loss"] = r.training.best_loss;
  fs::create_directories(gf.out);
  write_text((fs::path(gf.out) / "metrics.json").string(), j.dump(2) + "\n");
  write_text((fs::path(gf.out) / "labels.tsv").string(), labels_tsv(g, r.labels));
  print_json_summary(j);
  return kOk;
}

int cmd_viz(const std::string& tree_path, const std::string& out_dir, const std::string& svg_name) {
  if (!fs::exists(tree_path)) throw FileNotFoundError(tree_path);
  json tree;
  {
    std::ifstream in(tree_path);
    try {
      tree = json::parse(in);
    } catch (const json::exception&) {
      throw VizError("tree file is empty or not valid JSON: " + tree_path);
    }
  }
  const std::string svg = render_svg(tree);
  fs::create_directories(out_dir);
  const fs::path path = fs::path(out_dir) / svg_name;
  write_text(path.string(), svg);
  std::printf("wrote %s\n", path.string().c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical graph clustering by structural information minimization in hyperbolic space"};
  app.require_subcommand(1);

  GraphFlags cluster_g;
  ModelFlags cluster_m;
  auto* cluster_cmd = app.add_subcommand("cluster", "Train, decode the partitioning tree and label nodes");
  add_graph_flags(cluster_cmd, cluster_g, /*with_config=*/true);
  add_model_flags(cluster_cmd, cluster_m);

  GraphFlags entropy_g;
  entropy_g.out.clear();
  int entropy_height = 2;
  bool brute = false, cse = false;
  auto* entropy_cmd = app.add_subcommand("entropy", "Structural information of a graph");
  add_graph_flags(entropy_cmd, entropy_g);
  entropy_cmd->add_option("--height", entropy_height, "Tree height for --brute")->capture_default_str();
  entropy_cmd->add_flag("--brute", brute, "Exhaustive H^2, tau and conductance (N <= 7)");
  entropy_cmd->add_flag("--cse", cse, "Greedy two-level baseline");

  GraphFlags eval_g;
  std::string checkpoint;
  std::size_t eval_k = 0;
  bool want_auc = false;
  double auc_fraction = 0.1;
  std::uint64_t auc_seed = 0;
  auto* eval_cmd = app.add_subcommand("eval", "Score a stored checkpoint");
  add_graph_flags(eval_cmd, eval_g);
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint.json written by cluster")->required();
  eval_cmd->add_option("--k", eval_k, "Number of clusters (defaults to the one stored)");
  eval_cmd->add_flag("--auc", want_auc, "Fail instead of warning when AUC cannot be computed");
  eval_cmd->add_option("--auc-fraction", auc_fraction, "Held-out edge fraction")->capture_default_str();
  eval_cmd->add_option("--auc-seed", auc_seed, "Seed of the held-out split")->capture_default_str();

  std::string tree_path, viz_out = "out", svg_name = "tree.svg";
  auto* viz_cmd = app.add_subcommand("viz", "Draw a tree.json on the Poincare disc as SVG");
  viz_cmd->add_option("--tree", tree_path, "tree.json written by cluster")->required();
  viz_cmd->add_option("--out", viz_out, "Output directory")->capture_default_str();
  viz_cmd->add_option("--name", svg_name, "SVG file name")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cluster_cmd) return cmd_cluster(cluster_cmd, cluster_g, cluster_m);
    if (*entropy_cmd) return cmd_entropy(entropy_g, entropy_height, brute, cse);
    if (*eval_cmd) return cmd_eval(eval_g, checkpoint, eval_k, want_auc, auc_fraction, auc_seed);
    if (*viz_cmd) return cmd_viz(tree_path, viz_out, svg_name);
  } catch (const FileNotFoundError& e) {
    std::fprintf(stderr, "error: file not found: %s\n", e.path().c_str());
    return kMissingFile;
  } catch (const SizeCapError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kSizeCap;
  } catch (const CheckpointError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kCheckpoint;
  } catch (const VizError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kViz;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kFailure;
}
