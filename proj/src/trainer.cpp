#include "hypertropy/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "hypertropy/entropy.hpp"
#include "hypertropy/lorentz.hpp"

namespace hypertropy {

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be positive");
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (pretrain_epochs < 0) throw std::invalid_argument("pretrain epochs must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
    throw std::invalid_argument("Adam betas must lie in [0, 1)");
  if (!(link_temperature > 0.0)) throw std::invalid_argument("link temperature must be positive");
  if (link_samples < 0) throw std::invalid_argument("link samples must be non-negative");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"lr", c.lr},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"eps", c.eps},
          {"pretrain_epochs", c.pretrain_epochs},
          {"link_margin", c.link_margin},
          {"link_temperature", c.link_temperature},
          {"link_samples", c.link_samples},
          {"link_weight", c.link_weight},
          {"free_embeddings", c.free_embeddings}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.lr = j.value("lr", c.lr);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.eps = j.value("eps", c.eps);
  c.pretrain_epochs = j.value("pretrain_epochs", c.pretrain_epochs);
  c.link_margin = j.value("link_margin", c.link_margin);
  c.link_temperature = j.value("link_temperature", c.link_temperature);
  c.link_samples = j.value("link_samples", c.link_samples);
  c.link_weight = j.value("link_weight", c.link_weight);
  c.free_embeddings = j.value("free_embeddings", c.free_embeddings);
  c.validate();
  return c;
}

void adam_step(std::vector<Eigen::MatrixXd>& params, const std::vector<Eigen::MatrixXd>& grads,
               AdamState& state, const TrainConfig& config) {
  if (grads.size() != params.size()) throw std::invalid_argument("adam_step: one gradient per parameter");
  for (std::size_t i = 0; i < grads.size(); ++i)
    if (grads[i].size() != 0 && !grads[i].allFinite())
      throw std::domain_error("adam_step: non-finite gradient for parameter " + std::to_string(i));
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
      state.v.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
    }
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].size() == 0) continue;
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * grads[i];
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * grads[i].cwiseAbs2();
    params[i].array() -= config.lr * (state.m[i].array() / c1) /
                         ((state.v[i].array() / c2).sqrt() + config.eps);
  }
}

void RiemannianAdam::step(Eigen::MatrixXd& points, const Eigen::MatrixXd& euclidean_grad) {
  if (euclidean_grad.size() == 0) return;
  if (!euclidean_grad.allFinite()) throw std::domain_error("RiemannianAdam: non-finite gradient");
  const Eigen::Index n = points.rows();
  if (m_.size() == 0) {
    m_ = Eigen::MatrixXd::Zero(n, points.cols());
    v_ = Eigen::VectorXd::Zero(n);
  }
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (Eigen::Index i = 0; i < n; ++i) {
    LorentzPoint x(points.row(i).transpose(), k_);
    Eigen::VectorXd h = euclidean_grad.row(i).transpose();
    h[0] = -h[0];
    const Eigen::VectorXd rg = project_tangent(x, h).coords();
    m_.row(i) = config_.beta1 * m_.row(i) + (1.0 - config_.beta1) * rg.transpose();
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * std::max(0.0, inner_l(rg, rg));
    const Eigen::VectorXd dir =
        -config_.lr * (m_.row(i).transpose() / c1) / (std::sqrt(v_[i] / c2) + config_.eps);
    LorentzPoint y = exp_map(project_tangent(x, dir));
    points.row(i) = y.coords().transpose();
    m_.row(i) = project_tangent(y, m_.row(i).transpose()).coords().transpose();
  }
}

double link_probability(double distance, double margin, double temperature) {
  return 1.0 / (1.0 + std::exp(-(margin - distance) / temperature));
}

ad::Var link_loss(const ad::Var& z, const std::vector<std::pair<NodeId, NodeId>>& positives,
                  const std::vector<std::pair<NodeId, NodeId>>& negatives, double curvature,
                  double margin, double temperature) {
  const Eigen::Index n = z.rows();
  Eigen::MatrixXd pos = Eigen::MatrixXd::Zero(n, n), neg = Eigen::MatrixXd::Zero(n, n);
  for (auto [u, v] : positives) pos(u, v) += 1.0;
  for (auto [u, v] : negatives) neg(u, v) += 1.0;
  const double count = static_cast<double>(positives.size() + negatives.size());
  if (count == 0.0) throw std::invalid_argument("link_loss: no pairs");
  ad::Tape& tape = *z.tape();
  ad::Var dist = ad::scale(ad::acosh(ad::scale(ad::minkowski(z, z), curvature)),
                           1.0 / std::sqrt(-curvature));
  ad::Var x = ad::scale(ad::add_scalar(ad::neg(dist), margin), 1.0 / temperature);
  ad::Var ll = ad::add(ad::sum(ad::mul(ad::log_sigmoid(x), tape.constant(pos))),
                       ad::sum(ad::mul(ad::log_sigmoid(ad::neg(x)), tape.constant(neg))));
  return ad::scale(ll, -1.0 / count);
}

bool sample_link_pairs(const Graph& g, int samples, std::mt19937_64& rng,
                       std::vector<std::pair<NodeId, NodeId>>& positives,
                       std::vector<std::pair<NodeId, NodeId>>& negatives) {
  const std::size_t n = g.num_nodes();
  if (g.num_edges() * 2 >= n * (n - 1)) return false;
  positives.clear();
  negatives.clear();
  const auto& edges = g.edges();
  if (samples == 0 || static_cast<std::size_t>(samples) >= edges.size()) {
    for (const Edge& e : edges) positives.emplace_back(e.u, e.v);
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, edges.size() - 1);
    for (int s = 0; s < samples; ++s) {
      const Edge& e = edges[pick(rng)];
      positives.emplace_back(e.u, e.v);
    }
  }
  std::uniform_int_distribution<NodeId> node(0, static_cast<NodeId>(n - 1));
  while (negatives.size() < positives.size()) {
    const NodeId u = node(rng), v = node(rng);
    if (u == v || g.has_edge(u, v)) continue;
    negatives.emplace_back(u, v);
  }
  return true;
}

ad::Var pretrain_link_loss(const ad::Var& z, const Graph& g, double curvature, double margin,
                           double temperature, int samples, std::mt19937_64& rng) {
  std::vector<std::pair<NodeId, NodeId>> pos, neg;
  if (!sample_link_pairs(g, samples, rng, pos, neg))
    throw std::invalid_argument("graph has no non-edges to sample");
  return link_loss(z, pos, neg, curvature, margin, temperature);
}

namespace {

std::vector<Eigen::MatrixXd> collect_grads(const std::vector<ad::Var>& vars) {
  std::vector<Eigen::MatrixXd> grads;
  grads.reserve(vars.size());
  for (const auto& v : vars) grads.push_back(v.grad());
  return grads;
}

}  // namespace

TrainResult train(const Graph& g, const ModelConfig& model, const TrainConfig& config) {
  config.validate();
  model.validate();
  const double k = model.curvature;
  const Eigen::MatrixXd features = lifted_features(g, k);
  ModelParams params = init_params(model, g.num_nodes(), features.cols() - 1);
  std::mt19937_64 rng(model.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::pair<NodeId, NodeId>> pos, neg;
  const bool can_sample = sample_link_pairs(g, config.link_samples, rng, pos, neg);

  TrainResult result;
  if (can_sample && config.pretrain_epochs > 0) {
    AdamState pre;
    for (int e = 0; e < config.pretrain_epochs; ++e) {
      ad::Tape tape;
      std::vector<ad::Var> vars;
      for (const auto& t : params.tensors) vars.push_back(tape.parameter(t));
      ad::Var z = lconv(tape.constant(features), g, vars, params, k);
      sample_link_pairs(g, config.link_samples, rng, pos, neg);
      ad::Var loss = link_loss(z, pos, neg, k, config.link_margin, config.link_temperature);
      result.pretrain_history.push_back(loss.scalar());
      try {
        tape.backward(loss);
        adam_step(params.tensors, collect_grads(vars), pre, config);
      } catch (const std::exception& ex) {
        throw TrainingDiverged(std::string("pretraining diverged: ") + ex.what(), e, params);
      }
    }
  }

  std::optional<Eigen::MatrixXd> leaves;
  std::optional<RiemannianAdam> radam;
  if (config.free_embeddings) {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (const auto& t : params.tensors) vars.push_back(tape.constant(t));
    leaves = lconv(tape.constant(features), g, vars, params, k).value();
    radam.emplace(k, config);
  }

  AdamState state;
  result.best_loss = std::numeric_limits<double>::infinity();
  result.params = params;
  result.leaves = leaves;
  result.loss_history.reserve(static_cast<std::size_t>(config.epochs));
  for (int e = 0; e < config.epochs; ++e) {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (const auto& t : params.tensors) vars.push_back(tape.parameter(t));
    ad::Var leaf = leaves ? tape.parameter(*leaves) : lconv(tape.constant(features), g, vars, params, k);
    ForwardResult fr = forward_from_leaves(tape, g, leaf, model, vars, params);
    ad::Var loss = dsi_loss(tape, g, fr.levels);
    if (config.link_weight > 0.0 && can_sample) {
      sample_link_pairs(g, config.link_samples, rng, pos, neg);
      loss = ad::add(loss, ad::scale(link_loss(leaf, pos, neg, k, config.link_margin,
                                               config.link_temperature),
                                     config.link_weight));
    }
    const double value = loss.scalar();
    if (!std::isfinite(value))
      throw TrainingDiverged("loss is not finite at epoch " + std::to_string(e), e, result.params);
    result.loss_history.push_back(value);
    if (value < result.best_loss) {
      result.best_loss = value;
      result.best_epoch = e;
      result.params = params;
      result.leaves = leaves;
    }
    try {
      tape.backward(loss);
      adam_step(params.tensors, collect_grads(vars), state, config);
      if (leaves) radam->step(*leaves, leaf.grad());
    } catch (const std::exception& ex) {
      throw TrainingDiverged(std::string("training diverged: ") + ex.what(), e, result.params);
    }
  }
  result.best = result.leaves ? evaluate_from_leaves(g, *result.leaves, model, result.params)
                              : evaluate(g, features, model, result.params);
  return result;
}

unsigned worker_threads(unsigned requested) {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  unsigned n = requested == 0 ? hw : requested;
  if (const char* env = std::getenv("HYPERTROPY_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap > 0) n = std::min(n, static_cast<unsigned>(cap));
  }
  return std::max(1u, n);
}

std::vector<TrainResult> train_seeds(const Graph& g, const ModelConfig& model,
                                     const TrainConfig& config, const std::vector<std::uint64_t>& seeds,
                                     unsigned threads) {
  std::vector<TrainResult> results(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      ModelConfig m = model;
      m.seed = seeds[i];
      try {
        results[i] = train(g, m, config);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n = std::min<unsigned>(std::max(1u, threads), static_cast<unsigned>(seeds.size()));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    seed ^= p[i];
    seed *= 1099511628211ULL;
  }
  return seed;
}

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  std::vector<double> data(m.data(), m.data() + m.size());
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size())
    throw CheckpointError("tensor shape does not match its data");
  return Eigen::Map<const Eigen::MatrixXd>(data.data(), rows, cols);
}

std::uint64_t checksum(const ModelParams& p, const std::optional<Eigen::MatrixXd>& leaves) {
  std::uint64_t h = 14695981039346656037ULL;
  for (std::size_t i = 0; i < p.size(); ++i) {
    h = fnv1a(p.names[i].data(), p.names[i].size(), h);
    h = fnv1a(p.tensors[i].data(), sizeof(double) * static_cast<std::size_t>(p.tensors[i].size()), h);
  }
  if (leaves) h = fnv1a(leaves->data(), sizeof(double) * static_cast<std::size_t>(leaves->size()), h);
  return h;
}

std::uint64_t config_hash(const nlohmann::json& model, const nlohmann::json& train) {
  const std::string s = model.dump() + train.dump();
  return fnv1a(s.data(), s.size());
}

}  // namespace

nlohmann::json checkpoint_to_json(const Checkpoint& c) {
  nlohmann::json tensors = nlohmann::json::array();
  for (std::size_t i = 0; i < c.params.size(); ++i) {
    nlohmann::json t = matrix_to_json(c.params.tensors[i]);
    t["name"] = c.params.names[i];
    tensors.push_back(std::move(t));
  }
  const nlohmann::json model = to_json(c.model), train = to_json(c.train);
  nlohmann::json j{{"format", "hypertropy-checkpoint"},
                   {"version", kCheckpointVersion},
                   {"model", model},
                   {"train", train},
                   {"config_hash", std::to_string(config_hash(model, train))},
                   {"graph_fingerprint", std::to_string(c.graph_fingerprint)},
                   {"tensors", tensors},
                   {"checksum", std::to_string(checksum(c.params, c.leaves))}};
  if (c.leaves) j["leaves"] = matrix_to_json(*c.leaves);
  if (c.k) j["k"] = *c.k;
  return j;
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "hypertropy-checkpoint")
      throw CheckpointError("not a checkpoint file");
    if (j.at("version").get<int>() != kCheckpointVersion)
      throw CheckpointError("unsupported checkpoint version " + j.at("version").dump());
    Checkpoint c;
    c.model = model_config_from_json(j.at("model"));
    c.train = train_config_from_json(j.at("train"));
    if (std::to_string(config_hash(j.at("model"), j.at("train"))) != j.at("config_hash").get<std::string>())
      throw CheckpointError("config hash mismatch");
    c.graph_fingerprint = std::stoull(j.at("graph_fingerprint").get<std::string>());
    for (const auto& t : j.at("tensors")) {
      c.params.names.push_back(t.at("name").get<std::string>());
      c.params.tensors.push_back(matrix_from_json(t));
    }
    if (j.contains("leaves")) c.leaves = matrix_from_json(j.at("leaves"));
    if (j.contains("k")) c.k = j.at("k").get<std::size_t>();
    if (std::to_string(checksum(c.params, c.leaves)) != j.at("checksum").get<std::string>())
      throw CheckpointError("parameter checksum mismatch");
    if (!c.params.all_finite()) throw CheckpointError("non-finite parameter values");
    return c;
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const Checkpoint& c) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << checkpoint_to_json(c).dump() << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFoundError(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace hypertropy
