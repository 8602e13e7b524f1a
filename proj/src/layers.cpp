#include "hypertropy/layers.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "hypertropy/entropy.hpp"
#include "hypertropy/lorentz.hpp"

namespace hypertropy {

namespace {

constexpr double kMaskedScore = -1e300;

ad::Var time_sign_row(ad::Tape& tape, Eigen::Index cols) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Ones(1, cols);
  s(0, 0) = -1.0;
  return tape.constant(std::move(s));
}

const ad::Var& param(std::span<const ad::Var> params, const ModelParams& layout,
                     const std::string& name) {
  return params[layout.index(name)];
}

void add_linear(ModelParams& p, std::mt19937_64& rng, const std::string& name, Eigen::Index in,
                Eigen::Index out) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> u(-limit, limit);
  Eigen::MatrixXd w(in, out);
  for (Eigen::Index j = 0; j < out; ++j)
    for (Eigen::Index i = 0; i < in; ++i) w(i, j) = u(rng);
  p.names.push_back(name + ".W");
  p.tensors.push_back(std::move(w));
  p.names.push_back(name + ".b");
  p.tensors.push_back(Eigen::MatrixXd::Zero(1, out));
}

ad::Var dense_layer(const ad::Var& x, std::span<const ad::Var> params, const ModelParams& layout,
                    const std::string& name) {
  return ad::add(ad::matmul(x, param(params, layout, name + ".W")), param(params, layout, name + ".b"));
}

}  // namespace

std::vector<int> ModelConfig::resolve_widths(std::size_t n) const {
  validate();
  if (!widths.empty()) {
    if (widths.size() != static_cast<std::size_t>(height) + 1)
      throw std::invalid_argument("widths must list height + 1 entries (leaves first, root last)");
    if (widths.front() != static_cast<int>(n))
      throw std::invalid_argument("first width must equal the node count " + std::to_string(n));
    if (widths.back() != 1) throw std::invalid_argument("last width must be 1");
    for (int w : widths)
      if (w < 1) throw std::invalid_argument("widths must be positive");
    return widths;
  }
  std::vector<int> out{static_cast<int>(n)};
  for (int h = 1; h <= height; ++h) out.push_back(std::max(1, (out.back() + 3) / 4));
  out.back() = 1;
  return out;
}

void ModelConfig::validate() const {
  if (height < 1) throw std::invalid_argument("height must be at least 1");
  if (embed_dim < 1) throw std::invalid_argument("embed_dim must be at least 1");
  if (hidden_dim < 1) throw std::invalid_argument("hidden_dim must be at least 1");
  if (!(curvature < 0.0) || !std::isfinite(curvature))
    throw std::invalid_argument("curvature must be negative");
}

nlohmann::json to_json(const ModelConfig& c) {
  nlohmann::json j{{"height", c.height},     {"embed_dim", c.embed_dim}, {"hidden_dim", c.hidden_dim},
                   {"curvature", c.curvature}, {"seed", c.seed}};
  if (!c.widths.empty()) j["widths"] = c.widths;
  return j;
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.height = j.value("height", c.height);
  c.widths = j.value("widths", c.widths);
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.curvature = j.value("curvature", c.curvature);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

std::size_t ModelParams::index(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  throw std::out_of_range("no parameter named " + name);
}

std::size_t ModelParams::num_scalars() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += static_cast<std::size_t>(t.size());
  return n;
}

bool ModelParams::all_finite() const {
  for (const auto& t : tensors)
    if (!t.allFinite()) return false;
  return true;
}

ModelParams init_params(const ModelConfig& config, std::size_t num_nodes, Eigen::Index feature_dim) {
  const std::vector<int> w = config.resolve_widths(num_nodes);
  std::mt19937_64 rng(config.seed);
  ModelParams p;
  const Eigen::Index d = config.embed_dim;
  for (const char* path : {"enc.q", "enc.k", "enc.v"}) add_linear(p, rng, path, feature_dim + 1, d);
  for (int h = config.height; h >= 1; --h) {
    const int parents = w[static_cast<std::size_t>(config.height - h + 1)];
    if (parents == 1) continue;
    const std::string lvl = "lvl" + std::to_string(h);
    add_linear(p, rng, lvl + ".q", d + 1, d);
    add_linear(p, rng, lvl + ".k", d + 1, d);
    add_linear(p, rng, lvl + ".mlp0", d + 1, config.hidden_dim);
    add_linear(p, rng, lvl + ".mlp1", config.hidden_dim, config.hidden_dim);
    add_linear(p, rng, lvl + ".mlp2", config.hidden_dim, parents);
  }
  return p;
}

Eigen::MatrixXd lifted_features(const Graph& g, double curvature) {
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  const Eigen::MatrixXd raw = g.features() ? *g.features() : Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd out(n, raw.cols() + 1);
  for (Eigen::Index i = 0; i < n; ++i)
    out.row(i) = lift_feature(raw.row(i).transpose(), curvature).coords().transpose();
  return out;
}

ad::Var llinear(const ad::Var& x, const ad::Var& w, const ad::Var& b, double curvature) {
  ad::Var h = ad::leaky_relu(ad::add(ad::matmul(x, w), b), kLeakySlope);
  ad::Var t = ad::sqrt(ad::add_scalar(ad::row_sum(ad::square(h)), -1.0 / curvature));
  return ad::concat_cols(t, h);
}

ad::Var sq_lorentz_dist_matrix(const ad::Var& q, const ad::Var& k, double curvature) {
  return ad::add_scalar(ad::scale(ad::minkowski(q, k), -2.0), 2.0 / curvature);
}

ad::Var latt(const ad::Var& q, const ad::Var& k, const Eigen::MatrixXd& mask, double curvature) {
  if (mask.rows() != q.rows() || mask.cols() != k.rows())
    throw ad::ShapeError("latt: mask shape does not match queries x keys");
  Eigen::MatrixXd penalty = Eigen::MatrixXd::Zero(mask.rows(), mask.cols());
  for (Eigen::Index i = 0; i < mask.rows(); ++i) {
    if ((mask.row(i).array() > 0.0).any()) {
      for (Eigen::Index j = 0; j < mask.cols(); ++j)
        if (!(mask(i, j) > 0.0)) penalty(i, j) = kMaskedScore;
    } else {
      penalty.row(i).setConstant(kMaskedScore);
      if (i < mask.cols()) penalty(i, i) = 0.0;
    }
  }
  const double scale = -1.0 / std::sqrt(static_cast<double>(k.rows()));
  ad::Var scores = ad::scale(sq_lorentz_dist_matrix(q, k, curvature), scale);
  return ad::row_softmax(ad::add(scores, q.tape()->constant(std::move(penalty))));
}

ad::Var lagg(const ad::Var& weights, const ad::Var& x, double curvature) {
  ad::Var s = ad::matmul(weights, x);
  ad::Var q = ad::row_sum(ad::mul(ad::square(s), time_sign_row(*s.tape(), s.cols())));
  ad::Var norm = ad::sqrt(ad::clamp(ad::neg(q), 1e-300, std::numeric_limits<double>::infinity()));
  return ad::div(s, ad::scale(norm, std::sqrt(-curvature)));
}

ad::Var lconv(const ad::Var& features, const Graph& g, std::span<const ad::Var> params,
              const ModelParams& layout, double curvature) {
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  Eigen::MatrixXd mask = Eigen::MatrixXd(g.adjacency()) + Eigen::MatrixXd::Identity(n, n);
  auto path = [&](const std::string& p) {
    return llinear(features, param(params, layout, p + ".W"), param(params, layout, p + ".b"),
                   curvature);
  };
  ad::Var q = path("enc.q"), k = path("enc.k"), v = path("enc.v");
  ad::Var att = latt(q, k, mask, curvature);
  ad::Var w = ad::mul(att, features.tape()->constant(mask));
  return lagg(w, v, curvature);
}

ad::Var assigner(const ad::Var& z, const ad::Var& adjacency, int height, int parent_width,
                 std::span<const ad::Var> params, const ModelParams& layout, double curvature) {
  if (parent_width <= 0) throw std::invalid_argument("assigner: parent width must be positive");
  ad::Tape& tape = *z.tape();
  if (parent_width == 1) return tape.constant(Eigen::MatrixXd::Ones(z.rows(), 1));
  const std::string lvl = "lvl" + std::to_string(height);
  auto path = [&](const std::string& p) {
    return llinear(z, param(params, layout, lvl + p + ".W"), param(params, layout, lvl + p + ".b"),
                   curvature);
  };
  const Eigen::Index n = z.rows();
  Eigen::MatrixXd mask = adjacency.value() + Eigen::MatrixXd::Identity(n, n);
  ad::Var att = latt(path(".q"), path(".k"), mask, curvature);
  ad::Var weighted =
      ad::mul(att, ad::add(adjacency, tape.constant(Eigen::MatrixXd::Identity(n, n))));

  ad::Var m = ad::tanh(dense_layer(z, params, layout, lvl + ".mlp0"));
  m = ad::tanh(dense_layer(m, params, layout, lvl + ".mlp1"));
  m = dense_layer(m, params, layout, lvl + ".mlp2");
  if (m.cols() != parent_width) throw ad::ShapeError("assigner: parameter width mismatch");
  return ad::row_softmax(ad::matmul(weighted, m));
}

ad::Var parent_embeddings(const ad::Var& c, const ad::Var& z, double curvature) {
  return lagg(ad::transpose(c), z, curvature);
}

ad::Var coarsen(const ad::Var& c, const ad::Var& adjacency) {
  return ad::matmul(ad::transpose(c), ad::matmul(adjacency, c));
}

ForwardResult forward_from_leaves(ad::Tape& tape, const Graph& g, const ad::Var& leaves,
                                  const ModelConfig& config, std::span<const ad::Var> params,
                                  const ModelParams& layout) {
  if (params.size() != layout.size()) throw std::invalid_argument("forward: parameter count mismatch");
  const int H = config.height;
  const std::vector<int> w = config.resolve_widths(g.num_nodes());
  const double k = config.curvature;

  ForwardResult out;
  out.levels.resize(static_cast<std::size_t>(H));
  out.embeddings.resize(static_cast<std::size_t>(H + 1));
  out.embeddings[static_cast<std::size_t>(H)] = leaves;

  ad::Var adj = tape.constant(Eigen::MatrixXd(g.adjacency()));
  for (int h = H; h >= 1; --h) {
    const ad::Var& z = out.embeddings[static_cast<std::size_t>(h)];
    const int parents = w[static_cast<std::size_t>(H - h + 1)];
    ad::Var c = assigner(z, adj, h, parents, params, layout, k);
    out.levels[static_cast<std::size_t>(h - 1)] = c;
    out.embeddings[static_cast<std::size_t>(h - 1)] = parent_embeddings(c, z, k);
    if (h > 1) {
      adj = (h == H) ? ad::matmul(ad::transpose(c), ad::sparse_matmul(g.adjacency(), c))
                     : coarsen(c, adj);
    }
  }
  return out;
}

ForwardResult forward(ad::Tape& tape, const Graph& g, const Eigen::MatrixXd& features,
                      const ModelConfig& config, std::span<const ad::Var> params,
                      const ModelParams& layout) {
  if (params.size() != layout.size()) throw std::invalid_argument("forward: parameter count mismatch");
  ad::Var leaves = lconv(tape.constant(features), g, params, layout, config.curvature);
  return forward_from_leaves(tape, g, leaves, config, params, layout);
}

namespace {

ForwardValues snapshot(ad::Tape& tape, const Graph& g, const ForwardResult& fr) {
  std::vector<Eigen::MatrixXd> levels;
  for (const auto& c : fr.levels) levels.push_back(c.value());
  std::vector<Eigen::MatrixXd> emb;
  for (const auto& z : fr.embeddings) emb.push_back(z.value());
  const double loss = dsi_loss(tape, g, fr.levels).scalar();
  return {AssignmentStack(std::move(levels)), std::move(emb), loss};
}

}  // namespace

ForwardValues evaluate(const Graph& g, const Eigen::MatrixXd& features, const ModelConfig& config,
                       const ModelParams& params) {
  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const auto& t : params.tensors) vars.push_back(tape.constant(t));
  return snapshot(tape, g, forward(tape, g, features, config, vars, params));
}

ForwardValues evaluate_from_leaves(const Graph& g, const Eigen::MatrixXd& leaves,
                                   const ModelConfig& config, const ModelParams& params) {
  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const auto& t : params.tensors) vars.push_back(tape.constant(t));
  return snapshot(tape, g, forward_from_leaves(tape, g, tape.constant(leaves), config, vars, params));
}

}  // namespace hypertropy
