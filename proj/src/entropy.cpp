#include "hypertropy/entropy.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

namespace hypertropy {

namespace {

void check_stack_shapes(const Graph& g, std::span<const ad::Var> levels) {
  if (levels.empty()) throw std::invalid_argument("dsi_loss: empty assignment stack");
  if (static_cast<std::size_t>(levels.back().rows()) != g.num_nodes())
    throw std::invalid_argument("dsi_loss: C^H must have one row per graph node");
  if (levels.front().cols() != 1) throw std::invalid_argument("dsi_loss: C^1 must have one column");
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (levels[i].cols() != levels[i - 1].rows())
      throw std::invalid_argument("dsi_loss: level widths do not chain at height " +
                                  std::to_string(i + 1));
}

std::vector<ad::Var> dsi_level_terms(ad::Tape& tape, const Graph& g,
                                     std::span<const ad::Var> levels) {
  check_stack_shapes(g, levels);
  const auto H = static_cast<int>(levels.size());
  auto C = [&](int h) -> const ad::Var& { return levels[static_cast<std::size_t>(h - 1)]; };
  const double inv_vol = 1.0 / g.volume();

  // vol[h] = (S^h)^T d, computed bottom-up through C^h.
  std::vector<ad::Var> vol(static_cast<std::size_t>(H + 1));
  vol[static_cast<std::size_t>(H)] = tape.constant(g.degrees());
  for (int h = H; h >= 1; --h)
    vol[static_cast<std::size_t>(h - 1)] =
        ad::matmul(ad::transpose(C(h)), vol[static_cast<std::size_t>(h)]);

  std::vector<ad::Var> terms(static_cast<std::size_t>(H + 1));
  terms[0] = tape.scalar_constant(0.0);
  ad::Var s;  // S^h; the identity at h = H is never materialized
  const double inf = std::numeric_limits<double>::infinity();
  for (int h = H; h >= 1; --h) {
    const ad::Var& vh = vol[static_cast<std::size_t>(h)];
    ad::Var parent = ad::matmul(C(h), vol[static_cast<std::size_t>(h - 1)]);
    ad::Var boundary;
    if (h == H) {
      // No self-loops, so the singleton modules have no internal weight.
      boundary = vh;
    } else {
      s = (h == H - 1) ? C(H) : ad::matmul(s, C(h + 1));
      ad::Var internal =
          ad::transpose(ad::col_sum(ad::mul(s, ad::sparse_matmul(g.adjacency(), s))));
      boundary = ad::sub(vh, internal);
    }
    ad::Var log_ratio = ad::sub(ad::log2(ad::clamp(vh, kLogFloor, inf)),
                                ad::log2(ad::clamp(parent, kLogFloor, inf)));
    terms[static_cast<std::size_t>(h)] = ad::scale(ad::sum(ad::mul(boundary, log_ratio)), -inv_vol);
  }
  return terms;
}

}  // namespace

double one_dim_entropy(const Graph& g) {
  const double vol = g.volume();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < g.degrees().size(); ++i) {
    const double d = g.degrees()[i];
    if (d <= 0.0) throw std::invalid_argument("one_dim_entropy: zero-degree node");
    acc += d * (std::log2(d) - std::log2(vol));
  }
  return -acc / vol;
}

double nodewise_structural_information(const Graph& g, const PartitionTree& t) {
  if (t.num_graph_nodes() != g.num_nodes())
    throw std::invalid_argument("tree and graph disagree on the node count");
  try {
    t.validate(/*allow_empty=*/true);
  } catch (const std::logic_error& e) {
    throw std::invalid_argument(std::string("invalid partitioning tree: ") + e.what());
  }
  const std::size_t n = g.num_nodes();
  std::vector<double> volume(t.size(), 0.0);
  for (const TreeNode& node : t.nodes())
    volume[static_cast<std::size_t>(node.id)] = subset_volume(g, NodeSubset(n, node.members));

  double acc = 0.0;
  for (const TreeNode& node : t.nodes()) {
    if (node.id == t.root() || node.members.empty()) continue;
    const double v = volume[static_cast<std::size_t>(node.id)];
    if (v <= 0.0)
      throw std::invalid_argument("module of tree node " + std::to_string(node.id) + " has zero volume");
    const double cut = cut_weight(g, NodeSubset(n, node.members));
    acc += cut * std::log2(v / volume[static_cast<std::size_t>(node.parent)]);
  }
  return -acc / g.volume();
}

ad::Var dsi_loss(ad::Tape& tape, const Graph& g, std::span<const ad::Var> levels) {
  auto terms = dsi_level_terms(tape, g, levels);
  ad::Var total = terms[1];
  for (std::size_t h = 2; h < terms.size(); ++h) total = ad::add(total, terms[h]);
  return total;
}

std::vector<double> dsi_terms(const Graph& g, const AssignmentStack& stack) {
  stack.require_row_stochastic(1e-6);
  ad::Tape tape;
  std::vector<ad::Var> levels;
  for (const auto& c : stack.levels()) levels.push_back(tape.constant(c));
  std::vector<double> out;
  for (const ad::Var& v : dsi_level_terms(tape, g, levels)) out.push_back(v.scalar());
  return out;
}

double dsi_loss(const Graph& g, const AssignmentStack& stack) {
  stack.require_row_stochastic(1e-6);
  ad::Tape tape;
  std::vector<ad::Var> levels;
  for (const auto& c : stack.levels()) levels.push_back(tape.constant(c));
  return dsi_loss(tape, g, levels).scalar();
}

double additivity_decomposition(const Graph& g, const AssignmentStack& hard) {
  if (!hard.is_hard()) throw std::invalid_argument("additivity decomposition needs a hard stack");
  const LevelVolumes lv = level_volumes(hard, g.degrees());
  const double vol = g.volume();
  double total = 0.0;
  for (int h = 1; h <= hard.height(); ++h) {
    const Eigen::MatrixXd& c = hard.level(h);
    const Eigen::VectorXd& below = lv.volume[static_cast<std::size_t>(h)];
    const Eigen::VectorXd& above = lv.volume[static_cast<std::size_t>(h - 1)];
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
      if (above[j] <= 0.0) continue;
      double entropy = 0.0;
      for (Eigen::Index k = 0; k < c.rows(); ++k) {
        const double p = c(k, j) * below[k] / above[j];
        if (p > 0.0) entropy -= p * std::log2(p);
      }
      total += above[j] / vol * entropy;
    }
  }
  return total;
}

double two_level_value(const Graph& g, std::span<const int> partition) {
  const std::size_t n = g.num_nodes();
  if (partition.size() != n) throw std::invalid_argument("partition must label every node");
  std::map<int, std::vector<NodeId>> modules;
  for (std::size_t i = 0; i < n; ++i) modules[partition[i]].push_back(static_cast<NodeId>(i));
  PartitionTree t(n);
  for (const auto& [label, members] : modules) {
    const int m = t.add_child(t.root(), members);
    for (NodeId i : members) t.add_child(m, {i});
  }
  return nodewise_structural_information(g, t);
}

namespace {

PartitionTree two_level_tree(const Graph& g, std::span<const int> partition) {
  std::map<int, std::vector<NodeId>> modules;
  for (std::size_t i = 0; i < partition.size(); ++i)
    modules[partition[i]].push_back(static_cast<NodeId>(i));
  PartitionTree t(g.num_nodes());
  for (const auto& [label, members] : modules) {
    const int m = t.add_child(t.root(), members);
    for (NodeId i : members) t.add_child(m, {i});
  }
  t.refresh_statistics(g);
  return t;
}

}  // namespace

BruteForceResult brute_force_entropy(const Graph& g, int height) {
  const std::size_t n = g.num_nodes();
  if (height != 2) throw SizeCapError("exhaustive search is only available for height 2");
  if (n > 7) throw SizeCapError("exhaustive search needs N <= 7 (graph has " + std::to_string(n) + ")");

  // Restricted growth strings enumerate each set partition exactly once.
  std::vector<int> rgs(n, 0), prefix_max(n, 0);
  std::vector<int> best_partition;
  double best = std::numeric_limits<double>::infinity();
  for (;;) {
    const double v = two_level_value(g, rgs);
    if (v < best) {
      best = v;
      best_partition = rgs;
    }
    std::size_t i = n;
    while (i-- > 1) {
      if (rgs[i] <= prefix_max[i - 1]) break;
    }
    if (i == 0 || n <= 1) break;
    ++rgs[i];
    prefix_max[i] = std::max(prefix_max[i - 1], rgs[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      rgs[j] = 0;
      prefix_max[j] = prefix_max[i];
    }
  }
  return {best, two_level_tree(g, best_partition), best_partition};
}

NormalizedEntropy normalized_entropy(const Graph& g, int height, std::size_t max_n) {
  if (g.num_nodes() > max_n)
    throw SizeCapError("normalized entropy needs N <= " + std::to_string(max_n));
  NormalizedEntropy r;
  r.entropy = brute_force_entropy(g, height).value;
  r.one_dim = one_dim_entropy(g);
  r.tau = r.entropy / r.one_dim;
  r.conductance = graph_conductance(g, max_n);
  r.bound_holds = r.tau >= r.conductance - 1e-12;
  return r;
}

GreedyResult cse_greedy(const Graph& g) {
  const std::size_t n = g.num_nodes();
  const double vol = g.volume();

  struct Module {
    std::vector<NodeId> members;
    double volume = 0.0;
    double cut = 0.0;
    double dlogd = 0.0;  // sum of d_i log2 d_i
    std::map<int, double> links;  // weight to other live modules
    bool alive = true;
  };
  auto contribution = [vol](double v, double cut, double dlogd) {
    return -(cut / vol) * std::log2(v / vol) - (dlogd - v * std::log2(v)) / vol;
  };

  std::vector<Module> mods(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = g.degree(static_cast<NodeId>(i));
    mods[i].members = {static_cast<NodeId>(i)};
    mods[i].volume = d;
    mods[i].cut = d;
    mods[i].dlogd = d * std::log2(d);
  }
  for (const Edge& e : g.edges()) {
    mods[static_cast<std::size_t>(e.u)].links[e.v] += e.w;
    mods[static_cast<std::size_t>(e.v)].links[e.u] += e.w;
  }

  double value = 0.0;
  for (const auto& m : mods) value += contribution(m.volume, m.cut, m.dlogd);
  GreedyResult result;
  result.trajectory.push_back(value);

  for (;;) {
    double best_delta = -1e-12;
    int best_a = -1, best_b = -1;
    // Module ids equal their smallest member, so scanning ids in order applies the tie-break.
    for (std::size_t a = 0; a < n; ++a) {
      if (!mods[a].alive) continue;
      const double fa = contribution(mods[a].volume, mods[a].cut, mods[a].dlogd);
      for (std::size_t b = a + 1; b < n; ++b) {
        if (!mods[b].alive) continue;
        auto it = mods[a].links.find(static_cast<int>(b));
        const double w = it == mods[a].links.end() ? 0.0 : it->second;
        const double merged = contribution(mods[a].volume + mods[b].volume,
                                           mods[a].cut + mods[b].cut - 2.0 * w,
                                           mods[a].dlogd + mods[b].dlogd);
        const double delta =
            merged - fa - contribution(mods[b].volume, mods[b].cut, mods[b].dlogd);
        if (delta < best_delta) {
          best_delta = delta;
          best_a = static_cast<int>(a);
          best_b = static_cast<int>(b);
        }
      }
    }
    if (best_a < 0) break;

    Module& A = mods[static_cast<std::size_t>(best_a)];
    Module& B = mods[static_cast<std::size_t>(best_b)];
    const double w = A.links.count(best_b) ? A.links[best_b] : 0.0;
    A.members.insert(A.members.end(), B.members.begin(), B.members.end());
    A.volume += B.volume;
    A.cut += B.cut - 2.0 * w;
    A.dlogd += B.dlogd;
    A.links.erase(best_b);
    for (const auto& [other, wt] : B.links) {
      if (other == best_a) continue;
      A.links[other] += wt;
      auto& back = mods[static_cast<std::size_t>(other)].links;
      back.erase(best_b);
      back[best_a] += wt;
    }
    B.alive = false;
    B.links.clear();
    value += best_delta;
    result.trajectory.push_back(value);
  }

  result.partition.assign(n, -1);
  int label = 0;
  for (const auto& m : mods) {
    if (!m.alive) continue;
    for (NodeId i : m.members) result.partition[static_cast<std::size_t>(i)] = label;
    ++label;
  }
  result.value = two_level_value(g, result.partition);
  result.tree = two_level_tree(g, result.partition);
  return result;
}

}  // namespace hypertropy
