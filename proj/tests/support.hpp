#pragma once

// Fixtures and independent oracles shared by the unit and acceptance tests.
// Oracles work from raw edge lists with plain loops and never call the
// library routine they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hypertropy/assignment.hpp"
#include "hypertropy/graph.hpp"

#ifndef HYPERTROPY_DATA_DIR
#define HYPERTROPY_DATA_DIR "data"
#endif

namespace testing {

using hypertropy::Edge;
using hypertropy::Graph;
using hypertropy::NodeId;

inline std::string data_path(const std::string& name) { return std::string(HYPERTROPY_DATA_DIR) + "/" + name; }

inline Graph make_graph(std::size_t n, const std::vector<std::pair<int, int>>& pairs) {
  std::vector<Edge> edges;
  for (auto [u, v] : pairs) edges.push_back({u, v, 1.0});
  return Graph::from_edges(n, edges);
}

inline Graph triangle() { return make_graph(3, {{0, 1}, {1, 2}, {0, 2}}); }

inline Graph barbell6() {
  return make_graph(6, {{0, 1}, {0, 2}, {1, 2}, {2, 3}, {3, 4}, {3, 5}, {4, 5}});
}

inline Graph star4() { return make_graph(4, {{0, 1}, {0, 2}, {0, 3}}); }

/// Connected random graph: a random spanning tree plus extra edges, weights in [lo, hi].
inline Graph random_graph(std::mt19937_64& rng, std::size_t n, double lo = 0.5, double hi = 2.0,
                          double extra_p = 0.35) {
  std::uniform_real_distribution<double> w(lo, hi), coin(0.0, 1.0);
  std::vector<Edge> edges;
  std::set<std::pair<int, int>> seen;
  for (std::size_t i = 1; i < n; ++i) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(i) - 1);
    const int j = pick(rng);
    edges.push_back({j, static_cast<NodeId>(i), w(rng)});
    seen.insert({j, static_cast<int>(i)});
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (!seen.count({static_cast<int>(i), static_cast<int>(j)}) && coin(rng) < extra_p)
        edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j), w(rng)});
  return Graph::from_edges(n, edges);
}

/// Random hard stack of height H over n leaves; parents drawn uniformly, widths random.
inline hypertropy::AssignmentStack random_hard_stack(std::mt19937_64& rng, std::size_t n, int height) {
  std::vector<int> widths{1};
  for (int h = 1; h < height; ++h) {
    std::uniform_int_distribution<int> wd(1, static_cast<int>(n));
    widths.push_back(wd(rng));
  }
  widths.push_back(static_cast<int>(n));
  std::vector<std::vector<int>> parents;
  for (int h = 1; h <= height; ++h) {
    std::uniform_int_distribution<int> pick(0, widths[static_cast<std::size_t>(h - 1)] - 1);
    std::vector<int> p(static_cast<std::size_t>(widths[static_cast<std::size_t>(h)]));
    for (auto& x : p) x = pick(rng);
    parents.push_back(std::move(p));
  }
  return hypertropy::AssignmentStack::from_parents(parents);
}

/// A module tree given as (members, parent index) with index 0 the root.
struct OracleTree {
  std::vector<std::vector<int>> members;
  std::vector<int> parent;
};

/// Node-wise structural information from first principles.
inline double oracle_structural_information(std::size_t n, const std::vector<Edge>& edges,
                                            const OracleTree& t) {
  std::vector<double> deg(n, 0.0);
  for (const Edge& e : edges) {
    deg[static_cast<std::size_t>(e.u)] += e.w;
    deg[static_cast<std::size_t>(e.v)] += e.w;
  }
  double vol = 0.0;
  for (double d : deg) vol += d;
  auto volume = [&](const std::vector<int>& m) {
    double s = 0.0;
    for (int i : m) s += deg[static_cast<std::size_t>(i)];
    return s;
  };
  double acc = 0.0;
  for (std::size_t a = 1; a < t.members.size(); ++a) {
    const auto& m = t.members[a];
    if (m.empty()) continue;
    std::set<int> in(m.begin(), m.end());
    double cut = 0.0;
    for (const Edge& e : edges)
      if (in.count(e.u) != in.count(e.v)) cut += e.w;
    acc += cut * std::log2(volume(m) / volume(t.members[static_cast<std::size_t>(t.parent[a])]));
  }
  return -acc / vol;
}

/// Root -> modules of the labeling -> singleton leaves.
inline OracleTree two_level(const std::vector<int>& labels) {
  OracleTree t;
  std::vector<int> all;
  for (std::size_t i = 0; i < labels.size(); ++i) all.push_back(static_cast<int>(i));
  t.members.push_back(all);
  t.parent.push_back(-1);
  std::map<int, std::vector<int>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(static_cast<int>(i));
  for (const auto& [label, m] : groups) {
    const int id = static_cast<int>(t.members.size());
    t.members.push_back(m);
    t.parent.push_back(0);
    for (int i : m) {
      t.members.push_back({i});
      t.parent.push_back(id);
    }
  }
  return t;
}

/// Oracle tree from a hard stack, built by following each leaf's parent chain.
inline OracleTree oracle_tree_from_stack(const hypertropy::AssignmentStack& s) {
  const int H = s.height();
  const auto widths = s.widths();
  // members[h][k]: leaves under node k at height h.
  std::vector<std::vector<std::vector<int>>> members(static_cast<std::size_t>(H + 1));
  for (int h = 0; h <= H; ++h) members[static_cast<std::size_t>(h)].resize(static_cast<std::size_t>(widths[h]));
  for (int leaf = 0; leaf < widths[static_cast<std::size_t>(H)]; ++leaf) {
    int k = leaf;
    members[static_cast<std::size_t>(H)][static_cast<std::size_t>(k)].push_back(leaf);
    for (int h = H; h >= 1; --h) {
      const Eigen::MatrixXd& c = s.level(h);
      int parent = 0;
      for (Eigen::Index j = 0; j < c.cols(); ++j)
        if (c(k, j) == 1.0) parent = static_cast<int>(j);
      k = parent;
      members[static_cast<std::size_t>(h - 1)][static_cast<std::size_t>(k)].push_back(leaf);
    }
  }
  OracleTree t;
  std::vector<std::vector<int>> index(static_cast<std::size_t>(H + 1));
  for (int h = 0; h <= H; ++h) {
    for (int k = 0; k < widths[static_cast<std::size_t>(h)]; ++k) {
      index[static_cast<std::size_t>(h)].push_back(static_cast<int>(t.members.size()));
      t.members.push_back(members[static_cast<std::size_t>(h)][static_cast<std::size_t>(k)]);
      int parent = -1;
      if (h > 0) {
        const Eigen::MatrixXd& c = s.level(h);
        for (Eigen::Index j = 0; j < c.cols(); ++j)
          if (c(k, j) == 1.0) parent = index[static_cast<std::size_t>(h - 1)][static_cast<std::size_t>(j)];
      }
      t.parent.push_back(parent);
    }
  }
  return t;
}

/// Every set partition of {0..n-1}, as restricted growth strings.
inline std::vector<std::vector<int>> all_partitions(int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  auto rec = [&](auto&& self, int i, int max_label) -> void {
    if (i == n) {
      out.push_back(cur);
      return;
    }
    for (int l = 0; l <= max_label + 1; ++l) {
      cur.push_back(l);
      self(self, i + 1, std::max(max_label, l));
      cur.pop_back();
    }
  };
  rec(rec, 0, -1);
  return out;
}

/// Minimum of cut(S) / min(vol S, vol S^c) over proper non-empty subsets, by bitmask.
inline double oracle_conductance(std::size_t n, const std::vector<Edge>& edges) {
  std::vector<double> deg(n, 0.0);
  for (const Edge& e : edges) {
    deg[static_cast<std::size_t>(e.u)] += e.w;
    deg[static_cast<std::size_t>(e.v)] += e.w;
  }
  double vol = 0.0;
  for (double d : deg) vol += d;
  double best = INFINITY;
  for (std::uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
    double vs = 0.0, cut = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1u) vs += deg[i];
    for (const Edge& e : edges)
      if ((mask >> e.u & 1u) != (mask >> e.v & 1u)) cut += e.w;
    const double denom = std::min(vs, vol - vs);
    if (denom > 0.0) best = std::min(best, cut / denom);
  }
  return best;
}

/// Minkowski form, written out for the oracles.
inline double mink(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  return -x[0] * y[0] + x.tail(x.size() - 1).dot(y.tail(y.size() - 1));
}

/// Minimizer of sum_i w_i (2/k - 2<mu, x_i>) over the hyperboloid, by Riemannian
/// gradient descent with backtracking. Columns of `points` are the x_i.
inline Eigen::VectorXd oracle_centroid_pg(const Eigen::MatrixXd& points, const Eigen::VectorXd& w, double k) {
  const Eigen::Index n = points.cols();
  auto objective = [&](const Eigen::VectorXd& mu) {
    double f = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) f += w[i] * (2.0 / k - 2.0 * mink(mu, points.col(i)));
    return f;
  };
  auto exp_at = [&](const Eigen::VectorXd& mu, const Eigen::VectorXd& v) {
    const double nv = std::sqrt(std::max(mink(v, v), 0.0));
    const double s = std::sqrt(-k) * nv;
    if (s < 1e-300) return mu;
    Eigen::VectorXd out = std::cosh(s) * mu + std::sinh(s) * v / s;
    out[0] = std::sqrt(out.tail(out.size() - 1).squaredNorm() - 1.0 / k);
    return out;
  };
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(points.rows());
  mu[0] = 1.0 / std::sqrt(-k);
  double step = 1.0;
  for (int it = 0; it < 100000; ++it) {
    // Metric-raised Euclidean gradient, then projection onto the tangent space.
    Eigen::VectorXd raised = Eigen::VectorXd::Zero(points.rows());
    for (Eigen::Index i = 0; i < n; ++i) raised -= 2.0 * w[i] * points.col(i);
    Eigen::VectorXd rgrad = raised - k * mink(raised, mu) * mu;
    const double gnorm2 = mink(rgrad, rgrad);
    if (gnorm2 < 1e-26) break;
    const double f0 = objective(mu);
    step *= 2.0;
    Eigen::VectorXd next = exp_at(mu, -step * rgrad);
    while (objective(next) > f0 - 0.25 * step * gnorm2 && step > 1e-20) {
      step *= 0.5;
      next = exp_at(mu, -step * rgrad);
    }
    if ((next - mu).norm() < 1e-16) break;
    mu = next;
  }
  return mu;
}

/// Geodesic distance from the raw Minkowski form.
inline double oracle_geodesic(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double k) {
  return std::acosh(std::max(1.0, k * mink(x, y))) / std::sqrt(-k);
}

/// Random point on the hyperboloid with spatial coordinates in [-r, r].
inline Eigen::VectorXd random_point(std::mt19937_64& rng, int d, double k, double r = 1.5) {
  std::uniform_real_distribution<double> u(-r, r);
  Eigen::VectorXd x(d + 1);
  for (int i = 1; i <= d; ++i) x[i] = u(rng);
  x[0] = std::sqrt(x.tail(d).squaredNorm() - 1.0 / k);
  return x;
}

/// Level-wise objective written out with explicit loops. `levels[h-1]` is C^h.
inline double oracle_dsi(std::size_t n, const std::vector<Edge>& edges, const std::vector<Eigen::MatrixXd>& levels) {
  const int H = static_cast<int>(levels.size());
  std::vector<double> deg(n, 0.0);
  for (const Edge& e : edges) {
    deg[static_cast<std::size_t>(e.u)] += e.w;
    deg[static_cast<std::size_t>(e.v)] += e.w;
  }
  double vol = 0.0;
  for (double d : deg) vol += d;
  // S[h]: n x N_h membership, built top-down from the identity at H.
  std::vector<Eigen::MatrixXd> S(static_cast<std::size_t>(H + 1));
  S[static_cast<std::size_t>(H)] = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (int h = H - 1; h >= 0; --h) {
    const Eigen::MatrixXd& prev = S[static_cast<std::size_t>(h + 1)];
    const Eigen::MatrixXd& c = levels[static_cast<std::size_t>(h)];
    Eigen::MatrixXd cur = Eigen::MatrixXd::Zero(prev.rows(), c.cols());
    for (Eigen::Index i = 0; i < prev.rows(); ++i)
      for (Eigen::Index a = 0; a < prev.cols(); ++a)
        for (Eigen::Index b = 0; b < c.cols(); ++b) cur(i, b) += prev(i, a) * c(a, b);
    S[static_cast<std::size_t>(h)] = cur;
  }
  auto volumes = [&](int h) {
    const Eigen::MatrixXd& s = S[static_cast<std::size_t>(h)];
    std::vector<double> v(static_cast<std::size_t>(s.cols()), 0.0);
    for (Eigen::Index k = 0; k < s.cols(); ++k)
      for (std::size_t i = 0; i < n; ++i) v[static_cast<std::size_t>(k)] += s(static_cast<Eigen::Index>(i), k) * deg[i];
    return v;
  };
  double total = 0.0;
  for (int h = 1; h <= H; ++h) {
    const Eigen::MatrixXd& s = S[static_cast<std::size_t>(h)];
    const Eigen::MatrixXd& c = levels[static_cast<std::size_t>(h - 1)];
    const auto vh = volumes(h), vp = volumes(h - 1);
    for (Eigen::Index k = 0; k < s.cols(); ++k) {
      double internal = 0.0;
      for (const Edge& e : edges)
        internal += 2.0 * e.w * s(e.u, k) * s(e.v, k);
      double parent = 0.0;
      for (Eigen::Index j = 0; j < c.cols(); ++j) parent += c(k, j) * vp[static_cast<std::size_t>(j)];
      const double g = vh[static_cast<std::size_t>(k)] - internal;
      total -= g / vol *
               (std::log2(std::max(vh[static_cast<std::size_t>(k)], 1e-10)) - std::log2(std::max(parent, 1e-10)));
    }
  }
  return total;
}

/// Minimum two-level value over every partition of the vertices.
inline double oracle_brute_force(std::size_t n, const std::vector<Edge>& edges, std::vector<int>* argmin = nullptr) {
  double best = INFINITY;
  for (const auto& p : all_partitions(static_cast<int>(n))) {
    const double v = oracle_structural_information(n, edges, two_level(p));
    if (v < best) {
      best = v;
      if (argmin) *argmin = p;
    }
  }
  return best;
}

}  // namespace testing
