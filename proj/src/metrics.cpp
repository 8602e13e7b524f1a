#include "hypertropy/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <random>
#include <set>
#include <stdexcept>

#include "hypertropy/lorentz.hpp"

namespace hypertropy {

namespace {

struct Contingency {
  std::vector<std::vector<double>> table;
  std::vector<double> rows, cols;
  double n = 0.0;
};

Contingency contingency(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size()) throw std::invalid_argument("labelings differ in length");
  if (pred.empty()) throw std::invalid_argument("empty labeling");
  std::map<int, std::size_t> pi, ti;
  for (int p : pred) pi.emplace(p, pi.size());
  for (int t : truth) ti.emplace(t, ti.size());
  Contingency c;
  c.table.assign(pi.size(), std::vector<double>(ti.size(), 0.0));
  c.rows.assign(pi.size(), 0.0);
  c.cols.assign(ti.size(), 0.0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const std::size_t a = pi[pred[i]], b = ti[truth[i]];
    c.table[a][b] += 1.0;
    c.rows[a] += 1.0;
    c.cols[b] += 1.0;
  }
  c.n = static_cast<double>(pred.size());
  return c;
}

double entropy(const std::vector<double>& counts, double n) {
  double h = 0.0;
  for (double c : counts)
    if (c > 0.0) h -= c / n * std::log(c / n);
  return h;
}

bool same_partition(const Contingency& c) {
  for (const auto& row : c.table)
    if (std::count_if(row.begin(), row.end(), [](double x) { return x > 0.0; }) != 1) return false;
  return c.rows.size() == c.cols.size();
}

double choose2(double x) { return x * (x - 1.0) / 2.0; }

}  // namespace

double nmi(std::span<const int> pred, std::span<const int> truth) {
  const Contingency c = contingency(pred, truth);
  const double hp = entropy(c.rows, c.n), ht = entropy(c.cols, c.n);
  if (hp == 0.0 && ht == 0.0) return same_partition(c) ? 1.0 : 0.0;
  double mi = 0.0;
  for (std::size_t a = 0; a < c.rows.size(); ++a)
    for (std::size_t b = 0; b < c.cols.size(); ++b) {
      const double nab = c.table[a][b];
      if (nab > 0.0) mi += nab / c.n * std::log(c.n * nab / (c.rows[a] * c.cols[b]));
    }
  return std::clamp(mi / ((hp + ht) / 2.0), 0.0, 1.0);
}

double ari(std::span<const int> pred, std::span<const int> truth) {
  const Contingency c = contingency(pred, truth);
  double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (const auto& row : c.table)
    for (double x : row) index += choose2(x);
  for (double r : c.rows) sum_rows += choose2(r);
  for (double k : c.cols) sum_cols += choose2(k);
  const double total = choose2(c.n);
  const double expected = total > 0.0 ? sum_rows * sum_cols / total : 0.0;
  const double max_index = (sum_rows + sum_cols) / 2.0;
  if (max_index == expected) return same_partition(c) ? 1.0 : 0.0;
  return (index - expected) / (max_index - expected);
}

double auc_score(std::span<const double> positive, std::span<const double> negative) {
  if (positive.empty() || negative.empty()) throw std::invalid_argument("auc needs both classes");
  // Rank-based count: for each positive, negatives strictly below plus half the ties.
  std::vector<double> neg(negative.begin(), negative.end());
  std::sort(neg.begin(), neg.end());
  double credit = 0.0;
  for (double p : positive) {
    const auto lo = std::lower_bound(neg.begin(), neg.end(), p);
    const auto hi = std::upper_bound(neg.begin(), neg.end(), p);
    credit += static_cast<double>(lo - neg.begin()) + 0.5 * static_cast<double>(hi - lo);
  }
  return credit / (static_cast<double>(positive.size()) * static_cast<double>(neg.size()));
}

LinkSplit link_split(const Graph& g, double fraction, std::uint64_t seed) {
  const std::size_t n = g.num_nodes(), m = g.num_edges();
  if (m < 2) throw std::invalid_argument("too few edges to hold out a test split");
  if (m * 2 >= n * (n - 1)) throw std::invalid_argument("graph has no non-edges to sample");
  if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("fraction must lie in (0, 1)");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t take = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(fraction * m)));
  LinkSplit split;
  for (std::size_t i = 0; i < take; ++i) {
    const Edge& e = g.edges()[order[i]];
    split.positives.emplace_back(e.u, e.v);
  }
  std::uniform_int_distribution<NodeId> node(0, static_cast<NodeId>(n - 1));
  std::set<std::pair<NodeId, NodeId>> seen;
  const std::size_t non_edges = n * (n - 1) / 2 - m;
  while (split.negatives.size() < std::min(take, non_edges)) {
    NodeId u = node(rng), v = node(rng);
    if (u == v || g.has_edge(u, v)) continue;
    if (u > v) std::swap(u, v);
    if (!seen.emplace(u, v).second) continue;
    split.negatives.emplace_back(u, v);
  }
  return split;
}

double auc_link(const Eigen::MatrixXd& embeddings, const Graph& g, double curvature, double fraction,
                std::uint64_t seed) {
  if (static_cast<std::size_t>(embeddings.rows()) != g.num_nodes())
    throw std::invalid_argument("one embedding row per node required");
  const auto points = rows_to_points(embeddings, curvature);
  const LinkSplit split = link_split(g, fraction, seed);
  std::vector<double> pos, neg;
  for (auto [u, v] : split.positives) pos.push_back(-geodesic_dist(points[u], points[v]));
  for (auto [u, v] : split.negatives) neg.push_back(-geodesic_dist(points[u], points[v]));
  return auc_score(pos, neg);
}

Eigen::MatrixXd shortest_paths(const Graph& g) {
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd d = Eigen::MatrixXd::Constant(n, n, inf);
  const SparseMatrix& a = g.adjacency();
  using Item = std::pair<double, Eigen::Index>;
  for (Eigen::Index s = 0; s < n; ++s) {
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    d(s, s) = 0.0;
    pq.emplace(0.0, s);
    while (!pq.empty()) {
      auto [du, u] = pq.top();
      pq.pop();
      if (du > d(s, u)) continue;
      for (SparseMatrix::InnerIterator it(a, u); it; ++it) {
        const double nd = du + it.value();
        if (nd < d(s, it.col())) {
          d(s, it.col()) = nd;
          pq.emplace(nd, it.col());
        }
      }
    }
  }
  return d;
}

DistortionResult distortion(const Eigen::MatrixXd& embeddings, const Graph& g, double curvature) {
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  if (embeddings.rows() != n) throw std::invalid_argument("one embedding row per node required");
  if (n < 2) throw std::invalid_argument("distortion needs at least two nodes");
  const Eigen::MatrixXd dg = shortest_paths(g);
  if (!dg.allFinite()) throw std::invalid_argument("distortion requires a connected graph");
  const auto points = rows_to_points(embeddings, curvature);
  DistortionResult r;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double de = geodesic_dist(points[static_cast<std::size_t>(i)], points[static_cast<std::size_t>(j)]);
      if (de == 0.0) {
        acc += kCoincidentPenalty;
        ++r.coincident_pairs;
      } else {
        acc += std::min(kCoincidentPenalty, std::abs(dg(i, j) / de - 1.0));
      }
    }
  r.value = acc / (static_cast<double>(n) * static_cast<double>(n - 1));
  return r;
}

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json j;
  auto put = [&j](const char* key, const std::optional<double>& v) {
    if (v) j[key] = *v;
  };
  put("nmi", r.nmi);
  put("ari", r.ari);
  put("auc", r.auc);
  put("distortion", r.distortion);
  put("conductance", r.conductance);
  put("tau", r.tau);
  put("structural_information", r.structural_information);
  j["k_natural"] = r.k_natural;
  if (r.k) j["k"] = *r.k;
  return j;
}

}  // namespace hypertropy
