#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "hypertropy/lorentz.hpp"
#include "hypertropy/metrics.hpp"
#include "support.hpp"

using namespace hypertropy;

namespace {

// Adjusted Rand index by enumerating every pair of items.
double oracle_ari(const std::vector<int>& a, const std::vector<int>& b) {
  const std::size_t n = a.size();
  double both = 0.0, in_a = 0.0, in_b = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool sa = a[i] == a[j], sb = b[i] == b[j];
      both += sa && sb;
      in_a += sa;
      in_b += sb;
      pairs += 1.0;
    }
  const double expected = in_a * in_b / pairs;
  return (both - expected) / ((in_a + in_b) / 2.0 - expected);
}

// NMI from joint and marginal frequencies, arithmetic-mean normalization.
double oracle_nmi(const std::vector<int>& a, const std::vector<int>& b) {
  const double n = static_cast<double>(a.size());
  std::map<int, double> pa, pb;
  std::map<std::pair<int, int>, double> pab;
  for (std::size_t i = 0; i < a.size(); ++i) {
    pa[a[i]] += 1.0 / n;
    pb[b[i]] += 1.0 / n;
    pab[{a[i], b[i]}] += 1.0 / n;
  }
  double ha = 0.0, hb = 0.0, mi = 0.0;
  for (auto [k, p] : pa) ha -= p * std::log(p);
  for (auto [k, p] : pb) hb -= p * std::log(p);
  for (auto [k, p] : pab) mi += p * std::log(p / (pa[k.first] * pb[k.second]));
  return mi / ((ha + hb) / 2.0);
}

std::vector<int> random_labels(std::mt19937_64& rng, std::size_t n, int k) {
  std::uniform_int_distribution<int> u(0, k - 1);
  std::vector<int> out(n);
  for (auto& x : out) x = u(rng);
  return out;
}

// Points along one geodesic at spacing `step`, so d(x_i, x_j) = step * |i - j|.
Eigen::MatrixXd geodesic_line(int n, double step) {
  Eigen::MatrixXd out(n, 3);
  for (int i = 0; i < n; ++i) out.row(i) << std::cosh(step * i), std::sinh(step * i), 0.0;
  return out;
}

}  // namespace

TEST_CASE("NMI examples") {
  const std::vector<int> a{0, 0, 1, 1}, b{0, 1, 0, 1};
  CHECK(nmi(a, a) == doctest::Approx(1.0));
  CHECK(nmi(a, b) == doctest::Approx(0.0));
  CHECK(nmi(std::vector<int>{3, 3, 3, 3}, a) == doctest::Approx(0.0));
  CHECK(nmi(std::vector<int>{1, 1, 1}, std::vector<int>{2, 2, 2}) == 1.0);
  CHECK_THROWS_AS(nmi(a, std::vector<int>{0, 1}), std::invalid_argument);
}

TEST_CASE("NMI and ARI agree with independent oracles") {
  std::mt19937_64 rng(37);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 5 + static_cast<std::size_t>(t % 40);
    auto a = random_labels(rng, n, 2 + t % 5), b = random_labels(rng, n, 2 + t % 3);
    bool ok = true;
    for (auto* v : {&a, &b}) ok &= std::set<int>(v->begin(), v->end()).size() > 1;
    if (!ok) continue;
    CHECK(nmi(a, b) == doctest::Approx(oracle_nmi(a, b)).epsilon(1e-12));
    CHECK(ari(a, b) == doctest::Approx(oracle_ari(a, b)).epsilon(1e-12));
    std::vector<int> renamed(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) renamed[i] = 10 - 3 * a[i];
    CHECK(nmi(renamed, b) == doctest::Approx(nmi(a, b)).epsilon(1e-12));
    CHECK(ari(renamed, b) == doctest::Approx(ari(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("ARI examples") {
  const std::vector<int> a{0, 0, 1, 1}, b{0, 1, 0, 1};
  CHECK(ari(a, a) == doctest::Approx(1.0));
  CHECK(ari(a, b) == doctest::Approx(oracle_ari(a, b)));
  CHECK(ari(a, b) == doctest::Approx(-0.5));
  CHECK(ari(std::vector<int>{0, 0, 0}, std::vector<int>{1, 1, 1}) == 1.0);
  CHECK(ari(std::vector<int>{0, 1, 2}, std::vector<int>{0, 1, 2}) == 1.0);
}

TEST_CASE("AUC counts ties as half") {
  std::vector<double> pos{3.0, 4.0}, neg{1.0, 2.0};
  CHECK(auc_score(pos, neg) == 1.0);
  CHECK(auc_score(neg, pos) == 0.0);
  std::vector<double> same(5, 1.0);
  CHECK(auc_score(same, same) == 0.5);
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(1000), q(1000);
  for (auto& x : p) x = u(rng);
  for (auto& x : q) x = u(rng);
  double pairs = 0.0;
  for (double x : p)
    for (double y : q) pairs += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
  CHECK(auc_score(p, q) == doctest::Approx(pairs / 1e6).epsilon(1e-12));
  CHECK(std::abs(auc_score(p, q) - 0.5) < 0.05);
  std::vector<double> tp(p.size()), tq(q.size());
  for (std::size_t i = 0; i < p.size(); ++i) tp[i] = std::exp(3.0 * p[i]);
  for (std::size_t i = 0; i < q.size(); ++i) tq[i] = std::exp(3.0 * q[i]);
  CHECK(auc_score(tp, tq) == doctest::Approx(auc_score(p, q)).epsilon(1e-12));
  CHECK_THROWS_AS(auc_score(p, std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("link split is seeded and well-formed") {
  Graph g = load_graph(testing::data_path("karate.tsv"));
  LinkSplit a = link_split(g, 0.1, 5), b = link_split(g, 0.1, 5);
  CHECK(a.positives == b.positives);
  CHECK(a.negatives == b.negatives);
  CHECK(a.positives.size() == 7);
  CHECK(a.negatives.size() == 7);
  for (auto [u, v] : a.negatives) CHECK_FALSE(g.has_edge(u, v));
  CHECK(link_split(g, 0.1, 6).positives != a.positives);
  CHECK_THROWS_AS(link_split(testing::triangle(), 0.1, 0), std::invalid_argument);
}

TEST_CASE("AUC on an embedding that separates edges from non-edges") {
  // Path graph laid out on a geodesic: neighbours are always the closest pairs.
  std::vector<std::pair<int, int>> path;
  for (int i = 0; i + 1 < 12; ++i) path.push_back({i, i + 1});
  Graph g = testing::make_graph(12, path);
  CHECK(auc_link(geodesic_line(12, 0.5), g, -1.0, 0.3, 1) == 1.0);
}

TEST_CASE("shortest paths are weighted") {
  std::vector<Edge> e{{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 5.0}};
  Eigen::MatrixXd d = shortest_paths(Graph::from_edges(3, e));
  CHECK(d(0, 2) == 2.0);
  CHECK(d(2, 0) == 2.0);
}

TEST_CASE("distortion examples") {
  std::vector<std::pair<int, int>> path;
  for (int i = 0; i + 1 < 6; ++i) path.push_back({i, i + 1});
  Graph g = testing::make_graph(6, path);
  CHECK(distortion(geodesic_line(6, 1.0), g, -1.0).value < 1e-12);
  for (double c : {0.5, 1.5, 2.0})
    CHECK(distortion(geodesic_line(6, c), g, -1.0).value == doctest::Approx(std::abs(1.0 / c - 1.0)).epsilon(1e-9));
  Eigen::MatrixXd same = geodesic_line(6, 1.0);
  same.row(1) = same.row(0);
  DistortionResult r = distortion(same, g, -1.0);
  CHECK(r.coincident_pairs == 2);
  CHECK(r.value >= 2.0 * kCoincidentPenalty / 30.0);
  std::vector<Edge> split{{0, 1, 1.0}, {2, 3, 1.0}};
  CHECK_THROWS_AS(distortion(geodesic_line(4, 1.0), Graph::from_edges(4, split), -1.0), std::invalid_argument);
}

TEST_CASE("metrics report JSON omits missing values") {
  MetricsReport r;
  r.nmi = 0.5;
  r.k_natural = 3;
  nlohmann::json j = to_json(r);
  CHECK(j["nmi"] == 0.5);
  CHECK(j["k_natural"] == 3);
  CHECK_FALSE(j.contains("ari"));
  CHECK_FALSE(j.contains("k"));
}
