#include <doctest.h>

#include <cmath>
#include <random>

#include "hypertropy/assignment.hpp"
#include "hypertropy/entropy.hpp"
#include "hypertropy/partition_tree.hpp"
#include "support.hpp"

using namespace hypertropy;

namespace {

AssignmentStack two_level_stack(const std::vector<int>& labels, int k) {
  return AssignmentStack::from_parents({std::vector<int>(static_cast<std::size_t>(k), 0), labels});
}

Eigen::MatrixXd random_row_stochastic(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = u(rng);
    m.row(i) /= m.row(i).sum();
  }
  return m;
}

}  // namespace

TEST_CASE("assignment stacks validate their shapes") {
  CHECK_THROWS_AS(AssignmentStack({Eigen::MatrixXd::Ones(3, 2)}), std::invalid_argument);
  CHECK_THROWS_AS(AssignmentStack({Eigen::MatrixXd::Ones(2, 1), Eigen::MatrixXd::Ones(4, 3)}), std::invalid_argument);
  AssignmentStack s = two_level_stack({0, 0, 1}, 2);
  CHECK(s.height() == 2);
  CHECK(s.widths() == std::vector<Eigen::Index>{1, 2, 3});
  CHECK(s.is_hard());
  CHECK(s.cumulative(2).isIdentity());
  CHECK(s.cumulative(0).isOnes());
  Eigen::MatrixXd bad = Eigen::MatrixXd::Constant(3, 2, 0.4);
  AssignmentStack soft({Eigen::MatrixXd::Ones(2, 1), bad});
  CHECK(soft.max_row_deviation() == doctest::Approx(0.2));
  CHECK_THROWS_AS(soft.require_row_stochastic(1e-6), std::invalid_argument);
}

TEST_CASE("level volumes conserve mass") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 20; ++t) {
    Graph g = testing::random_graph(rng, 8);
    AssignmentStack s({Eigen::MatrixXd::Ones(3, 1), random_row_stochastic(rng, 5, 3), random_row_stochastic(rng, 8, 5)});
    LevelVolumes lv = level_volumes(s, g.degrees());
    for (int h = 0; h <= 2; ++h) CHECK(lv.volume[static_cast<std::size_t>(h)].sum() == doctest::Approx(g.volume()).epsilon(1e-12));
  }
}

TEST_CASE("one-dimensional entropy of small graphs") {
  CHECK(one_dim_entropy(testing::make_graph(2, {{0, 1}})) == doctest::Approx(1.0));
  CHECK(one_dim_entropy(testing::triangle()) == doctest::Approx(std::log2(3.0)));
  const double star = -(3.0 * std::log2(3.0 / 6.0) + 3.0 * std::log2(1.0 / 6.0)) / 6.0;
  CHECK(one_dim_entropy(testing::star4()) == doctest::Approx(star).epsilon(1e-14));
  CHECK(star == doctest::Approx(1.79248).epsilon(1e-5));
}

TEST_CASE("barbell two-triangle value") {
  Graph g = testing::barbell6();
  const std::vector<int> labels{0, 0, 0, 1, 1, 1};
  const double oracle = testing::oracle_structural_information(6, g.edges(), testing::two_level(labels));
  CHECK(oracle == doctest::Approx(1.6995139).epsilon(1e-7));
  AssignmentStack s = two_level_stack(labels, 2);
  CHECK(dsi_loss(g, s) == doctest::Approx(oracle).epsilon(1e-12));
  PartitionTree t = decode(s, {}, g);
  CHECK(nodewise_structural_information(g, t) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(two_level_value(g, labels) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("uniform soft stack on the barbell") {
  Graph g = testing::barbell6();
  Eigen::MatrixXd half = Eigen::MatrixXd::Constant(6, 2, 0.5);
  AssignmentStack s({Eigen::MatrixXd::Ones(2, 1), half});
  const double oracle = testing::oracle_dsi(6, g.edges(), s.levels());
  CHECK(dsi_loss(g, s) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(oracle == doctest::Approx(2.05668).epsilon(1e-5));
}

TEST_CASE("flat stacks reduce to the one-dimensional entropy") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 20; ++t) {
    Graph g = testing::random_graph(rng, 3 + t % 8);
    CHECK(std::abs(dsi_loss(g, AssignmentStack::flat(static_cast<Eigen::Index>(g.num_nodes()))) - one_dim_entropy(g)) < 1e-12);
  }
}

TEST_CASE("hard stacks: level-wise equals node-wise on the decoded tree") {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 60; ++t) {
    const std::size_t n = 2 + static_cast<std::size_t>(t % 9);
    Graph g = testing::random_graph(rng, n);
    AssignmentStack s = testing::random_hard_stack(rng, n, 2 + t % 2);
    const double oracle = testing::oracle_structural_information(n, g.edges(), testing::oracle_tree_from_stack(s));
    CHECK(dsi_loss(g, s) == doctest::Approx(oracle).epsilon(1e-11));
    CHECK(nodewise_structural_information(g, decode(s, {}, g)) == doctest::Approx(oracle).epsilon(1e-11));
  }
}

TEST_CASE("soft stacks match the loop oracle and the recorded gradient") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 10; ++t) {
    Graph g = testing::random_graph(rng, 7);
    std::vector<Eigen::MatrixXd> levels{Eigen::MatrixXd::Ones(3, 1), random_row_stochastic(rng, 7, 3)};
    AssignmentStack s(levels);
    CHECK(dsi_loss(g, s) == doctest::Approx(testing::oracle_dsi(7, g.edges(), levels)).epsilon(1e-12));
    auto terms = dsi_terms(g, s);
    CHECK(terms[1] + terms[2] == doctest::Approx(dsi_loss(g, s)).epsilon(1e-12));
    std::vector<Eigen::MatrixXd> params{levels[1]};
    auto report = ad::grad_check(
        [&](ad::Tape& tape, std::span<const ad::Var> p) {
          std::vector<ad::Var> lv{tape.constant(levels[0]), p[0]};
          return dsi_loss(tape, g, lv);
        },
        params);
    CHECK(report.worst < 1e-6);
  }
}

TEST_CASE("dsi_loss rejects malformed stacks") {
  Graph g = testing::triangle();
  CHECK_THROWS_AS(dsi_loss(g, AssignmentStack::flat(4)), std::invalid_argument);
  AssignmentStack bad({Eigen::MatrixXd::Ones(2, 1), Eigen::MatrixXd::Constant(3, 2, 0.6)});
  CHECK_THROWS_AS(dsi_loss(g, bad), std::invalid_argument);
}

TEST_CASE("additivity decomposition equals the one-dimensional entropy") {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 2 + static_cast<std::size_t>(t % 9);
    Graph g = testing::random_graph(rng, n);
    AssignmentStack s = testing::random_hard_stack(rng, n, 1 + t % 3);
    CHECK(additivity_decomposition(g, s) == doctest::Approx(one_dim_entropy(g)).epsilon(1e-11));
  }
  CHECK(additivity_decomposition(testing::triangle(), AssignmentStack::flat(3)) == doctest::Approx(std::log2(3.0)));
  AssignmentStack soft({Eigen::MatrixXd::Ones(2, 1), Eigen::MatrixXd::Constant(3, 2, 0.5)});
  CHECK_THROWS_AS(additivity_decomposition(testing::triangle(), soft), std::invalid_argument);
}

TEST_CASE("brute force matches an independent enumeration") {
  std::mt19937_64 rng(29);
  for (int t = 0; t < 15; ++t) {
    const std::size_t n = 2 + static_cast<std::size_t>(t % 6);
    Graph g = testing::random_graph(rng, n);
    BruteForceResult r = brute_force_entropy(g);
    CHECK(r.value == doctest::Approx(testing::oracle_brute_force(n, g.edges())).epsilon(1e-12));
    CHECK(two_level_value(g, r.partition) == doctest::Approx(r.value).epsilon(1e-12));
    CHECK(nodewise_structural_information(g, r.tree) == doctest::Approx(r.value).epsilon(1e-12));
  }
  BruteForceResult b = brute_force_entropy(testing::barbell6());
  CHECK(b.value == doctest::Approx(1.6995139).epsilon(1e-7));
  CHECK(b.partition == std::vector<int>{0, 0, 0, 1, 1, 1});
  std::mt19937_64 big(1);
  CHECK_THROWS_AS(brute_force_entropy(testing::random_graph(big, 8)), SizeCapError);
}

TEST_CASE("brute force splits two disjoint edges") {
  Graph g = testing::make_graph(4, {{0, 1}, {2, 3}});
  BruteForceResult r = brute_force_entropy(g);
  CHECK(r.partition == std::vector<int>{0, 0, 1, 1});
}

TEST_CASE("the triangle's optimum is not the flat tree") {
  Graph g = testing::triangle();
  std::vector<int> argmin;
  const double oracle = testing::oracle_brute_force(3, g.edges(), &argmin);
  CHECK(oracle < std::log2(3.0));
  CHECK(oracle == doctest::Approx(1.389975).epsilon(1e-6));
  NormalizedEntropy ne = normalized_entropy(g);
  CHECK(ne.entropy == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(ne.tau == doctest::Approx(oracle / std::log2(3.0)).epsilon(1e-12));
  CHECK(ne.conductance == doctest::Approx(1.0));
  CHECK_FALSE(ne.bound_holds);
}

TEST_CASE("greedy baseline only takes strictly improving merges") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 20; ++t) {
    Graph g = testing::random_graph(rng, 4 + static_cast<std::size_t>(t % 10));
    GreedyResult r = cse_greedy(g);
    REQUIRE(!r.trajectory.empty());
    CHECK(r.trajectory.front() == doctest::Approx(one_dim_entropy(g)).epsilon(1e-12));
    for (std::size_t i = 1; i < r.trajectory.size(); ++i) CHECK(r.trajectory[i] < r.trajectory[i - 1]);
    CHECK(r.value == doctest::Approx(r.trajectory.back()).epsilon(1e-12));
    CHECK(testing::oracle_structural_information(g.num_nodes(), g.edges(), testing::two_level(r.partition)) ==
          doctest::Approx(r.value).epsilon(1e-12));
  }
}

TEST_CASE("greedy on the barbell prefers the bridge merge") {
  Graph g = testing::barbell6();
  GreedyResult r = cse_greedy(g);
  const double triangles = testing::oracle_structural_information(6, g.edges(), testing::two_level({0, 0, 0, 1, 1, 1}));
  CHECK(r.value > triangles);
  CHECK(r.value == doctest::Approx(1.865642).epsilon(1e-6));
}

TEST_CASE("zero-volume and invalid trees are rejected") {
  Graph g = testing::triangle();
  PartitionTree t(3);
  t.add_child(0, {0, 1});
  CHECK_THROWS_AS(nodewise_structural_information(g, t), std::invalid_argument);
}
