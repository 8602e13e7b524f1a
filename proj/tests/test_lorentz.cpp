#include <doctest.h>

#include <cmath>
#include <random>

#include "hypertropy/lorentz.hpp"
#include "support.hpp"

using namespace hypertropy;

TEST_CASE("origin and from_spatial lie on the hyperboloid") {
  for (double k : {-1.0, -0.5, -2.0}) {
    LorentzPoint o = LorentzPoint::origin(3, k);
    CHECK(o.time() == doctest::Approx(1.0 / std::sqrt(-k)));
    CHECK(o.constraint_residual() < 1e-12);
    Eigen::VectorXd s(3);
    s << 0.3, -1.2, 2.0;
    LorentzPoint p = LorentzPoint::from_spatial(s, k);
    CHECK(inner_l(p.coords(), p.coords()) == doctest::Approx(1.0 / k).epsilon(1e-12));
  }
}

TEST_CASE("points far off the manifold are rejected, nearby ones re-projected") {
  Eigen::VectorXd x(3);
  x << 2.0, 0.0, 0.0;
  CHECK_THROWS_AS(LorentzPoint{x}, ManifoldError);
  Eigen::VectorXd y(3);
  y << std::sqrt(1.0 + 0.25) + 5e-11, 0.5, 0.0;
  LorentzPoint p(y);
  CHECK(p.constraint_residual() < 1e-14);
  CHECK_THROWS_AS((LorentzPoint{x, 1.0}), std::invalid_argument);
}

TEST_CASE("geodesic distance matches the arccosh formula") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const double k = t % 2 ? -1.0 : -0.7;
    Eigen::VectorXd a = testing::random_point(rng, 3, k), b = testing::random_point(rng, 3, k);
    LorentzPoint x(a, k), y(b, k);
    CHECK(geodesic_dist(x, y) == doctest::Approx(testing::oracle_geodesic(a, b, k)).epsilon(1e-9));
    CHECK(sq_lorentz_dist(x, y) == doctest::Approx(2.0 / k - 2.0 * testing::mink(a, b)).epsilon(1e-12));
    CHECK(geodesic_dist(x, x) == 0.0);
  }
}

TEST_CASE("exp and log maps invert each other") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 50; ++t) {
    const double k = -1.3;
    LorentzPoint x(testing::random_point(rng, 4, k), k), y(testing::random_point(rng, 4, k), k);
    TangentVector v = log_map(x, y);
    CHECK(std::abs(inner_l(v.coords(), x.coords())) < 1e-9);
    LorentzPoint back = exp_map(v);
    CHECK(geodesic_dist(back, y) < 1e-7);
    CHECK(norm_l(v.coords()) == doctest::Approx(geodesic_dist(x, y)).epsilon(1e-9));
  }
}

TEST_CASE("projection onto the tangent space") {
  LorentzPoint x = LorentzPoint::from_spatial(Eigen::Vector2d(0.4, -0.9));
  Eigen::Vector3d u(1.0, 2.0, -3.0);
  TangentVector v = project_tangent(x, u);
  CHECK(std::abs(inner_l(v.coords(), x.coords())) < 1e-12);
  Eigen::Vector3d bad(1.0, 0.0, 0.0);
  CHECK_THROWS_AS(TangentVector(bad, LorentzPoint::origin(2)), ManifoldError);
}

TEST_CASE("centroid agrees with a projected-gradient minimizer") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> wd(0.1, 2.0);
  for (int t = 0; t < 30; ++t) {
    const int d = t % 2 ? 2 : 5;
    const double k = t % 3 ? -1.0 : -0.6;
    const int n = 2 + t % 8;
    std::vector<LorentzPoint> pts;
    Eigen::MatrixXd cols(d + 1, n);
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i) {
      cols.col(i) = testing::random_point(rng, d, k);
      pts.emplace_back(cols.col(i), k);
      w[i] = wd(rng);
    }
    LorentzPoint c = centroid(pts, w);
    CHECK(c.constraint_residual() < 1e-9);
    const Eigen::VectorXd ref = testing::oracle_centroid_pg(cols, w, k);
    CHECK(testing::oracle_geodesic(c.coords(), ref, k) < 1e-6);
  }
}

TEST_CASE("centroid of a single point is the point; zero weights are rejected") {
  LorentzPoint x = LorentzPoint::from_spatial(Eigen::Vector2d(1.0, 2.0));
  std::vector<LorentzPoint> one{x};
  CHECK(geodesic_dist(centroid(one, Eigen::VectorXd::Constant(1, 3.0)), x) < 1e-9);
  CHECK_THROWS_AS(centroid(one, Eigen::VectorXd::Zero(1)), std::invalid_argument);
}

TEST_CASE("Poincare projection lands inside the ball") {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 20; ++t) {
    const double k = -2.0;
    LorentzPoint x(testing::random_point(rng, 2, k, 5.0), k);
    Eigen::VectorXd p = to_poincare(x);
    CHECK(p.norm() < 1.0 / std::sqrt(-k));
  }
  CHECK(to_poincare(LorentzPoint::origin(2)).norm() == 0.0);
}

TEST_CASE("feature lifting normalizes and maps from the origin") {
  Eigen::Vector3d f(3.0, 0.0, 4.0);
  LorentzPoint p = lift_feature(f);
  CHECK(p.constraint_residual() < 1e-12);
  CHECK(geodesic_dist(p, LorentzPoint::origin(3)) == doctest::Approx(1.0));
  CHECK(p.spatial()[0] / p.spatial()[2] == doctest::Approx(0.75));
  CHECK(lift_feature(Eigen::Vector3d::Zero()).spatial().norm() == 0.0);
}

TEST_CASE("row batches round-trip") {
  Eigen::MatrixXd rows(2, 3);
  rows.row(0) = LorentzPoint::from_spatial(Eigen::Vector2d(0.1, 0.2)).coords().transpose();
  rows.row(1) = LorentzPoint::origin(2).coords().transpose();
  auto pts = rows_to_points(rows);
  CHECK(pts.size() == 2);
  CHECK((points_to_rows(pts) - rows).norm() < 1e-15);
}
