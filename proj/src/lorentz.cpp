#include "hypertropy/lorentz.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hypertropy {

namespace {

void check_curvature(double k) {
  if (!(k < 0.0) || !std::isfinite(k)) throw std::invalid_argument("curvature must be negative");
}

void check_same_manifold(const LorentzPoint& x, const LorentzPoint& y) {
  if (x.coords().size() != y.coords().size())
    throw std::invalid_argument("points live in different dimensions");
  if (x.curvature() != y.curvature())
    throw std::invalid_argument("points live on manifolds of different curvature");
}

}  // namespace

double inner_l(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size() || x.size() < 1)
    throw std::invalid_argument("Minkowski inner product: dimension mismatch");
  const Eigen::Index d = x.size() - 1;
  return -x[0] * y[0] + x.tail(d).dot(y.tail(d));
}

double norm_l(const Eigen::VectorXd& v) { return std::sqrt(std::abs(inner_l(v, v))); }

LorentzPoint::LorentzPoint(Eigen::VectorXd coords, double curvature)
    : coords_(std::move(coords)), curvature_(curvature) {
  check_curvature(curvature_);
  if (coords_.size() < 2) throw std::invalid_argument("Lorentz point needs at least 2 coordinates");
  if (!coords_.allFinite()) throw ManifoldError("Lorentz point has non-finite coordinates");
  const double residual = constraint_residual();
  if (residual > kManifoldTolerance * std::max(1.0, coords_.squaredNorm()) || coords_[0] <= 0.0)
    throw ManifoldError("point is off the hyperboloid (residual " + std::to_string(residual) + ")");
  if (residual > kReprojectThreshold) {
    const Eigen::Index d = coords_.size() - 1;
    coords_[0] = std::sqrt(coords_.tail(d).squaredNorm() - 1.0 / curvature_);
  }
}

LorentzPoint LorentzPoint::origin(Eigen::Index dim, double curvature) {
  check_curvature(curvature);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(dim + 1);
  c[0] = 1.0 / std::sqrt(-curvature);
  return {std::move(c), curvature};
}

LorentzPoint LorentzPoint::from_spatial(const Eigen::VectorXd& spatial, double curvature) {
  check_curvature(curvature);
  Eigen::VectorXd c(spatial.size() + 1);
  c[0] = std::sqrt(spatial.squaredNorm() - 1.0 / curvature);
  c.tail(spatial.size()) = spatial;
  return {std::move(c), curvature};
}

double LorentzPoint::constraint_residual() const {
  return std::abs(inner_l(coords_, coords_) - 1.0 / curvature_);
}

TangentVector::TangentVector(Eigen::VectorXd coords, LorentzPoint base)
    : coords_(std::move(coords)), base_(std::move(base)) {
  if (coords_.size() != base_.coords().size())
    throw std::invalid_argument("tangent vector dimension differs from its base point");
  const double scale = std::max(1.0, coords_.norm() * base_.coords().norm());
  if (std::abs(inner_l(coords_, base_.coords())) > kManifoldTolerance * scale)
    throw ManifoldError("vector is not tangent at its base point");
}

double sq_lorentz_dist(const LorentzPoint& x, const LorentzPoint& y) {
  check_same_manifold(x, y);
  // <x-y, x-y>_L equals 2/k - 2<x,y>_L on the manifold and keeps precision for close points.
  const Eigen::VectorXd diff = x.coords() - y.coords();
  return std::max(0.0, inner_l(diff, diff));
}

double geodesic_dist(const LorentzPoint& x, const LorentzPoint& y) {
  // arccosh(a) = 2 asinh(sqrt((a - 1) / 2)), evaluated from the squared distance so that
  // coincident points give exactly zero.
  const double sk = std::sqrt(-x.curvature());
  return 2.0 * std::asinh(sk * std::sqrt(sq_lorentz_dist(x, y)) / 2.0) / sk;
}

LorentzPoint exp_map(const TangentVector& v) {
  const LorentzPoint& base = v.base();
  const double sk = std::sqrt(-base.curvature());
  const double n = std::sqrt(std::max(0.0, inner_l(v.coords(), v.coords())));
  if (n * sk < 1e-15) return base;
  const double t = sk * n;
  Eigen::VectorXd out = std::cosh(t) * base.coords() + std::sinh(t) * v.coords() / t;
  return {std::move(out), base.curvature()};
}

TangentVector log_map(const LorentzPoint& base, const LorentzPoint& y) {
  check_same_manifold(base, y);
  const double k = base.curvature();
  const double alpha = k * inner_l(base.coords(), y.coords());
  if (alpha <= 1.0 || (base.coords() - y.coords()).lpNorm<Eigen::Infinity>() == 0.0)
    return {Eigen::VectorXd::Zero(base.coords().size()), base};
  const Eigen::VectorXd dir = y.coords() - alpha * base.coords();
  const double scale = std::acosh(alpha) / std::sqrt(alpha * alpha - 1.0);
  // Remove round-off along the base so the result passes the tangency check.
  Eigen::VectorXd v = scale * dir;
  v += k * inner_l(base.coords(), v) * base.coords();
  return {std::move(v), base};
}

TangentVector project_tangent(const LorentzPoint& base, const Eigen::VectorXd& u) {
  // <x,x> = 1/k, so u - k<x,u> x is orthogonal to x.
  Eigen::VectorXd v = u - base.curvature() * inner_l(base.coords(), u) * base.coords();
  return {std::move(v), base};
}

LorentzPoint centroid(std::span<const LorentzPoint> points, const Eigen::VectorXd& weights) {
  if (points.empty()) throw std::invalid_argument("centroid of an empty point set");
  if (static_cast<std::size_t>(weights.size()) != points.size())
    throw std::invalid_argument("centroid: one weight per point required");
  if ((weights.array() < 0.0).any()) throw std::invalid_argument("centroid: negative weight");
  if (!(weights.array() > 0.0).any()) throw std::invalid_argument("centroid: all weights are zero");
  const double k = points.front().curvature();
  Eigen::VectorXd s = Eigen::VectorXd::Zero(points.front().coords().size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    check_same_manifold(points.front(), points[i]);
    s += weights[static_cast<Eigen::Index>(i)] * points[i].coords();
  }
  const double ss = inner_l(s, s);
  if (!(ss < 0.0)) throw ManifoldError("weighted sum is not timelike");
  return {s / (std::sqrt(-k) * std::sqrt(-ss)), k};
}

Eigen::VectorXd to_poincare(const LorentzPoint& x) {
  return x.spatial() / (1.0 + std::sqrt(-x.curvature()) * x.time());
}

LorentzPoint lift_feature(const Eigen::VectorXd& features, double curvature) {
  if (!features.allFinite()) throw std::invalid_argument("features must be finite");
  LorentzPoint o = LorentzPoint::origin(features.size(), curvature);
  const double n = features.norm();
  if (n == 0.0) return o;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(features.size() + 1);
  v.tail(features.size()) = features / n;
  return exp_map(TangentVector(std::move(v), std::move(o)));
}

std::vector<LorentzPoint> rows_to_points(const Eigen::MatrixXd& rows, double curvature) {
  std::vector<LorentzPoint> out;
  out.reserve(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    out.emplace_back(Eigen::VectorXd(rows.row(i).transpose()), curvature);
  return out;
}

Eigen::MatrixXd points_to_rows(std::span<const LorentzPoint> points) {
  if (points.empty()) return {};
  Eigen::MatrixXd out(static_cast<Eigen::Index>(points.size()), points.front().coords().size());
  for (std::size_t i = 0; i < points.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = points[i].coords().transpose();
  return out;
}

}  // namespace hypertropy
