#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace hypertropy {

/// Thrown when a point is not on the hyperboloid (or a vector is not tangent)
/// beyond tolerance.
class ManifoldError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline constexpr double kManifoldTolerance = 1e-9;
inline constexpr double kReprojectThreshold = 1e-12;
inline constexpr double kAcoshClamp = 1.0 + 1e-15;

/// Point on the Lorentz model {x : <x,x>_L = 1/k} with curvature k < 0.
/// Coordinates are (time, space...). Construction re-projects onto the
/// hyperboloid when the constraint residual exceeds 1e-12 and rejects points
/// that are further than 1e-9 away.
class LorentzPoint {
 public:
  LorentzPoint(Eigen::VectorXd coords, double curvature = -1.0);

  static LorentzPoint origin(Eigen::Index dim, double curvature = -1.0);
  /// Completes a spatial vector with the time coordinate that puts it on the manifold.
  static LorentzPoint from_spatial(const Eigen::VectorXd& spatial, double curvature = -1.0);

  const Eigen::VectorXd& coords() const { return coords_; }
  double curvature() const { return curvature_; }
  /// Intrinsic dimension d (coords has d + 1 entries).
  Eigen::Index dim() const { return coords_.size() - 1; }
  double time() const { return coords_[0]; }
  Eigen::VectorXd spatial() const { return coords_.tail(coords_.size() - 1); }
  double constraint_residual() const;

 private:
  Eigen::VectorXd coords_;
  double curvature_;
};

/// Vector in the tangent space at `base` (<v, base>_L = 0 within 1e-9).
class TangentVector {
 public:
  TangentVector(Eigen::VectorXd coords, LorentzPoint base);

  const Eigen::VectorXd& coords() const { return coords_; }
  const LorentzPoint& base() const { return base_; }

 private:
  Eigen::VectorXd coords_;
  LorentzPoint base_;
};

/// Minkowski inner product -x0*y0 + sum_i xi*yi.
double inner_l(const Eigen::VectorXd& x, const Eigen::VectorXd& y);
/// sqrt(|<v,v>_L|).
double norm_l(const Eigen::VectorXd& v);

/// Geodesic (arccosh) distance.
double geodesic_dist(const LorentzPoint& x, const LorentzPoint& y);
/// Squared Lorentzian distance 2/k - 2<x,y>_L. Non-negative, smooth everywhere.
double sq_lorentz_dist(const LorentzPoint& x, const LorentzPoint& y);

LorentzPoint exp_map(const TangentVector& v);
TangentVector log_map(const LorentzPoint& base, const LorentzPoint& y);
/// Projects an arbitrary ambient vector onto the tangent space at `base`.
TangentVector project_tangent(const LorentzPoint& base, const Eigen::VectorXd& u);

/// Weighted geometric centroid: the closed-form minimizer of
/// sum_i w_i * sq_lorentz_dist(mu, x_i). Throws std::invalid_argument when all
/// weights vanish and ManifoldError when the weighted sum is not timelike.
LorentzPoint centroid(std::span<const LorentzPoint> points, const Eigen::VectorXd& weights);

/// Stereographic projection to the Poincare ball: x_s / (1 + sqrt(-k) x0).
Eigen::VectorXd to_poincare(const LorentzPoint& x);

/// Lifts a Euclidean feature row onto the manifold: L2-normalize, then take the
/// exponential map at the origin of (0, x). A zero row maps to the origin.
LorentzPoint lift_feature(const Eigen::VectorXd& features, double curvature = -1.0);

/// Row-wise helpers over point batches (one point per row).
std::vector<LorentzPoint> rows_to_points(const Eigen::MatrixXd& rows, double curvature = -1.0);
Eigen::MatrixXd points_to_rows(std::span<const LorentzPoint> points);

}  // namespace hypertropy
