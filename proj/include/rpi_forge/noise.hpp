#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include <Eigen/Dense>

#include "rpi_forge/geom.hpp"

/// Bounded noise sets. A set is a fixed shape (a polytope with the origin
/// inside, or an SPD ellipsoid shape) times a nonnegative scale, so a bound of
/// zero is a legal, noise-free set whose gauge is still well defined.
namespace rpi_forge::noise {

using Rng = std::mt19937_64;

enum class SampleMode { kUniform, kVertex };

class NoiseSet {
 public:
  /// scale * {z : normals z <= offsets}; offsets must be positive.
  static NoiseSet polytope(const geom::HPolytope& shape, double scale = 1.0);
  /// {|z|_inf <= bound}.
  static NoiseSet box(Eigen::Index n, double bound);
  /// {z'Q^{-1}z <= 1}.
  static NoiseSet ellipsoid(const Eigen::MatrixXd& Q);
  /// {z'z <= bound^2}, i.e. Q = bound^2 I.
  static NoiseSet ball(Eigen::Index n, double bound);

  bool is_polytope() const { return polytope_.has_value(); }
  bool is_ellipsoid() const { return !is_polytope(); }
  Eigen::Index dim() const;
  double scale() const { return scale_; }

  /// Unit-scale shapes, used for gauges (which are scale free).
  const geom::GaugePolytope& shape_polytope() const;
  const Eigen::MatrixXd& shape_ellipsoid() const;

  /// The set itself.
  geom::HPolytope halfspaces() const;
  geom::VPolytope vertices() const;
  Eigen::MatrixXd shape_matrix() const;  // Q = scale^2 * shape

  bool contains(const Eigen::VectorXd& z, double tol = geom::kDefaultTol) const;

 private:
  NoiseSet() = default;

  std::optional<geom::GaugePolytope> polytope_;
  Eigen::MatrixXd ellipsoid_;
  double scale_ = 1.0;

  friend NoiseSet inflate(const NoiseSet& set, double factor);
};

/// factor * set: polytope offsets scale by factor, ellipsoid shapes by factor^2.
NoiseSet inflate(const NoiseSet& set, double factor);

/// One draw from the set: uniform (rejection from the bounding box for
/// polytopes, radial for ellipsoids) or a uniformly chosen vertex / boundary
/// point in vertex mode.
Eigen::VectorXd sample(const NoiseSet& set, Rng& rng, SampleMode mode = SampleMode::kUniform);

/// sup_{d in set} |d|_{P^{-1}}.
double support_radius(const NoiseSet& set, const Eigen::MatrixXd& P);

/// Uniform point on the Euclidean unit sphere.
Eigen::VectorXd unit_direction(Eigen::Index n, Rng& rng);

}  // namespace rpi_forge::noise
