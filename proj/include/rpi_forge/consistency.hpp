#pragma once

#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "rpi_forge/data.hpp"
#include "rpi_forge/geom.hpp"
#include "rpi_forge/noise.hpp"

/// Sets of matrix pairs (A, B) consistent with a trajectory and a noise bound.
///
/// The unknown is theta = vec([A B]) flattened row-major, so entry (r, c) of
/// [A B] sits at index r*(n+m) + c. With zeta = [z; u], a residual row
/// g'(z_next - [A B] zeta) <= h becomes -(g kron zeta)' theta <= h - g'z_next.
namespace rpi_forge::consistency {

struct AbPair {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
};

Eigen::VectorXd flatten(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);
AbPair unflatten(const Eigen::VectorXd& theta, Eigen::Index n, Eigen::Index m);

/// Polytope in theta-space.
struct PolyAb {
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  geom::HPolytope set;
};

/// Intersection of (z_next - A z - B u)' Qbar^{-1} (z_next - A z - B u) <= 1
/// over the sample columns.
struct EllipAb {
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  Eigen::MatrixXd Z;
  Eigen::MatrixXd U;
  Eigen::MatrixXd Znext;
  Eigen::MatrixXd Qbar;

  Eigen::Index samples() const { return Z.cols(); }
};

using AbUncertainty = std::variant<PolyAb, EllipAb>;

/// Rows for residuals in `residual_set`, one block per sample, no emptiness check.
PolyAb residual_polytope(const data::DataMatrices& dm, const geom::HPolytope& residual_set);

PolyAb build_poly_process(const data::DataMatrices& dm, const noise::NoiseSet& W);
EllipAb build_ellip_process(const data::DataMatrices& dm, const noise::NoiseSet& W);
/// Residuals in (1+gamma) V.
PolyAb build_poly_meas(const data::DataMatrices& dm, const noise::NoiseSet& V, double gamma);
EllipAb build_ellip_meas(const data::DataMatrices& dm, const noise::NoiseSet& V, double gamma);

/// Vertices of a bounded PolyAb reshaped to matrix pairs; a zero-width set
/// yields its single point.
std::vector<AbPair> vertices_ab(const PolyAb& u, const geom::EnumerationOptions& options = {});

bool membership(const AbUncertainty& u, const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                double tol = geom::kDefaultTol);

/// Componentwise bounds of theta over a PolyAb (2 n(n+m) LPs).
struct ThetaBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};
ThetaBox bounding_box(const PolyAb& u);

/// Hit-and-run draws from an EllipAb, started at a member `start`.
std::vector<AbPair> sample_members(const EllipAb& u, const AbPair& start, std::size_t count,
                                   noise::Rng& rng, int thinning = 5);

/// Random convex combinations of up to 7 randomly chosen vertices.
std::vector<AbPair> random_hull_points(const std::vector<AbPair>& vertices, std::size_t count,
                                       noise::Rng& rng);

}  // namespace rpi_forge::consistency
