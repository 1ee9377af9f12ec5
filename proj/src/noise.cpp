#include "rpi_forge/noise.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "rpi_forge/error.hpp"

namespace rpi_forge::noise {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

NoiseSet NoiseSet::polytope(const geom::HPolytope& shape, double scale) {
  require(scale >= 0.0, ErrorCode::kInvalidArgument, "noise set scale must be >= 0");
  NoiseSet set;
  set.polytope_.emplace(shape);
  set.scale_ = scale;
  return set;
}

NoiseSet NoiseSet::box(Index n, double bound) {
  return polytope(geom::HPolytope::cube(n, 1.0), bound);
}

NoiseSet NoiseSet::ellipsoid(const MatrixXd& Q) {
  require(geom::is_spd(Q), ErrorCode::kInvalidArgument, "ellipsoid shape must be SPD");
  NoiseSet set;
  set.ellipsoid_ = Q;
  set.scale_ = 1.0;
  return set;
}

NoiseSet NoiseSet::ball(Index n, double bound) {
  NoiseSet set = ellipsoid(MatrixXd::Identity(n, n));
  require(bound >= 0.0, ErrorCode::kInvalidArgument, "noise bound must be >= 0");
  set.scale_ = bound;
  return set;
}

Index NoiseSet::dim() const {
  return is_polytope() ? polytope_->dim() : ellipsoid_.rows();
}

const geom::GaugePolytope& NoiseSet::shape_polytope() const {
  require(is_polytope(), ErrorCode::kInvalidArgument, "noise set is not polytopic");
  return *polytope_;
}

const MatrixXd& NoiseSet::shape_ellipsoid() const {
  require(is_ellipsoid(), ErrorCode::kInvalidArgument, "noise set is not ellipsoidal");
  return ellipsoid_;
}

geom::HPolytope NoiseSet::halfspaces() const {
  return shape_polytope().facets().scaled(scale_);
}

geom::VPolytope NoiseSet::vertices() const {
  return geom::scale(shape_polytope().vertices(), scale_);
}

MatrixXd NoiseSet::shape_matrix() const { return scale_ * scale_ * shape_ellipsoid(); }

bool NoiseSet::contains(const VectorXd& z, double tol) const {
  require(z.size() == dim(), ErrorCode::kDimensionMismatch, "noise membership: dimension");
  const double g = is_polytope() ? geom::gauge(*polytope_, z)
                                 : geom::gauge(geom::Ellipsoid(ellipsoid_), z);
  return g <= scale_ + tol;
}

NoiseSet inflate(const NoiseSet& set, double factor) {
  require(factor >= 0.0, ErrorCode::kInvalidArgument, "inflation factor must be >= 0");
  NoiseSet out = set;
  out.scale_ *= factor;
  return out;
}

VectorXd unit_direction(Index n, Rng& rng) {
  std::normal_distribution<double> normal;
  VectorXd g(n);
  do {
    for (Index i = 0; i < n; ++i) g(i) = normal(rng);
  } while (g.norm() < 1e-12);
  return g.normalized();
}

VectorXd sample(const NoiseSet& set, Rng& rng, SampleMode mode) {
  const Index n = set.dim();
  if (set.scale() == 0.0) return VectorXd::Zero(n);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  if (set.is_ellipsoid()) {
    const MatrixXd L = set.shape_ellipsoid().llt().matrixL();
    const VectorXd dir = unit_direction(n, rng);
    const double radius =
        mode == SampleMode::kVertex ? 1.0 : std::pow(unit(rng), 1.0 / static_cast<double>(n));
    return set.scale() * (L * (radius * dir));
  }

  const geom::VPolytope& verts = set.shape_polytope().vertices();
  if (mode == SampleMode::kVertex) {
    std::uniform_int_distribution<Index> pick(0, verts.num_vertices() - 1);
    return set.scale() * verts.vertices.col(pick(rng));
  }
  const VectorXd lo = verts.vertices.rowwise().minCoeff();
  const VectorXd hi = verts.vertices.rowwise().maxCoeff();
  const geom::HPolytope& facets = set.shape_polytope().facets();
  VectorXd z(n);
  for (;;) {
    for (Index i = 0; i < n; ++i) z(i) = lo(i) + (hi(i) - lo(i)) * unit(rng);
    if (((facets.normals * z).array() <= facets.offsets.array()).all()) break;
  }
  return set.scale() * z;
}

double support_radius(const NoiseSet& set, const MatrixXd& P) {
  require(geom::is_spd(P), ErrorCode::kInvalidArgument, "support_radius: P must be SPD");
  require(P.rows() == set.dim(), ErrorCode::kDimensionMismatch, "support_radius: dimension");
  if (set.is_ellipsoid()) {
    const MatrixXd root = geom::spd_sqrt(set.shape_ellipsoid());
    const MatrixXd M = root * P.inverse() * root;
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
    return set.scale() * std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
  }
  const MatrixXd& V = set.shape_polytope().vertices().vertices;
  const Eigen::LDLT<MatrixXd> ldlt(P);
  double best = 0.0;
  for (Index k = 0; k < V.cols(); ++k)
    best = std::max(best, V.col(k).dot(ldlt.solve(V.col(k))));
  return set.scale() * std::sqrt(best);
}

}  // namespace rpi_forge::noise
