#include "rpi_forge/consistency.hpp"

#include <cmath>
#include <limits>

#include "rpi_forge/error.hpp"
#include "rpi_forge/lp.hpp"

namespace rpi_forge::consistency {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd flatten(const MatrixXd& A, const MatrixXd& B) {
  require(A.rows() == B.rows(), ErrorCode::kDimensionMismatch, "flatten: row mismatch");
  const Index n = A.rows();
  const Index w = A.cols() + B.cols();
  VectorXd theta(n * w);
  for (Index r = 0; r < n; ++r) {
    theta.segment(r * w, A.cols()) = A.row(r).transpose();
    theta.segment(r * w + A.cols(), B.cols()) = B.row(r).transpose();
  }
  return theta;
}

AbPair unflatten(const VectorXd& theta, Index n, Index m) {
  require(theta.size() == n * (n + m), ErrorCode::kDimensionMismatch, "unflatten: size");
  AbPair p{MatrixXd(n, n), MatrixXd(n, m)};
  for (Index r = 0; r < n; ++r) {
    p.A.row(r) = theta.segment(r * (n + m), n).transpose();
    p.B.row(r) = theta.segment(r * (n + m) + n, m).transpose();
  }
  return p;
}

PolyAb residual_polytope(const data::DataMatrices& dm, const geom::HPolytope& residual_set) {
  const Index n = dm.n();
  const Index m = dm.m();
  const Index w = n + m;
  require(residual_set.dim() == n, ErrorCode::kDimensionMismatch,
          "consistency: residual set dimension");
  const Index q = residual_set.num_rows();
  const Index N = dm.samples();
  MatrixXd G(q * N, n * w);
  VectorXd h(q * N);
  for (Index i = 0; i < N; ++i) {
    VectorXd zeta(w);
    zeta << dm.X0.col(i), dm.U0.col(i);
    for (Index l = 0; l < q; ++l) {
      const Index row = i * q + l;
      for (Index r = 0; r < n; ++r)
        G.row(row).segment(r * w, w) = -residual_set.normals(l, r) * zeta.transpose();
      h(row) = residual_set.offsets(l) - residual_set.normals.row(l).dot(dm.X1.col(i));
    }
  }
  return PolyAb{n, m, geom::HPolytope(G, h)};
}

namespace {

bool feasible_prefix(const PolyAb& u, Index rows_per_sample, Index samples) {
  const Index rows = rows_per_sample * samples;
  return lp::find_feasible_point(u.set.normals.topRows(rows), u.set.offsets.head(rows))
      .has_value();
}

// Smallest sample index whose constraints make the set empty.
Index first_conflict(const PolyAb& u, Index rows_per_sample) {
  Index lo = 0;
  Index hi = u.set.num_rows() / rows_per_sample;
  while (hi - lo > 1) {
    const Index mid = (lo + hi) / 2;
    if (feasible_prefix(u, rows_per_sample, mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi - 1;
}

void check_nonempty(const PolyAb& u, Index rows_per_sample, ErrorCode code,
                    const std::string& what) {
  if (lp::find_feasible_point(u.set.normals, u.set.offsets)) return;
  const Index sample = first_conflict(u, rows_per_sample);
  fail(code, what + " (empty after sample " + std::to_string(sample) + ")");
}

EllipAb quadratic_set(const data::DataMatrices& dm, const MatrixXd& Qbar) {
  require(Qbar.rows() == dm.n() && geom::is_spd(Qbar), ErrorCode::kInvalidArgument,
          "consistency: residual shape must be SPD of size n");
  return EllipAb{dm.n(), dm.m(), dm.X0, dm.U0, dm.X1, Qbar};
}

}  // namespace

PolyAb build_poly_process(const data::DataMatrices& dm, const noise::NoiseSet& W) {
  require(W.is_polytope(), ErrorCode::kInvalidArgument, "build_poly_process: W must be polytopic");
  const geom::HPolytope rows = W.halfspaces();
  PolyAb u = residual_polytope(dm, rows);
  check_nonempty(u, rows.num_rows(), ErrorCode::kInconsistentData,
                 "data inconsistent with the process noise bound");
  return u;
}

EllipAb build_ellip_process(const data::DataMatrices& dm, const noise::NoiseSet& W) {
  require(W.is_ellipsoid(), ErrorCode::kInvalidArgument,
          "build_ellip_process: W must be ellipsoidal");
  require(W.scale() > 0.0, ErrorCode::kInvalidArgument,
          "build_ellip_process: zero noise bound has no quadratic description");
  return quadratic_set(dm, W.shape_matrix());
}

PolyAb build_poly_meas(const data::DataMatrices& dm, const noise::NoiseSet& V, double gamma) {
  require(V.is_polytope(), ErrorCode::kInvalidArgument, "build_poly_meas: V must be polytopic");
  require(gamma >= 0.0, ErrorCode::kInvalidArgument, "build_poly_meas: gamma must be >= 0");
  const geom::HPolytope rows = noise::inflate(V, 1.0 + gamma).halfspaces();
  PolyAb u = residual_polytope(dm, rows);
  check_nonempty(u, rows.num_rows(), ErrorCode::kGammaTooSmall,
                 "no (A,B) explains the data with residuals in (1+gamma)V; gamma too small");
  return u;
}

EllipAb build_ellip_meas(const data::DataMatrices& dm, const noise::NoiseSet& V, double gamma) {
  require(V.is_ellipsoid(), ErrorCode::kInvalidArgument, "build_ellip_meas: V must be ellipsoidal");
  require(gamma >= 0.0, ErrorCode::kInvalidArgument, "build_ellip_meas: gamma must be >= 0");
  require(V.scale() > 0.0, ErrorCode::kInvalidArgument,
          "build_ellip_meas: zero noise bound has no quadratic description");
  return quadratic_set(dm, (1.0 + gamma) * (1.0 + gamma) * V.shape_matrix());
}

std::vector<AbPair> vertices_ab(const PolyAb& u, const geom::EnumerationOptions& options) {
  geom::VPolytope verts;
  try {
    verts = geom::vertex_enum(u.set, options);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kUnboundedSet)
      fail(ErrorCode::kNotEnoughData,
           "consistency set is unbounded: data matrix [X0; U0] lacks full row rank");
    throw;
  }
  std::vector<AbPair> out;
  out.reserve(static_cast<std::size_t>(verts.num_vertices()));
  for (Index k = 0; k < verts.num_vertices(); ++k)
    out.push_back(unflatten(verts.vertices.col(k), u.n, u.m));
  return out;
}

namespace {

MatrixXd residuals(const EllipAb& u, const MatrixXd& A, const MatrixXd& B) {
  return u.Znext - A * u.Z - B * u.U;
}

}  // namespace

bool membership(const AbUncertainty& u, const MatrixXd& A, const MatrixXd& B, double tol) {
  if (const auto* poly = std::get_if<PolyAb>(&u)) {
    require(A.rows() == poly->n && B.cols() == poly->m, ErrorCode::kDimensionMismatch,
            "membership: dimension");
    return poly->set.max_violation(flatten(A, B)) <= tol;
  }
  const auto& ellip = std::get<EllipAb>(u);
  require(A.rows() == ellip.n && B.cols() == ellip.m, ErrorCode::kDimensionMismatch,
          "membership: dimension");
  const MatrixXd R = residuals(ellip, A, B);
  const MatrixXd W = ellip.Qbar.llt().matrixL().solve(R);
  return W.colwise().squaredNorm().maxCoeff() <= 1.0 + tol;
}

ThetaBox bounding_box(const PolyAb& u) {
  const Index d = u.set.dim();
  ThetaBox box{VectorXd(d), VectorXd(d)};
  for (Index i = 0; i < d; ++i) {
    for (int sgn : {1, -1}) {
      const lp::Result r = lp::maximize(u.set.normals, u.set.offsets, sgn * VectorXd::Unit(d, i));
      if (r.status == lp::Status::kUnbounded)
        fail(ErrorCode::kNotEnoughData, "consistency set is unbounded");
      require(r.optimal(), ErrorCode::kEmptySet, "bounding_box: consistency set is empty");
      (sgn > 0 ? box.upper : box.lower)(i) = sgn * r.objective;
    }
  }
  return box;
}

std::vector<AbPair> sample_members(const EllipAb& u, const AbPair& start, std::size_t count,
                                   noise::Rng& rng, int thinning) {
  require(membership(u, start.A, start.B, 1e-9), ErrorCode::kInvalidArgument,
          "sample_members: start point is not in the set");
  const Eigen::LLT<MatrixXd> llt(u.Qbar);
  const auto L = llt.matrixL();
  const Index d = u.n * (u.n + u.m);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  VectorXd theta = flatten(start.A, start.B);
  std::vector<AbPair> out;
  out.reserve(count);
  while (out.size() < count) {
    for (int s = 0; s < thinning; ++s) {
      const VectorXd dir = noise::unit_direction(d, rng);
      const AbPair here = unflatten(theta, u.n, u.m);
      const AbPair step = unflatten(dir, u.n, u.m);
      const MatrixXd R = L.solve(residuals(u, here.A, here.B));
      const MatrixXd S = L.solve(step.A * u.Z + step.B * u.U);
      // |R_i - t S_i|^2 <= 1 per column.
      double lo = -std::numeric_limits<double>::infinity();
      double hi = std::numeric_limits<double>::infinity();
      for (Index i = 0; i < R.cols(); ++i) {
        const double a = S.col(i).squaredNorm();
        if (a < 1e-300) continue;
        const double b = S.col(i).dot(R.col(i));
        const double c = R.col(i).squaredNorm() - 1.0;
        const double disc = std::max(0.0, b * b - a * c);
        lo = std::max(lo, (b - std::sqrt(disc)) / a);
        hi = std::min(hi, (b + std::sqrt(disc)) / a);
      }
      require(std::isfinite(lo) && std::isfinite(hi), ErrorCode::kNotEnoughData,
              "sample_members: set is unbounded");
      if (hi < lo) continue;
      theta += (lo + (hi - lo) * unit(rng)) * dir;
    }
    out.push_back(unflatten(theta, u.n, u.m));
  }
  return out;
}

std::vector<AbPair> random_hull_points(const std::vector<AbPair>& vertices, std::size_t count,
                                       noise::Rng& rng) {
  require(!vertices.empty(), ErrorCode::kEmptySet, "random_hull_points: no vertices");
  std::exponential_distribution<double> expo(1.0);
  const std::size_t N = vertices.size();
  std::uniform_int_distribution<std::size_t> pick(0, N - 1);
  std::uniform_int_distribution<std::size_t> support(1, std::min<std::size_t>(N, 7));
  std::vector<AbPair> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    AbPair p{MatrixXd::Zero(vertices[0].A.rows(), vertices[0].A.cols()),
             MatrixXd::Zero(vertices[0].B.rows(), vertices[0].B.cols())};
    double total = 0.0;
    // Sparse supports keep the draws near faces rather than at the centroid.
    const std::size_t terms = support(rng);
    for (std::size_t t = 0; t < terms; ++t) {
      const AbPair& v = vertices[pick(rng)];
      const double w = expo(rng);
      p.A += w * v.A;
      p.B += w * v.B;
      total += w;
    }
    p.A /= total;
    p.B /= total;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace rpi_forge::consistency
