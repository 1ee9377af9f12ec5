#include "rpi_forge/rpi.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "rpi_forge/error.hpp"

namespace rpi_forge::rpi {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using geom::VPolytope;

PolyAK closed_loop(const std::vector<consistency::AbPair>& vertices, const MatrixXd& K) {
  require(!vertices.empty(), ErrorCode::kInvalidArgument, "closed_loop: no vertices");
  PolyAK ak;
  ak.matrices.reserve(vertices.size());
  for (const auto& v : vertices) {
    require(v.B.cols() == K.rows() && K.cols() == v.A.cols(), ErrorCode::kDimensionMismatch,
            "closed_loop: gain dimensions");
    ak.matrices.push_back(v.A + v.B * K);
  }
  return ak;
}

VPolytope phi_step(const VPolytope& S, const PolyAK& ak, const VPolytope& D) {
  require(!ak.matrices.empty(), ErrorCode::kInvalidArgument, "phi_step: empty closed loop");
  const Index n = S.dim();
  require(ak.dim() == n && D.dim() == n, ErrorCode::kDimensionMismatch, "phi_step: dimensions");
  const Index ns = S.num_vertices();
  MatrixXd images(n, ns * static_cast<Index>(ak.matrices.size()));
  for (std::size_t j = 0; j < ak.matrices.size(); ++j)
    images.middleCols(static_cast<Index>(j) * ns, ns) = ak.matrices[j] * S.vertices;
  const VPolytope hull = geom::convex_hull(VPolytope(images));
  return geom::convex_hull(geom::minkowski_sum(hull, D));
}

double c_omega(const PolyAK& ak, const geom::GaugePolytope& omega) {
  double worst = 0.0;
  for (const auto& A : ak.matrices) worst = std::max(worst, geom::induced_gauge_norm(A, omega));
  return worst;
}

double c_ellipsoidal(const PolyAK& ak, const MatrixXd& P) {
  double worst = 0.0;
  for (const auto& A : ak.matrices)
    worst = std::max(worst, geom::induced_ellipsoidal_norm(A, P));
  return worst;
}

namespace {

double gauge_radius(const VPolytope& s, const geom::GaugePolytope& omega) {
  double r = 0.0;
  for (Index k = 0; k < s.num_vertices(); ++k)
    r = std::max(r, geom::gauge(omega, s.vertices.col(k)));
  return r;
}

// Every vertex of `inner` satisfies the facets of `outer` up to `slack`.
bool vertices_inside(const VPolytope& inner, const geom::HPolytope& outer, double slack) {
  const MatrixXd lhs = outer.normals * inner.vertices;
  return ((lhs.array().colwise() - outer.offsets.array()).maxCoeff()) <= slack;
}

}  // namespace

PolyTube iterate_rpi(const PolyAK& ak, const VPolytope& D, const MatrixXd& P,
                     const RpiOptions& options) {
  require(!ak.matrices.empty(), ErrorCode::kInvalidArgument, "iterate_rpi: empty closed loop");
  const Index n = ak.dim();
  require(D.dim() == n && P.rows() == n, ErrorCode::kDimensionMismatch,
          "iterate_rpi: dimensions");
  require(geom::contains_point(D, VectorXd::Zero(n)), ErrorCode::kInvalidArgument,
          "iterate_rpi: the disturbance set must contain the origin");

  PolyTube tube;
  tube.c_P = c_ellipsoidal(ak, P);
  require(tube.c_P < 1.0, ErrorCode::kNoContraction,
          "iterate_rpi: closed loop is not a contraction in the P^{-1} norm (c = " +
              std::to_string(tube.c_P) + ")");

  int M = options.directions;
  for (;;) {
    const geom::Circumscribed circ = geom::circumscribe(P, M);
    if (circ.kappa * tube.c_P <= options.kappa_margin || n == 1) {
      tube.omega = circ.omega;
      tube.kappa = circ.kappa;
      tube.directions = circ.directions;
      break;
    }
    require(2 * M <= options.max_directions, ErrorCode::kGeometry,
            "iterate_rpi: kappa * c_P stays above the margin with " + std::to_string(M) +
                " directions");
    M *= 2;
  }
  tube.c_omega = c_omega(ak, tube.omega);
  require(tube.c_omega < 1.0, ErrorCode::kGeometry,
          "iterate_rpi: c_Omega = " + std::to_string(tube.c_omega) + " is not below 1");

  const VPolytope& omega_v = tube.omega.vertices();
  if (options.eps) {
    tube.eps = *options.eps;
  } else {
    const double dr = gauge_radius(D, tube.omega);
    tube.eps = options.eps_factor * (dr > 0.0 ? dr : 1.0);
  }
  require(tube.eps > 0.0, ErrorCode::kInvalidArgument, "iterate_rpi: eps must be positive");

  VPolytope S = VPolytope::point(VectorXd::Zero(n));
  tube.radii.push_back(0.0);
  for (int t = 0;; ++t) {
    if (t >= options.max_iter) {
      std::string history;
      const std::size_t from = tube.radii.size() > 5 ? tube.radii.size() - 5 : 0;
      for (std::size_t k = from; k < tube.radii.size(); ++k)
        history += (k > from ? ", " : "") + std::to_string(tube.radii[k]);
      const std::size_t k = tube.radii.size();
      const double ratio = k >= 3 ? (tube.radii[k - 1] - tube.radii[k - 2]) /
                                        std::max(tube.radii[k - 2] - tube.radii[k - 3], 1e-300)
                                  : 0.0;
      fail(ErrorCode::kNoConvergence,
           "iterate_rpi: no eps-stop within " + std::to_string(options.max_iter) +
               " iterations; last radii [" + history + "], increment ratio " +
               std::to_string(ratio) + " (c_Omega " + std::to_string(tube.c_omega) + ")");
    }
    VPolytope next = phi_step(S, ak, D);
    require(static_cast<std::size_t>(next.num_vertices()) <= options.vertex_cap,
            ErrorCode::kVertexLimit,
            "iterate_rpi: iterate has " + std::to_string(next.num_vertices()) +
                " vertices, above the cap");
    tube.radii.push_back(gauge_radius(next, tube.omega));

    const VPolytope grown =
        geom::convex_hull(geom::minkowski_sum(S, geom::scale(omega_v, tube.eps)));
    const geom::HPolytope grown_facets = geom::facet_enum(grown);
    const double slack = 1e-12 * (1.0 + grown_facets.offsets.cwiseAbs().maxCoeff());
    if (vertices_inside(next, grown_facets, slack)) {
      tube.t_star = t;
      break;
    }
    S = std::move(next);
  }

  tube.inflation = tube.eps / (1.0 - tube.c_omega);
  tube.set = geom::convex_hull(geom::minkowski_sum(S, geom::scale(omega_v, tube.inflation)));
  tube.facets = geom::facet_enum(tube.set);
  tube.volume = geom::volume(tube.set);

  const PolyVerifyReport check = verify_rpi_poly(tube.set, ak, D, options.verify_tol);
  if (!check.ok)
    fail(ErrorCode::kCertificationFailure,
         "iterate_rpi: returned set fails the invariance check by " +
             std::to_string(check.max_violation) + " at closed-loop vertex " +
             std::to_string(check.matrix));
  return tube;
}

PolyVerifyReport verify_rpi_poly(const VPolytope& E, const PolyAK& ak, const VPolytope& D,
                                 double tol) {
  const Index n = E.dim();
  require(ak.dim() == n && D.dim() == n, ErrorCode::kDimensionMismatch,
          "verify_rpi_poly: dimensions");
  const geom::HPolytope F = geom::facet_enum(E);
  const MatrixXd GD = F.normals * D.vertices;
  const double limit = tol * std::max(1.0, F.offsets.cwiseAbs().maxCoeff());

  PolyVerifyReport report;
  report.max_violation = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < ak.matrices.size(); ++j) {
    const MatrixXd GE = F.normals * ak.matrices[j] * E.vertices;
    for (Index l = 0; l < F.num_rows(); ++l) {
      Index ie = 0, id = 0;
      const double value = GE.row(l).maxCoeff(&ie) + GD.row(l).maxCoeff(&id) - F.offsets(l);
      if (value > report.max_violation) {
        report.max_violation = value;
        report.facet = l;
        report.matrix = j;
        if (value > limit)
          report.witness = ak.matrices[j] * E.vertices.col(ie) + D.vertices.col(id);
      }
    }
  }
  report.ok = report.max_violation <= limit;
  if (report.ok) report.witness.resize(0);
  return report;
}

double EllipTube::volume() const { return geom::ellipsoid_volume(P, r); }

EllipTube ellip_tube(const MatrixXd& P, double beta, const noise::NoiseSet& D) {
  require(geom::is_spd(P), ErrorCode::kInvalidArgument, "ellip_tube: P must be SPD");
  require(D.dim() == P.rows(), ErrorCode::kDimensionMismatch, "ellip_tube: dimensions");
  const double top = Eigen::SelfAdjointEigenSolver<MatrixXd>(P, Eigen::EigenvaluesOnly)
                         .eigenvalues()
                         .maxCoeff();
  require(beta > 0.0 && beta < top, ErrorCode::kNoContraction,
          "ellip_tube: need 0 < beta < lambda_max(P), got beta = " + std::to_string(beta));
  EllipTube tube;
  tube.P = P;
  tube.c = std::sqrt(1.0 - beta / top);
  require(tube.c < 1.0, ErrorCode::kNoContraction, "ellip_tube: contraction bound is not below 1");
  tube.dbar = noise::support_radius(D, P);
  tube.r = tube.dbar / (1.0 - tube.c);
  return tube;
}

EllipVerifyReport verify_rpi_ellip(const EllipTube& tube, const noise::NoiseSet& D,
                                   std::size_t probes, std::uint64_t seed,
                                   const std::vector<MatrixXd>& extra) {
  const Index n = tube.P.rows();
  EllipVerifyReport report;
  report.analytic_ok = tube.c * tube.r + tube.dbar <= tube.r * (1.0 + 1e-12) + 1e-300;

  const MatrixXd root = geom::spd_sqrt(tube.P);
  const MatrixXd inv_root = geom::spd_inverse_sqrt(tube.P);
  noise::Rng rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto boundary_e = [&]() -> VectorXd {
    return tube.r * (root * noise::unit_direction(n, rng));
  };
  const auto ratio = [&](const MatrixXd& M, const VectorXd& e, const VectorXd& d) {
    const double norm = (inv_root * (M * e + d)).norm();
    return tube.r > 0.0 ? norm / tube.r : (norm > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  };

  report.worst_ratio = 0.0;
  for (std::size_t k = 0; k < probes; ++k) {
    MatrixXd N(n, n);
    for (Index i = 0; i < n * n; ++i) N(i) = normal(rng);
    const double spectral = Eigen::JacobiSVD<MatrixXd>(N).singularValues()(0);
    const double level = (k % 2 == 0) ? 1.0 : unit(rng);
    N *= tube.c * level / spectral;
    const MatrixXd M = root * N * inv_root;
    const VectorXd d = noise::sample(D, rng, noise::SampleMode::kVertex);
    report.worst_ratio = std::max(report.worst_ratio, ratio(M, boundary_e(), d));
    ++report.probes;
  }
  for (const MatrixXd& M : extra) {
    for (int k = 0; k < 4; ++k) {
      const VectorXd d = noise::sample(D, rng, noise::SampleMode::kVertex);
      report.worst_ratio = std::max(report.worst_ratio, ratio(M, boundary_e(), d));
      ++report.probes;
    }
  }
  report.probes_ok = report.worst_ratio <= 1.0 + 1e-9;
  return report;
}

}  // namespace rpi_forge::rpi
