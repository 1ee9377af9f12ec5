#include "rpi_forge/gamma.hpp"

#include <algorithm>
#include <cmath>

#include "rpi_forge/consistency.hpp"
#include "rpi_forge/error.hpp"
#include "rpi_forge/lp.hpp"

namespace rpi_forge::gamma {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// theta-space objectives g_l' A v / h_l, exact duplicates dropped.
std::vector<VectorXd> norm_objectives(const geom::GaugePolytope& shape, Index n, Index m) {
  const geom::HPolytope& f = shape.facets();
  const MatrixXd& V = shape.vertices().vertices;
  std::vector<VectorXd> out;
  for (Index l = 0; l < f.num_rows(); ++l) {
    for (Index k = 0; k < V.cols(); ++k) {
      const MatrixXd A = f.normals.row(l).transpose() * V.col(k).transpose() / f.offsets(l);
      VectorXd c = consistency::flatten(A, MatrixXd::Zero(n, m));
      const bool seen = std::any_of(out.begin(), out.end(), [&](const VectorXd& o) {
        return (o - c).lpNorm<Eigen::Infinity>() <= 1e-14 * (1.0 + c.lpNorm<Eigen::Infinity>());
      });
      if (!seen) out.push_back(std::move(c));
    }
  }
  return out;
}

}  // namespace

double f_poly(double gamma, const data::DataMatrices& dm, const noise::NoiseSet& V,
              double stop_above) {
  require(V.is_polytope(), ErrorCode::kInvalidArgument, "f_poly: V must be polytopic");
  require(gamma >= 0.0, ErrorCode::kInvalidArgument, "f_poly: gamma must be >= 0");
  const consistency::PolyAb set =
      consistency::residual_polytope(dm, noise::inflate(V, 1.0 + gamma).halfspaces());
  double best = 0.0;
  for (const VectorXd& c : norm_objectives(V.shape_polytope(), dm.n(), dm.m())) {
    const lp::Result r = lp::maximize(set.set.normals, set.set.offsets, c);
    if (r.status == lp::Status::kInfeasible)
      fail(ErrorCode::kGammaTooSmall, "consistency set empty at gamma = " + std::to_string(gamma));
    if (r.status == lp::Status::kUnbounded)
      fail(ErrorCode::kNotEnoughData, "consistency set unbounded: data not informative enough");
    require(r.optimal(), ErrorCode::kSolver,
            std::string("f_poly: LP ended with status ") + lp::to_string(r.status));
    best = std::max(best, r.objective);
    if (best > stop_above) break;
  }
  return best;
}

GammaCertificate certify_gamma_poly(const data::DataMatrices& dm, const noise::NoiseSet& V,
                                    const GammaOptions& options) {
  require(options.tol > 0.0 && options.cap > 0.0, ErrorCode::kInvalidArgument,
          "certify_gamma: tol and cap must be positive");
  GammaCertificate cert;

  auto evaluate = [&](double g) {
    GammaStep step;
    step.gamma = g;
    try {
      step.f = f_poly(g, dm, V, g);
      step.accepted = step.f <= g;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kGammaTooSmall) throw;
      step.nonempty = false;
      step.f = std::numeric_limits<double>::infinity();
    }
    ++cert.evaluations;
    cert.trail.push_back(step);
    return step;
  };

  // Bracket by doubling.
  double g = 0.0;
  GammaStep step = evaluate(g);
  double lo = 0.0;
  while (!step.accepted) {
    lo = g;
    if (g >= options.cap)
      fail(ErrorCode::kCertificationFailure,
           "no self-consistent gamma below cap " + std::to_string(options.cap));
    g = std::min(std::max(2.0 * g, 1.0), options.cap);
    step = evaluate(g);
  }
  double hi = g;
  double f_hi = step.f;
  if (hi > 0.0) {
    while (hi - lo > options.tol * std::max(1.0, hi)) {
      const double mid = 0.5 * (lo + hi);
      const GammaStep s = evaluate(mid);
      if (s.accepted) {
        hi = mid;
        f_hi = s.f;
      } else {
        lo = mid;
      }
    }
  }
  cert.gamma_star = hi;
  cert.f_at_gamma = f_hi;
  cert.lo = lo;
  cert.hi = hi;
  return cert;
}

GammaCertificate certify_gamma_ellip(const data::DataMatrices& dm, const noise::NoiseSet& V,
                                     const GammaOptions& options) {
  require(V.is_ellipsoid(), ErrorCode::kInvalidArgument,
          "certify_gamma_ellip: V must be ellipsoidal");
  require(options.directions >= 2 * V.dim(), ErrorCode::kInvalidArgument,
          "certify_gamma_ellip: need at least 2n directions");
  const geom::Circumscribed omega = geom::circumscribe(V.shape_ellipsoid(), options.directions);
  const noise::NoiseSet omega_set = noise::NoiseSet::polytope(omega.omega.facets(), V.scale());
  GammaCertificate cert = certify_gamma_poly(dm, omega_set, options);
  cert.ellipsoidal = true;
  cert.kappa = omega.kappa;
  cert.directions = omega.directions;
  cert.gamma_omega = cert.gamma_star;
  cert.gamma_star = omega.kappa * cert.gamma_omega;
  return cert;
}

}  // namespace rpi_forge::gamma
