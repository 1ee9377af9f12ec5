#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "rpi_forge/consistency.hpp"
#include "rpi_forge/geom.hpp"
#include "rpi_forge/noise.hpp"

/// Robust positively invariant sets for e+ = A_K e + d, A_K ranging over a
/// closed-loop uncertainty set and d over a disturbance set D.
namespace rpi_forge::rpi {

/// Vertex matrices A + B K of a polytopic closed loop.
struct PolyAK {
  std::vector<Eigen::MatrixXd> matrices;

  Eigen::Index dim() const { return matrices.empty() ? 0 : matrices.front().rows(); }
};

PolyAK closed_loop(const std::vector<consistency::AbPair>& vertices, const Eigen::MatrixXd& K);

/// co(A_K S) + D, pruned to extreme points.
geom::VPolytope phi_step(const geom::VPolytope& S, const PolyAK& ak, const geom::VPolytope& D);

/// max_j |A_K^(j)|_Omega.
double c_omega(const PolyAK& ak, const geom::GaugePolytope& omega);
/// max_j |A_K^(j)|_{P^{-1}}.
double c_ellipsoidal(const PolyAK& ak, const Eigen::MatrixXd& P);

struct RpiOptions {
  std::optional<double> eps;    // default: eps_factor * (Omega-gauge radius of D)
  double eps_factor = 1e-4;
  int directions = 16;          // initial tangent count of Omega, doubled as needed
  int max_directions = 4096;
  double kappa_margin = 0.999;  // required kappa * c_{P^-1}
  int max_iter = 1000;
  std::size_t vertex_cap = 10000;
  double verify_tol = 1e-8;
};

struct PolyTube {
  geom::VPolytope set;       // E_eps
  geom::HPolytope facets;
  geom::GaugePolytope omega{geom::HPolytope::cube(1, 1.0)};
  double kappa = 1.0;
  double c_P = 0.0;          // max_j |A_K^(j)|_{P^{-1}}
  double c_omega = 0.0;
  int directions = 0;
  double eps = 0.0;
  double inflation = 0.0;    // eps / (1 - c_omega)
  int t_star = 0;
  std::vector<double> radii;  // Omega-gauge radius of S_0, S_1, ...
  double volume = 0.0;
};

/// S_{t+1} = Phi(S_t) from S_0 = {0} until S_{t+1} is inside S_t + eps Omega,
/// then E = S_t + eps/(1-c_Omega) Omega. Omega circumscribes {e'P^{-1}e <= 1}.
/// The result is checked with verify_rpi_poly before it is returned.
PolyTube iterate_rpi(const PolyAK& ak, const geom::VPolytope& D, const Eigen::MatrixXd& P,
                     const RpiOptions& options = {});

struct PolyVerifyReport {
  bool ok = true;
  double max_violation = 0.0;  // largest g'(A_K e + d) - h over facets
  Eigen::Index facet = -1;
  std::size_t matrix = 0;
  Eigen::VectorXd witness;     // an offending A_K e + d, empty when ok
};

/// Exact inclusion test A_K E + D within E, facet by facet.
PolyVerifyReport verify_rpi_poly(const geom::VPolytope& E, const PolyAK& ak,
                                 const geom::VPolytope& D, double tol = 1e-8);

/// {e : e'P^{-1}e <= r^2}.
struct EllipTube {
  Eigen::MatrixXd P;
  double r = 0.0;
  double c = 0.0;
  double dbar = 0.0;

  double volume() const;
};

/// c = sqrt(1 - beta/lambda_max(P)), dbar = sup_D |d|_{P^{-1}}, r = dbar/(1-c).
EllipTube ellip_tube(const Eigen::MatrixXd& P, double beta, const noise::NoiseSet& D);

struct EllipVerifyReport {
  bool analytic_ok = false;  // c r + dbar <= r
  bool probes_ok = false;
  std::size_t probes = 0;
  double worst_ratio = 0.0;  // max |M e + d|_{P^{-1}} / r over probes
  bool ok() const { return analytic_ok && probes_ok; }
};

/// Analytic check plus `probes` random draws of a matrix M with
/// |M|_{P^{-1}} <= c, a boundary point e of the tube and a boundary point d of
/// D. `extra` matrices (for example real closed-loop vertices) are probed on
/// top, each against random boundary pairs.
EllipVerifyReport verify_rpi_ellip(const EllipTube& tube, const noise::NoiseSet& D,
                                   std::size_t probes, std::uint64_t seed,
                                   const std::vector<Eigen::MatrixXd>& extra = {});

}  // namespace rpi_forge::rpi
