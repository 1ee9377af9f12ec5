#pragma once

#include <limits>
#include <vector>

#include "rpi_forge/data.hpp"
#include "rpi_forge/noise.hpp"

/// Data-certified bounds gamma* >= |A*|_V on the induced gain of the unknown
/// state matrix, the smallest gamma with f(gamma) <= gamma where f(gamma) is
/// the worst induced norm over the consistency set built with residuals in
/// (1+gamma)V.
namespace rpi_forge::gamma {

struct GammaOptions {
  double tol = 1e-4;  // relative bracket width
  double cap = 1e3;
  int directions = 16;  // ellipsoidal route: tangent directions of Omega_E
};

struct GammaStep {
  double gamma = 0.0;
  double f = 0.0;        // partial (a lower bound) when evaluation stopped early
  bool nonempty = true;  // consistency set at gamma nonempty
  bool accepted = false;  // f(gamma) <= gamma
};

struct GammaCertificate {
  double gamma_star = 0.0;
  double f_at_gamma = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  int evaluations = 0;
  bool ellipsoidal = false;
  double kappa = 1.0;         // ellipsoidal: Omega_E sandwich constant
  int directions = 0;         // ellipsoidal: facet count of Omega_E
  double gamma_omega = 0.0;   // ellipsoidal: fixed point for Omega_E before kappa
  std::vector<GammaStep> trail;
};

/// max over the consistency set at gamma of |A|_V, by one LP per distinct
/// (facet, vertex) objective of V's shape. Stops as soon as some LP exceeds
/// `stop_above` and returns that value. Empty set -> kGammaTooSmall.
double f_poly(double gamma, const data::DataMatrices& dm, const noise::NoiseSet& V,
              double stop_above = std::numeric_limits<double>::infinity());

GammaCertificate certify_gamma_poly(const data::DataMatrices& dm, const noise::NoiseSet& V,
                                    const GammaOptions& options = {});

/// Runs the polytopic search with the tangent polytope Omega_E of V and
/// returns kappa_E times its fixed point.
GammaCertificate certify_gamma_ellip(const data::DataMatrices& dm, const noise::NoiseSet& V,
                                     const GammaOptions& options = {});

}  // namespace rpi_forge::gamma
