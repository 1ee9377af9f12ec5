#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "rpi_forge/conic.hpp"
#include "rpi_forge/consistency.hpp"

/// Robust state-feedback synthesis with a common quadratic contraction
/// certificate (A+BK) P (A+BK)' - P + beta I <= 0 over an uncertainty set.
namespace rpi_forge::synth {

enum class Method { kVertex, kSProcedure };

const char* to_string(Method method);

struct Certificate {
  Eigen::MatrixXd P;
  Eigen::MatrixXd K;
  Eigen::MatrixXd Y;
  double beta = 0.0;
  Eigen::VectorXd multipliers;  // S-procedure only
  Method method = Method::kVertex;
  conic::SolveReport report;
};

struct SynthOptions {
  double rho = 1.0;           // P <= rho I
  double mu_ratio = 1e-6;     // P >= mu_ratio * rho I
  std::optional<Eigen::MatrixXd> fixed_P;  // optimize over (Y, beta) only
  double beta_min = 1e-9;
  double max_condition = 1e10;
  double validation_tol = 1e-8;
  conic::SolverOptions solver;
};

/// max beta subject to the Schur-form LMI at every vertex pair.
Certificate synth_vertex(const std::vector<consistency::AbPair>& vertices,
                         const SynthOptions& options = {});

/// max beta subject to the multiplier LMI built from the quadratic samples.
Certificate synth_sproc(const consistency::EllipAb& samples, const SynthOptions& options = {});

struct ValidationReport {
  double worst_residual = 0.0;  // largest eigenvalue of the Lyapunov residual
  std::size_t worst_probe = 0;
  std::size_t probes = 0;
  bool passed = false;
};

/// Largest eigenvalue of (A+BK)P(A+BK)' - P + beta I over the probes; throws
/// kCertificateInvalid above `tol` unless `throw_on_failure` is false.
ValidationReport validate_certificate(const Certificate& cert,
                                      const std::vector<consistency::AbPair>& probes,
                                      double tol = 1e-8, bool throw_on_failure = true);

/// sqrt(1 - beta / lambda_max(P)): bound on the closed-loop P^{-1}-norm gain.
double contraction_bound(const Certificate& cert);

}  // namespace rpi_forge::synth
