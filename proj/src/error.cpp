#include "rpi_forge/error.hpp"

namespace rpi_forge {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kInvalidGauge: return "invalid-gauge";
    case ErrorCode::kEmptySet: return "empty-set";
    case ErrorCode::kUnboundedSet: return "unbounded-set";
    case ErrorCode::kVertexLimit: return "vertex-limit";
    case ErrorCode::kNotEnoughData: return "not-enough-data";
    case ErrorCode::kInconsistentData: return "inconsistent-data";
    case ErrorCode::kGammaTooSmall: return "gamma-too-small";
    case ErrorCode::kCertificationFailure: return "certification-failure";
    case ErrorCode::kNotStabilizable: return "not-stabilizable";
    case ErrorCode::kCertificateInvalid: return "certificate-invalid";
    case ErrorCode::kIllConditioned: return "ill-conditioned";
    case ErrorCode::kNoContraction: return "no-contraction";
    case ErrorCode::kNoConvergence: return "no-convergence";
    case ErrorCode::kGeometry: return "geometry";
    case ErrorCode::kSolver: return "solver";
    case ErrorCode::kConfig: return "config";
  }
  return "unknown";
}

}  // namespace rpi_forge
