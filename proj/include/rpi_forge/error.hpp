#pragma once

#include <stdexcept>
#include <string>

namespace rpi_forge {

enum class ErrorCode {
  kInvalidArgument,
  kDimensionMismatch,
  kInvalidGauge,
  kEmptySet,
  kUnboundedSet,
  kVertexLimit,
  kNotEnoughData,
  kInconsistentData,
  kGammaTooSmall,
  kCertificationFailure,
  kNotStabilizable,
  kCertificateInvalid,
  kIllConditioned,
  kNoContraction,
  kNoConvergence,
  kGeometry,
  kSolver,
  kConfig,
};

const char* to_string(ErrorCode code);

/// Single exception type for the toolkit; `code()` tells callers (and the CLI
/// exit-code mapping) which stage contract was broken.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

}  // namespace rpi_forge
