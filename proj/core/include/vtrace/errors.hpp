#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vtrace {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define VTRACE_DECLARE_ERROR(Name)            \
  class Name : public Error {                 \
   public:                                    \
    using Error::Error;                       \
  }

// exponents
VTRACE_DECLARE_ERROR(DimensionError);
VTRACE_DECLARE_ERROR(SupercriticalError);
VTRACE_DECLARE_ERROR(ExponentRangeError);
// luxemburg
VTRACE_DECLARE_ERROR(MissingGradient);
VTRACE_DECLARE_ERROR(NonFiniteModular);
VTRACE_DECLARE_ERROR(ExponentMismatch);
VTRACE_DECLARE_ERROR(FormatError);
// geometry
VTRACE_DECLARE_ERROR(GeometryError);
VTRACE_DECLARE_ERROR(CornerError);
VTRACE_DECLARE_ERROR(ChartRangeError);
// halfspace
VTRACE_DECLARE_ERROR(DomainError);
VTRACE_DECLARE_ERROR(DivergentIntegral);
VTRACE_DECLARE_ERROR(HypothesisViolation);
VTRACE_DECLARE_ERROR(FitUnstable);
// solver
VTRACE_DECLARE_ERROR(ZeroTrace);
VTRACE_DECLARE_ERROR(MeshNotNested);
// conditions
VTRACE_DECLARE_ERROR(GammaNotEmpty);
VTRACE_DECLARE_ERROR(NotCritical);
VTRACE_DECLARE_ERROR(RegularityMissing);
// configuration
VTRACE_DECLARE_ERROR(ConfigError);

#undef VTRACE_DECLARE_ERROR

/// Malformed exponent expression; carries the 0-based offset of the
/// offending character.
class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& message, std::size_t position)
      : Error(message + " at position " + std::to_string(position)),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

}  // namespace vtrace
