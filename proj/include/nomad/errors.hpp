#ifndef NOMAD_ERRORS_HPP
#define NOMAD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace nomad {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define NOMAD_DEFINE_ERROR(Name)             \
  class Name : public Error {                \
   public:                                   \
    explicit Name(const std::string& what)   \
        : Error(#Name ": " + what) {}        \
  }

/// Determinant is non-positive or numerically zero.
NOMAD_DEFINE_ERROR(SingularityError);
/// An intermediate value left the floating-point range.
NOMAD_DEFINE_ERROR(OverflowError);
NOMAD_DEFINE_ERROR(ConfigError);
/// A matrix that must be DAG-supported contains a directed cycle.
NOMAD_DEFINE_ERROR(CycleError);
NOMAD_DEFINE_ERROR(NonNegativityError);
/// A weight matrix with a nonzero diagonal or a non-finite entry.
NOMAD_DEFINE_ERROR(InvariantError);
/// Evaluation requested outside the domain of the acyclicity function.
NOMAD_DEFINE_ERROR(DomainError);
NOMAD_DEFINE_ERROR(DimensionError);
/// The inner stepsize underflowed without finding an acceptable step.
NOMAD_DEFINE_ERROR(LineSearchStall);
NOMAD_DEFINE_ERROR(DegenerateTruthError);
NOMAD_DEFINE_ERROR(DataError);
NOMAD_DEFINE_ERROR(SamplingError);

#undef NOMAD_DEFINE_ERROR

}  // namespace nomad

#endif  // NOMAD_ERRORS_HPP
