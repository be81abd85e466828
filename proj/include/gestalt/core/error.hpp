#ifndef GESTALT_CORE_ERROR_HPP_
#define GESTALT_CORE_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace gestalt {

/// Error category, used by the CLI to pick an exit code: data errors exit
/// with 3, internal invariant violations with 4. Usage errors never reach
/// this layer (the argument parser exits with 2).
enum class ErrorKind { data, internal };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

class DataError : public Error {
public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class InternalError : public Error {
public:
  explicit InternalError(const std::string& what)
      : Error(ErrorKind::internal, what) {}
};

#define GESTALT_DEFINE_ERROR(name, base, prefix)                       \
  class name : public base {                                           \
  public:                                                              \
    explicit name(const std::string& what) : base(prefix ": " + what) {} \
  }

// Geometry / preprocessing
GESTALT_DEFINE_ERROR(DegenerateGeometry, DataError, "degenerate geometry");

// Dataset handling
GESTALT_DEFINE_ERROR(ParseError, DataError, "parse error");
GESTALT_DEFINE_ERROR(DuplicateId, DataError, "duplicate id");
GESTALT_DEFINE_ERROR(UnknownLabel, DataError, "unknown label");

// Tensor engine
GESTALT_DEFINE_ERROR(ShapeMismatch, InternalError, "shape mismatch");
GESTALT_DEFINE_ERROR(DegenerateBatch, DataError, "degenerate batch");
GESTALT_DEFINE_ERROR(InvalidLabel, DataError, "invalid label");

// Training / models
GESTALT_DEFINE_ERROR(InsufficientClasses, DataError, "insufficient classes");
GESTALT_DEFINE_ERROR(PhaseError, DataError, "phase error");
GESTALT_DEFINE_ERROR(RegionMismatch, DataError, "region mismatch");

// Ensemble / evaluation
GESTALT_DEFINE_ERROR(LabelMismatch, DataError, "label mismatch");
GESTALT_DEFINE_ERROR(EmptyEnsemble, DataError, "empty ensemble");
GESTALT_DEFINE_ERROR(LengthMismatch, DataError, "length mismatch");
GESTALT_DEFINE_ERROR(EmptyCohort, DataError, "empty cohort");

#undef GESTALT_DEFINE_ERROR

}  // namespace gestalt

#endif  // GESTALT_CORE_ERROR_HPP_
