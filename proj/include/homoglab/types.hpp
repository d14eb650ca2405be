#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace homoglab {

using Vec = std::vector<double>;
using VecView = std::span<const double>;
using VecSpan = std::span<double>;

// Error hierarchy. Every failure the library reports derives from Error so
// the CLI can map categories onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments: dimension mismatch, violated preconditions, unknown names.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values produced while integrating an evaluator.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

/// Optimizer produced a non-finite iterate; carries the offending state.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, std::string diagnostics)
      : Error(what), diagnostics_(std::move(diagnostics)) {}
  const std::string& diagnostics() const { return diagnostics_; }

 private:
  std::string diagnostics_;
};

/// A slope fell outside the tabulated hull of a homogenized Lagrangian.
class ExtrapolationError : public Error {
 public:
  using Error::Error;
};

/// A scan for an ergodic return time found nothing in the window.
class NotFoundError : public Error {
 public:
  NotFoundError(const std::string& what, double window_start, double window_length)
      : Error(what), window_start_(window_start), window_length_(window_length) {}
  double window_start() const { return window_start_; }
  double window_length() const { return window_length_; }

 private:
  double window_start_;
  double window_length_;
};

/// A sub-solver failed (tabulation, value-field assembly).
class SolverError : public Error {
 public:
  using Error::Error;
};

/// A structural invariant that must hold for any correct run was violated.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

inline double dot(VecView a, VecView b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm_sq(VecView a) { return dot(a, a); }
inline double norm(VecView a) { return std::sqrt(norm_sq(a)); }

inline void require(bool ok, const std::string& message) {
  if (!ok) throw InputError(message);
}

inline void require_dim(std::size_t got, int expected, const char* what) {
  if (static_cast<int>(got) != expected) {
    throw InputError(std::string(what) + ": dimension mismatch (got " + std::to_string(got) +
                     ", expected " + std::to_string(expected) + ")");
  }
}

/// Resolution of composite midpoint rules. For integrals along paths the
/// sample count is per subinterval; for spatial integrals it is per unit
/// length along each axis.
struct QuadratureSpec {
  int samples_per_interval = 4;
  double tolerance = 1e-6;

  void validate() const {
    require(samples_per_interval >= 1, "QuadratureSpec: samples_per_interval must be >= 1");
    require(tolerance > 0.0, "QuadratureSpec: tolerance must be > 0");
  }
  QuadratureSpec refined() const { return {2 * samples_per_interval, tolerance}; }
};

/// Result of an integral estimator together with its self-check.
struct IntegralEstimate {
  double value = 0.0;        // estimate at doubled resolution
  double coarse_value = 0.0; // estimate at the requested resolution
  std::size_t cells = 0;     // cells used at the requested resolution
  bool converged = true;     // |value - coarse_value| < tolerance

  double self_check_delta() const { return std::abs(value - coarse_value); }
};

}  // namespace homoglab
