#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace tonelli {

/// Broad classification used by the CLI to pick an exit status.
enum class ErrorClass {
  validation,  ///< malformed input, contract violation (exit 2)
  numerical,   ///< solver failure, caustic, blow-up (exit 3)
};

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, ErrorClass cls, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)), class_(cls) {}

  /// Stable machine-readable tag, e.g. "domain-error" or "caustic".
  const std::string& kind() const noexcept { return kind_; }
  ErrorClass error_class() const noexcept { return class_; }

 private:
  std::string kind_;
  ErrorClass class_;
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& msg) : Error("parse-error", ErrorClass::validation, msg) {}
};

class UnsupportedPrimitive : public Error {
 public:
  explicit UnsupportedPrimitive(const std::string& name)
      : Error("unsupported-primitive", ErrorClass::validation,
              "unsupported primitive '" + name + "'"),
        name_(name) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

/// A primitive was evaluated outside its domain (log of a non-positive number, ...).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& msg) : Error("domain-error", ErrorClass::numerical, msg) {}
};

/// The velocity Hessian failed to factor as positive definite.
class TonelliViolation : public Error {
 public:
  explicit TonelliViolation(const std::string& msg)
      : Error("tonelli-violation", ErrorClass::numerical, msg) {}
};

class LegendreFailure : public Error {
 public:
  LegendreFailure(const std::string& msg, double residual)
      : Error("legendre-failure", ErrorClass::numerical, msg), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class CostFailure : public Error {
 public:
  CostFailure(const std::string& msg, double best_residual)
      : Error("cost-failure", ErrorClass::numerical, msg), best_residual_(best_residual) {}
  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

/// An iterative search ended without meeting its target.
class NonConvergence : public Error {
 public:
  explicit NonConvergence(const std::string& msg) : Error("non-convergence", ErrorClass::numerical, msg) {}
};

/// det of the flow Jacobian reached zero.
class Caustic : public Error {
 public:
  struct Crossing {
    long particle;
    double time;
  };

  Caustic(const std::string& msg, long particle, double time)
      : Error("caustic", ErrorClass::numerical, msg), particle_(particle), time_(time) {}
  /// `crossings` lists every affected particle; the first-reported one is the earliest.
  Caustic(const std::string& msg, std::vector<Crossing> crossings)
      : Error("caustic", ErrorClass::numerical, msg),
        particle_(crossings.empty() ? -1 : crossings.front().particle),
        time_(crossings.empty() ? 0.0 : crossings.front().time),
        crossings_(std::move(crossings)) {}
  /// Particle index, or -1 when the failing trajectory is not part of a particle set.
  long particle() const noexcept { return particle_; }
  double time() const noexcept { return time_; }
  const std::vector<Crossing>& crossings() const noexcept { return crossings_; }

 private:
  long particle_;
  double time_;
  std::vector<Crossing> crossings_;
};

class RiccatiBlowup : public Error {
 public:
  RiccatiBlowup(const std::string& msg, double time)
      : Error("riccati-blowup", ErrorClass::numerical, msg), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

class InadmissibleEntropy : public Error {
 public:
  InadmissibleEntropy(const std::string& msg, double witness)
      : Error("inadmissible-entropy", ErrorClass::validation, msg), witness_(witness) {}
  double witness() const noexcept { return witness_; }

 private:
  double witness_;
};

/// Caller broke an operation precondition (wrong field type, bad step, ...).
class ContractViolation : public Error {
 public:
  explicit ContractViolation(const std::string& msg)
      : Error("contract-violation", ErrorClass::validation, msg) {}
};

/// Scenario file does not satisfy the schema. `field` is a dotted JSON path.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& msg)
      : Error("validation-error", ErrorClass::validation, msg), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace tonelli
