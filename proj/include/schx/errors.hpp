#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace schx {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (wrong representation, grid mismatch, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// An argument is outside the mathematical domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The requested kernel kind cannot be built in this dimension.
class UnsupportedKind : public Error {
 public:
  using Error::Error;
};

/// Direct-summation oracle refused because the grid is too large.
class CostGuardError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values appeared in a field.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, int component)
      : Error(what), component_(component) {}
  int component() const noexcept { return component_; }

 private:
  int component_;
};

/// The nonlinear stability guard dt * max|V| <= bound was violated.
class StabilityError : public Error {
 public:
  StabilityError(const std::string& what, double product)
      : Error(what), product_(product) {}
  double product() const noexcept { return product_; }

 private:
  double product_;
};

/// A set of parameter constraints failed; each entry names the constraint.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations)
      : Error(join(violations)), violations_(std::move(violations)) {}
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) {
      if (!out.empty()) out += "; ";
      out += s;
    }
    return out;
  }
  std::vector<std::string> violations_;
};

}  // namespace schx
