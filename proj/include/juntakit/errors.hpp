#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace juntakit {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter lies outside the mathematical domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A construction would exceed the configured state budget.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Function and space do not match (length or owning space).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Operation requires a structure (product, Schreier, slice) the space lacks.
class StructureError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of a lemma or theorem check is not met.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Construction of the slice basis failed validation.
class BasisConstructionError : public Error {
 public:
  using Error::Error;
};

/// The grid of a line model does not carry enough of the measure.
class ExtentError : public Error {
 public:
  using Error::Error;
};

/// An iterative procedure ran out of its budget; carries the best iterate.
class BudgetExhaustedError : public Error {
 public:
  BudgetExhaustedError(const std::string& what, double best_value,
                       std::vector<double> best_iterate = {})
      : Error(what), best_value_(best_value), best_iterate_(std::move(best_iterate)) {}

  double best_value() const noexcept { return best_value_; }
  const std::vector<double>& best_iterate() const noexcept { return best_iterate_; }

 private:
  double best_value_;
  std::vector<double> best_iterate_;
};

}  // namespace juntakit
