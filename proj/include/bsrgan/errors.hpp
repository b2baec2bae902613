#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bsrgan {

// Operand shapes do not fit the operation.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of an operation (e.g. sqrt of a negative).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Caller violated a precondition of the API.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Input file could not be parsed.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Data parsed but violates a dataset/split invariant. `clause()` names the invariant.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string clause, const std::string& detail)
      : std::runtime_error(clause + ": " + detail), clause_(std::move(clause)) {}
  const std::string& clause() const noexcept { return clause_; }

 private:
  std::string clause_;
};

// A training loss became NaN or infinite.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(std::size_t step, const std::string& what)
      : std::runtime_error("non-finite value at step " + std::to_string(step) + ": " + what),
        step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace bsrgan
