#pragma once

#include <stdexcept>
#include <string>

namespace pcanet {

// Error taxonomy. The CLI maps each family onto a stable exit code:
// PreconditionError -> 2 (usage), DataError -> 3, NumericalError -> 4.

class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Block or stride combination the output stage cannot execute.
class InfeasibleConfigError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public DataError {
 public:
  using DataError::DataError;
};

/// A sweep result set that does not cover the cells an analysis needs.
class IncompleteGridError : public DataError {
 public:
  using DataError::DataError;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularSystemError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace pcanet
