#pragma once

#include <stdexcept>
#include <string>

namespace onebit {

/// Base of every error raised by the library. The CLI maps ValidationError
/// subclasses to exit status 1 and everything else to exit status 2.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
  public:
    using Error::Error;
};

/// A value outside the mathematical domain of an operation.
class DomainError : public ValidationError {
  public:
    using ValidationError::ValidationError;
};

/// An inconsistent or infeasible configuration.
class ConfigError : public ValidationError {
  public:
    using ValidationError::ValidationError;
};

/// A malformed input file. The message always names the location.
class ParseError : public ValidationError {
  public:
    using ValidationError::ValidationError;
};

/// An object used before it reached the state the call needs.
class StateError : public Error {
  public:
    using Error::Error;
};

/// Training diverged; carries the position where the loss went non-finite.
class TrainingError : public Error {
  public:
    TrainingError(const std::string& what, std::size_t epoch, std::size_t batch)
        : Error(what), epoch_(epoch), batch_(batch) {}

    std::size_t epoch() const noexcept { return epoch_; }
    std::size_t batch() const noexcept { return batch_; }

  private:
    std::size_t epoch_;
    std::size_t batch_;
};

}  // namespace onebit
