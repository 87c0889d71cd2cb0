#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fbfkit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

class DegenerateSetError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class ZeroOperatorError : public Error {
 public:
  using Error::Error;
};

/// Raised for invalid experiment or solver configurations.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The requested evaluation route is not available for this problem class.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

/// A solver produced a non-finite iterate. Carries the last finite state
/// and the iteration at which the blow-up happened.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t iteration,
                  std::vector<double> last_state)
      : Error(what), iteration_(iteration), last_state_(std::move(last_state)) {}

  std::size_t iteration() const noexcept { return iteration_; }
  const std::vector<double>& last_state() const noexcept { return last_state_; }

 private:
  std::size_t iteration_;
  std::vector<double> last_state_;
};

}  // namespace fbfkit
