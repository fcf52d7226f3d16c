#pragma once

#include <stdexcept>
#include <string>

namespace dormancy {

/// Invalid parameters or configuration input.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A hypothesis of the requested analysis does not hold (e.g. the resident
/// equilibrium is missing or unstable).
class PreconditionError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An iterative numerical method ran out of iterations or step size.
class ConvergenceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace dormancy
