#pragma once

#include <stdexcept>
#include <string>

namespace rydswitch {

// Invalid input or configuration. The CLI maps these to exit code 2.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// A formula evaluated outside its domain (e.g. zero one-photon detuning).
class DomainError : public ConfigError {
  public:
    using ConfigError::ConfigError;
};

// Free-space routines require atoms sorted along the propagation axis.
class OrderingError : public ConfigError {
  public:
    using ConfigError::ConfigError;
};

// Failure of a numerical procedure. The CLI maps these to exit code 3.
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class DegenerateGeometryError : public NumericalError {
  public:
    using NumericalError::NumericalError;
};

class SingularChannelError : public NumericalError {
  public:
    using NumericalError::NumericalError;
};

class NoSolutionError : public NumericalError {
  public:
    using NumericalError::NumericalError;
};

// A jump left a zero vector behind; rate bookkeeping is inconsistent.
class ImpossibleJumpError : public NumericalError {
  public:
    using NumericalError::NumericalError;
};

} // namespace rydswitch
