#pragma once

#include <stdexcept>
#include <string>

namespace sfc {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error { using Error::Error; };
class ValidationError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class NoPathError : public Error { using Error::Error; };
class CapacityError : public Error { using Error::Error; };
class DomainError : public Error { using Error::Error; };
class ShapeError : public Error { using Error::Error; };
class NotReadyError : public Error { using Error::Error; };
class CheckpointError : public Error { using Error::Error; };
class CheckpointMissingError : public CheckpointError { using CheckpointError::CheckpointError; };
class SimulationInvariantError : public Error { using Error::Error; };
class NonConvergence : public Error { using Error::Error; };

}  // namespace sfc
