#pragma once

#include <stdexcept>
#include <string>

namespace refrakt {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
  public:
    using Error::Error;
};

class DegenerateNeighborhood : public Error {
  public:
    using Error::Error;
};

class EmptyIsoSurface : public Error {
  public:
    using Error::Error;
};

class EmptyHull : public Error {
  public:
    using Error::Error;
};

class NoValidNormal : public Error {
  public:
    using Error::Error;
};

class NonFiniteEnergy : public Error {
  public:
    using Error::Error;
};

class DegenerateProjection : public Error {
  public:
    using Error::Error;
};

class InsufficientPoints : public Error {
  public:
    using Error::Error;
};

class InconsistentNormals : public Error {
  public:
    using Error::Error;
};

class IoError : public Error {
  public:
    using Error::Error;
};

class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Wraps an error raised inside a named pipeline stage.
class StageError : public Error {
  public:
    StageError(std::string stage, const std::string& what)
        : Error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

  private:
    std::string stage_;
};

}  // namespace refrakt
