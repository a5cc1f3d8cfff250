#pragma once

#include <stdexcept>
#include <string>

namespace terraseg {

// Base class of every error raised by the library. `kind()` is a stable
// machine-readable tag used by the CLI when it reports failures.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "error"; }
};

class InvalidInput : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "invalid-input"; }
};

// A loss was asked to average over an empty region (no masked pixel,
// no masked patch, no labeled pixel).
class EmptyRegion : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "empty-region"; }
};

class IoError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "io"; }
};

class GenerationFailure : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "generation-failure"; }
};

class UndefinedMetric : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "undefined-metric"; }
};

class Divergence : public Error {
 public:
  Divergence(const std::string& what, long step) : Error(what), step_(step) {}
  const char* kind() const noexcept override { return "divergence"; }
  long step() const noexcept { return step_; }

 private:
  long step_;
};

}  // namespace terraseg
