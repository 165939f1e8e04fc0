#pragma once

#include <stdexcept>
#include <string>

namespace postreason {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data violates a domain invariant (bad gold, duplicate id, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Missing or inconsistent configuration: templates, manifests, registry.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A strategy was requested from a model that cannot serve it.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

/// The upstream answered with something that is not a chat completion, or
/// rejected the request with a non-retryable status.
class ProtocolError : public Error {
 public:
  ProtocolError(const std::string& what, int status = 0) : Error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

/// Retries exhausted. Carries the last HTTP status (0 when no response arrived).
class TransportError : public Error {
 public:
  TransportError(const std::string& what, int last_status)
      : Error(what), last_status_(last_status) {}
  int last_status() const noexcept { return last_status_; }

 private:
  int last_status_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Relative improvement is undefined when the baseline is zero.
class UndefinedDeltaError : public Error {
 public:
  using Error::Error;
};

}  // namespace postreason
