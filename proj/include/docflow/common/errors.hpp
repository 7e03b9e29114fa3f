#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace docflow {

// Root of every domain error raised by the library. The HTTP layer and the
// CLI map the concrete subclasses onto status codes / exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: failed precondition, malformed request or file.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  explicit NotFoundError(const std::string& what, std::vector<std::string> candidates = {})
      : Error(what), candidates_(std::move(candidates)) {}

  // Names that *were* available (e.g. chapter headings), for diagnostics.
  const std::vector<std::string>& candidates() const noexcept { return candidates_; }

 private:
  std::vector<std::string> candidates_;
};

class AmbiguityError : public Error {
 public:
  AmbiguityError(const std::string& what, std::vector<std::string> candidates)
      : Error(what), candidates_(std::move(candidates)) {}

  const std::vector<std::string>& candidates() const noexcept { return candidates_; }

 private:
  std::vector<std::string> candidates_;
};

// Anything that went wrong talking to a model.
class ModelError : public Error {
 public:
  using Error::Error;
};

// Endpoint unreachable, timed out, or answered with a retryable status.
class TransportError : public ModelError {
 public:
  using ModelError::ModelError;
};

// The endpoint answered, but the payload was not what the wire format promises.
class ProtocolError : public ModelError {
 public:
  using ModelError::ModelError;
};

// Scripted backend has no rule left for a role.
class ScriptExhaustedError : public ModelError {
 public:
  using ModelError::ModelError;
};

// Model output could not be brought into the required structure.
class OutputFormatError : public ModelError {
 public:
  using ModelError::ModelError;
};

}  // namespace docflow
