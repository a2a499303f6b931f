#pragma once

#include <stdexcept>
#include <string>

namespace normloop {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller passed something that violates a documented precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Enumeration-based FD algorithms refuse relations wider than the cap.
class AttributeLimitExceeded : public Error {
 public:
  AttributeLimitExceeded(std::size_t width, std::size_t limit)
      : Error("attribute limit exceeded: " + std::to_string(width) + " attributes (limit " +
              std::to_string(limit) + ")"),
        width_(width),
        limit_(limit) {}

  std::size_t width() const noexcept { return width_; }
  std::size_t limit() const noexcept { return limit_; }

 private:
  std::size_t width_;
  std::size_t limit_;
};

// Anything that went wrong talking to a model backend. Aborts a refinement run.
class BackendError : public Error {
 public:
  using Error::Error;
};

class CredentialMissing : public BackendError {
 public:
  explicit CredentialMissing(const std::string& env_var)
      : BackendError("credential environment variable '" + env_var + "' is not set"),
        env_var_(env_var) {}

  const std::string& env_var() const noexcept { return env_var_; }

 private:
  std::string env_var_;
};

class TransportError : public BackendError {
 public:
  TransportError(const std::string& message, int attempts, int last_status)
      : BackendError(message), attempts_(attempts), last_status_(last_status) {}

  int attempts() const noexcept { return attempts_; }
  // 0 when the failure happened below HTTP (connect, timeout).
  int last_status() const noexcept { return last_status_; }

 private:
  int attempts_;
  int last_status_;
};

class ScriptExhausted : public BackendError {
 public:
  using BackendError::BackendError;
};

class ScriptMismatch : public BackendError {
 public:
  using BackendError::BackendError;
};

class VerifierReplyError : public BackendError {
 public:
  using BackendError::BackendError;
};

}  // namespace normloop
