#pragma once

#include <stdexcept>
#include <string>

namespace ccn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated precondition on caller-supplied values.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Value out of its documented domain (e.g. vulnerability outside [0,1]).
class OutOfRange : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent file / dataset content.
class DataError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

enum class BackendErrorKind { timeout, http_status, malformed_body, all_failed };

const char* to_string(BackendErrorKind kind);

// Network-facing failure of a generation backend or remote evaluator.
class BackendError : public Error {
 public:
  BackendError(BackendErrorKind kind, std::string message, int retries = 0,
               int http_status = 0)
      : Error(std::move(message)),
        kind_(kind),
        retries_(retries),
        http_status_(http_status) {}

  BackendErrorKind kind() const { return kind_; }
  int retries() const { return retries_; }
  int http_status() const { return http_status_; }

 private:
  BackendErrorKind kind_;
  int retries_;
  int http_status_;
};

}  // namespace ccn
