#pragma once

#include <stdexcept>
#include <string>

namespace modeflux {

// Base error carrying a stable machine-readable code alongside the message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

// Bad inputs or configuration (CLI exit status 1).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Failures of the numerics themselves (CLI exit status 2).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace modeflux
