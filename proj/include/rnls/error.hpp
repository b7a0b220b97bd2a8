#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rnls {

/// Broad failure classes; each maps onto one CLI exit code.
enum class ErrorClass { Config, Numerical, Io };

/// Every error raised by the library. `code()` is a stable machine-readable
/// identifier such as "OddPointCount" or "NonConvergence".
class Error : public std::runtime_error {
public:
  Error(ErrorClass cls, std::string code, const std::string& message)
      : std::runtime_error(message), class_(cls), code_(std::move(code)) {}

  ErrorClass error_class() const noexcept { return class_; }
  const std::string& code() const noexcept { return code_; }

private:
  ErrorClass class_;
  std::string code_;
};

inline Error config_error(std::string code, const std::string& message) {
  return Error(ErrorClass::Config, std::move(code), message);
}

inline Error numerical_error(std::string code, const std::string& message) {
  return Error(ErrorClass::Numerical, std::move(code), message);
}

inline Error io_error(std::string code, const std::string& message) {
  return Error(ErrorClass::Io, std::move(code), message);
}

inline int exit_code_for(ErrorClass cls) {
  switch (cls) {
    case ErrorClass::Config: return 2;
    case ErrorClass::Numerical: return 3;
    case ErrorClass::Io: return 4;
  }
  return 1;
}

}  // namespace rnls
