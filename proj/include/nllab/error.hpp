#pragma once

#include <stdexcept>
#include <string>

namespace nllab {

enum class ErrorCode {
  InvalidInput = 1,      // precondition violated by caller-supplied data
  InvalidConfig = 2,     // configuration file malformed or inconsistent
  NumericalFailure = 3,  // quadrature or linear solve did not reach tolerance
  Io = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

inline void require(bool ok, const std::string& message) {
  if (!ok) fail(ErrorCode::InvalidInput, message);
}

}  // namespace nllab
