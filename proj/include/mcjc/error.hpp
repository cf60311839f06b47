#pragma once

#include <stdexcept>
#include <string>

namespace mcjc {

enum class ErrorCode {
  invalid_argument = 1,
  config = 2,
  dimension = 3,
  convergence = 4,
  io = 5,
  internal = 6,
};

/// Exception carried through the C++ core; the C API maps `code()` onto
/// its integer status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, const std::string& what, ErrorCode code = ErrorCode::invalid_argument) {
  if (!cond) fail(code, what);
}

}  // namespace mcjc
