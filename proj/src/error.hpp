// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace bg {

enum class ErrorCode {
  InvalidArgument = 1,
  Parse,
  Io,
  NotFound,
  DegenerateGeometry,
  ShapeMismatch,
  Numerical,
};

/// Exception carrying a category so the C boundary can map it to a status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace bg
