#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hsid {

enum class ErrorCode {
  ShapeMismatch,
  InvalidArgument,
  OutOfRange,
  BadMagic,
  Truncated,
  DimensionOverflow,
  VersionMismatch,
  Io,
  Config,
  Unnormalized,
  Divergence,
};

std::string_view to_string(ErrorCode code);

// Every recoverable failure in the library is reported through this type.
// The code is stable and is what callers (and the CLI exit-code mapping)
// branch on; the message names the offending layer, dimension, key or path.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// True for errors caused by the caller's data, paths or configuration rather
// than by an internal failure.
bool is_input_error(ErrorCode code);

}  // namespace hsid
