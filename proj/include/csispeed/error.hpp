#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace csispeed {

enum class ErrorCode {
  invalid_argument,
  invalid_config,
  input_not_found,
  io_error,
  parse_error,
  bad_magic,
  version_mismatch,
  truncated_header,
  truncated_frame,
  non_monotone_timestamps,
  timestamp_jitter,
  non_finite_value,
  degenerate_scene,
  undefined_acf,
  zero_variance,
  insufficient_samples,
  trace_too_short,
  no_estimates,
  not_converged,
  insufficient_span,
};

/// Stable kebab-case name used in machine-readable error output.
std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Carries the offending frame (or sample) index alongside the message.
class IndexedError : public Error {
 public:
  IndexedError(ErrorCode code, const std::string& message, std::size_t index)
      : Error(code, message), index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

}  // namespace csispeed
