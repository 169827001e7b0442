#include "csispeed/error.hpp"

namespace csispeed {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::invalid_config: return "invalid-config";
    case ErrorCode::input_not_found: return "input-not-found";
    case ErrorCode::io_error: return "io-error";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::bad_magic: return "bad-magic";
    case ErrorCode::version_mismatch: return "version-mismatch";
    case ErrorCode::truncated_header: return "truncated-header";
    case ErrorCode::truncated_frame: return "truncated-frame";
    case ErrorCode::non_monotone_timestamps: return "non-monotone-timestamps";
    case ErrorCode::timestamp_jitter: return "timestamp-jitter";
    case ErrorCode::non_finite_value: return "non-finite-value";
    case ErrorCode::degenerate_scene: return "degenerate-scene";
    case ErrorCode::undefined_acf: return "undefined-acf";
    case ErrorCode::zero_variance: return "zero-variance";
    case ErrorCode::insufficient_samples: return "insufficient-samples";
    case ErrorCode::trace_too_short: return "trace-too-short";
    case ErrorCode::no_estimates: return "no-estimates";
    case ErrorCode::not_converged: return "not-converged";
    case ErrorCode::insufficient_span: return "insufficient-span";
  }
  return "unknown";
}

}  // namespace csispeed
