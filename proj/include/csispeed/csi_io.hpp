#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace csispeed {

inline constexpr double kSpeedOfLight = 299792458.0;

struct RadioConfig {
  double carrier_frequency_hz = 5.805e9;
  double bandwidth_hz = 40e6;
  double sampling_rate_hz = 1500.0;
  std::vector<double> subcarrier_frequencies_hz;

  std::size_t subcarrier_count() const { return subcarrier_frequencies_hz.size(); }
  double wavelength_m() const { return kSpeedOfLight / carrier_frequency_hz; }
  double carrier_wavenumber() const;
  double wavenumber(double frequency_hz) const;

  /// Throws Error(invalid_config) listing every violated invariant.
  void validate() const;

  /// `count` subcarriers evenly spread over the occupied band, strictly inside it.
  static RadioConfig uniform(double carrier_hz, double bandwidth_hz, double sampling_rate_hz,
                             std::size_t count);
};

/// Complex channel responses H(t, f), stored row-major as T x F.
///
/// Samples are kept in single precision so that an in-memory trace and its
/// on-disk WSPD encoding carry exactly the same values.
struct CsiTrace {
  RadioConfig config;
  std::vector<double> timestamps_s;
  std::vector<std::complex<float>> frames;

  std::size_t frame_count() const { return timestamps_s.size(); }
  std::size_t subcarrier_count() const { return config.subcarrier_count(); }
  std::span<const std::complex<float>> frame(std::size_t t) const;

  /// Checks shape, finiteness and timestamp regularity.
  void validate() const;
};

/// Power response G(t, f) = |H(t, f)|^2, row-major T x F.
struct PowerResponse {
  RadioConfig config;
  std::vector<double> timestamps_s;
  std::vector<double> values;

  std::size_t frame_count() const { return timestamps_s.size(); }
  std::size_t subcarrier_count() const { return config.subcarrier_count(); }
  double at(std::size_t t, std::size_t f) const { return values[t * subcarrier_count() + f]; }
  std::span<const double> frame(std::size_t t) const;

  /// Multiplies every value by `factor` (> 0); used to check scale invariance.
  PowerResponse scaled(double factor) const;
};

/// Fraction of consecutive timestamp gaps allowed to deviate from 1/F_s by more than 10%.
inline constexpr double kMaxJitteredFraction = 0.01;
inline constexpr double kJitterTolerance = 0.10;

/// Throws on non-monotone or overly jittered timestamps.
void validate_timestamps(std::span<const double> timestamps_s, double sampling_rate_hz);

PowerResponse power_response(const CsiTrace& trace);

// WSPD v1: little-endian header ("WSPD", u32 version, u32 F, u64 T, f64 fc,
// f64 bandwidth, f64 F_s, F x f64 subcarriers) followed by T records of
// (f64 timestamp, F x (f32 re, f32 im)).
inline constexpr std::uint32_t kWspdVersion = 1;

void write_trace(const CsiTrace& trace, std::ostream& out);
void write_trace(const CsiTrace& trace, const std::filesystem::path& path);
CsiTrace read_trace(std::istream& in);
CsiTrace read_trace(const std::filesystem::path& path);

/// NDJSON import: a header line {fc, bw, fs, subcarriers} then one
/// {t, csi: [[re, im], ...]} object per frame.
CsiTrace read_ndjson_trace(std::istream& in);
CsiTrace read_ndjson_trace(const std::filesystem::path& path);

/// NDJSON for .ndjson/.jsonl/.json paths, WSPD otherwise.
CsiTrace load_trace(const std::filesystem::path& path);

}  // namespace csispeed
