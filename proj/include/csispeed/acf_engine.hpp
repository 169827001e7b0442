#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "csispeed/csi_io.hpp"
#include "csispeed/error.hpp"

namespace csispeed {

struct AcfConfig {
  double max_lag_s = 0.2;
  double hop_s = 0.05;
  int avg_samples = 100;

  void validate(double sampling_rate_hz) const;
  std::size_t max_lag_frames(double sampling_rate_hz) const;
  /// Frames one block consumes: max lag plus M.
  std::size_t window_frames(double sampling_rate_hz) const;
};

struct AcfBlock {
  double t_center_s = 0.0;
  double sampling_rate_hz = 0.0;
  std::vector<double> lags_s;
  std::size_t subcarrier_count = 0;
  /// F x (L + 1), row-major; rows of excluded subcarriers are zero.
  std::vector<double> per_subcarrier;
  std::vector<std::uint8_t> subcarrier_used;
  std::vector<double> averaged;
  std::vector<double> differential;
  /// Midpoints of consecutive lags, where each differential sample sits.
  std::vector<double> differential_lags_s;

  std::size_t lag_count() const { return lags_s.size(); }
  std::span<const double> subcarrier(std::size_t f) const;
  std::size_t used_subcarriers() const;
};

/// Autocovariance over the last m products of `g`, mean taken over the last max_lag + m samples.
std::vector<double> sample_autocov(std::span<const double> g, std::size_t max_lag, std::size_t m);

/// Block built from the window ending at the last frame not after t_center_s.
AcfBlock acf_block(const PowerResponse& power, double t_center_s, const AcfConfig& cfg);

struct BlockResult {
  double t_center_s = 0.0;
  std::optional<AcfBlock> block;
  std::optional<ErrorCode> skip_code;
  std::string skip_reason;
};

/// Block centers: t_0 + n * hop for every center whose window fits in the trace.
std::vector<double> block_centers(const PowerResponse& power, const AcfConfig& cfg);
std::vector<BlockResult> stream_blocks(const PowerResponse& power, const AcfConfig& cfg);

/// ceil(0.54 lambda / v * F_s) + M.
std::size_t min_window_frames(double speed_mps, double wavelength_m, double sampling_rate_hz,
                              int avg_samples);
double min_window_seconds(double speed_mps, double wavelength_m, double sampling_rate_hz,
                          int avg_samples);

/// F * M * L.
std::uint64_t multiplications_per_block(std::size_t subcarriers, std::size_t avg_samples,
                                        std::size_t lags);

}  // namespace csispeed
