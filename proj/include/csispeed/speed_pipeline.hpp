#pragma once

#include <optional>
#include <span>
#include <vector>

#include "csispeed/acf_engine.hpp"
#include "csispeed/csi_io.hpp"
#include "csispeed/peak_finder.hpp"

namespace csispeed {

struct SpeedSeries {
  std::vector<double> timestamps_s;
  std::vector<std::optional<double>> raw_mps;
  std::vector<std::optional<double>> smoothed_mps;
  double wavelength_m = 0.0;
  double hop_s = 0.0;

  std::size_t size() const { return timestamps_s.size(); }
  std::size_t present_count() const;
  void validate() const;

  /// Builds a fully present series where raw and smoothed both equal `speeds`.
  static SpeedSeries from_speeds(std::vector<double> timestamps_s, std::vector<double> speeds,
                                 double wavelength_m = 0.0);
};

struct SpeedConfig {
  AcfConfig acf;
  PeakFinderConfig peak;
  double min_speed_mps = 0.2;
  double max_speed_mps = 4.0;
  int median_window = 5;
  /// Blocks whose averaged lag-1 ACF stays inside +-factor/sqrt(M) are treated as motionless.
  double motion_gate_factor = 2.5;

  void validate(double sampling_rate_hz) const;
};

/// v = 0.54 lambda / tau.
double speed_from_lag(double tau_s, double wavelength_m);

/// Median over a symmetric window of present entries; windows shrink at the edges; gaps stay absent.
std::vector<std::optional<double>> median_filter(std::span<const std::optional<double>> values,
                                                 int window);

/// Speed for a single block, or nothing when no valid peak exists.
std::optional<double> block_speed(const AcfBlock& block, double wavelength_m,
                                  const SpeedConfig& cfg);

SpeedSeries estimate_speed(const PowerResponse& power, const SpeedConfig& cfg = {});
SpeedSeries estimate_speed(const PowerResponse& power, const AcfConfig& acf_cfg,
                           const PeakFinderConfig& peak_cfg);

/// Smoothed speed with gaps linearly interpolated (held constant past the ends).
std::vector<double> fill_gaps(const SpeedSeries& series);

/// Trapezoidal distance over [t0, t1] on the gap-filled smoothed speed.
double integrate_distance(const SpeedSeries& series, double t0, double t1);

}  // namespace csispeed
