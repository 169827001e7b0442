#pragma once

#include <vector>

#include "csispeed/kinematics.hpp"
#include "csispeed/speed_pipeline.hpp"

namespace csispeed {

struct FallConfig {
  double window_s = 0.5;
  double delta_a_threshold = 1.6;
  double vmax_threshold = 1.2;
  /// Qualifying windows whose centers lie within this distance of an event's first window join it.
  double merge_s = 1.0;
  TrendFilterConfig trend;

  void validate() const;
};

struct WindowMetrics {
  double t_start_s = 0.0;
  double t_center_s = 0.0;
  double delta_a = 0.0;
  double v_max = 0.0;
};

struct FallMetrics {
  double delta_a = 0.0;
  double v_max = 0.0;
  double t_at_max = 0.0;
};

struct FallEvent {
  double t_s = 0.0;
  double delta_a = 0.0;
  double v_max = 0.0;
};

/// One entry per window [t_j, t_j + window_s] starting at each acceleration sample.
std::vector<WindowMetrics> window_metrics(const SpeedSeries& speed, const AccelSeries& accel,
                                          double window_s);

FallMetrics fall_metrics(const SpeedSeries& speed, const AccelSeries& accel, double window_s);

std::vector<FallEvent> detect_falls(const SpeedSeries& speed, const AccelSeries& accel,
                                    const FallConfig& cfg = {});
std::vector<FallEvent> detect_falls(const SpeedSeries& speed, const FallConfig& cfg = {});

}  // namespace csispeed
