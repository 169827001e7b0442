#include "csispeed/event_detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "csispeed/error.hpp"

namespace csispeed {

namespace {
constexpr double kTimeSlack = 1e-9;
}

void FallConfig::validate() const {
  std::ostringstream problems;
  if (!(window_s > 0.0)) problems << " window_s must be > 0;";
  if (!(delta_a_threshold > 0.0)) problems << " delta_a_threshold must be > 0;";
  if (!(vmax_threshold > 0.0)) problems << " vmax_threshold must be > 0;";
  if (!(merge_s >= 0.0)) problems << " merge_s must be >= 0;";
  const std::string text = problems.str();
  if (!text.empty()) throw Error(ErrorCode::invalid_config, "invalid fall config:" + text);
  trend.validate();
}

std::vector<WindowMetrics> window_metrics(const SpeedSeries& speed, const AccelSeries& accel,
                                          double window_s) {
  if (!(window_s > 0.0)) throw Error(ErrorCode::invalid_argument, "window must be > 0");
  const auto& ta = accel.timestamps_s;
  if (ta.empty() || ta.back() - ta.front() < window_s - kTimeSlack) {
    std::ostringstream msg;
    msg << "series spans " << (ta.empty() ? 0.0 : ta.back() - ta.front())
        << " s; fall metrics need at least " << window_s << " s";
    throw Error(ErrorCode::insufficient_span, msg.str());
  }
  const auto& ts = speed.timestamps_s;
  std::vector<WindowMetrics> out;
  for (std::size_t j = 0; j < ta.size(); ++j) {
    const double start = ta[j];
    const double end = start + window_s;
    if (end > ta.back() + kTimeSlack) break;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = j; i < ta.size() && ta[i] <= end + kTimeSlack; ++i) {
      if (!accel.accel_mps2[i]) continue;
      lo = std::min(lo, *accel.accel_mps2[i]);
      hi = std::max(hi, *accel.accel_mps2[i]);
    }
    double vmax = 0.0;
    const auto first = std::lower_bound(ts.begin(), ts.end(), start - kTimeSlack);
    for (auto it = first; it != ts.end() && *it <= end + kTimeSlack; ++it) {
      const auto& v = speed.smoothed_mps[static_cast<std::size_t>(it - ts.begin())];
      if (v) vmax = std::max(vmax, *v);
    }
    WindowMetrics w;
    w.t_start_s = start;
    w.t_center_s = start + 0.5 * window_s;
    w.delta_a = hi >= lo ? hi - lo : 0.0;
    w.v_max = vmax;
    out.push_back(w);
  }
  return out;
}

FallMetrics fall_metrics(const SpeedSeries& speed, const AccelSeries& accel, double window_s) {
  const auto windows = window_metrics(speed, accel, window_s);
  FallMetrics best;
  bool found = false;
  for (const auto& w : windows) {
    if (!found || w.delta_a > best.delta_a) {
      best = {w.delta_a, w.v_max, w.t_center_s};
      found = true;
    }
  }
  return best;
}

std::vector<FallEvent> detect_falls(const SpeedSeries& speed, const AccelSeries& accel,
                                    const FallConfig& cfg) {
  cfg.validate();
  std::vector<FallEvent> events;
  // Each event covers the qualifying windows within merge_s of its first one.
  std::optional<double> anchor;
  for (const auto& w : window_metrics(speed, accel, cfg.window_s)) {
    if (w.delta_a < cfg.delta_a_threshold || w.v_max < cfg.vmax_threshold) continue;
    if (anchor && w.t_center_s - *anchor <= cfg.merge_s + kTimeSlack) {
      auto& e = events.back();
      if (w.delta_a > e.delta_a) e = {w.t_center_s, w.delta_a, w.v_max};
    } else {
      events.push_back({w.t_center_s, w.delta_a, w.v_max});
      anchor = w.t_center_s;
    }
  }
  return events;
}

std::vector<FallEvent> detect_falls(const SpeedSeries& speed, const FallConfig& cfg) {
  cfg.validate();
  return detect_falls(speed, acceleration(speed, cfg.trend), cfg);
}

}  // namespace csispeed
