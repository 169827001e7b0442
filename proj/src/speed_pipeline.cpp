#include "csispeed/speed_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "csispeed/constants.hpp"
#include "csispeed/error.hpp"

namespace csispeed {

std::size_t SpeedSeries::present_count() const {
  return static_cast<std::size_t>(
      std::count_if(raw_mps.begin(), raw_mps.end(), [](const auto& v) { return v.has_value(); }));
}

void SpeedSeries::validate() const {
  if (raw_mps.size() != timestamps_s.size() || smoothed_mps.size() != timestamps_s.size()) {
    throw Error(ErrorCode::invalid_argument, "speed series columns differ in length");
  }
  for (std::size_t i = 0; i < size(); ++i) {
    if (i > 0 && !(timestamps_s[i] > timestamps_s[i - 1])) {
      throw IndexedError(ErrorCode::non_monotone_timestamps, "speed timestamps must increase", i);
    }
    for (const auto* v : {&raw_mps[i], &smoothed_mps[i]}) {
      if (v->has_value() && !(**v >= 0.0 && std::isfinite(**v))) {
        throw IndexedError(ErrorCode::non_finite_value, "speeds must be finite and >= 0", i);
      }
    }
  }
}

SpeedSeries SpeedSeries::from_speeds(std::vector<double> timestamps_s, std::vector<double> speeds,
                                     double wavelength_m) {
  if (timestamps_s.size() != speeds.size()) {
    throw Error(ErrorCode::invalid_argument, "timestamps and speeds differ in length");
  }
  SpeedSeries s;
  s.timestamps_s = std::move(timestamps_s);
  s.raw_mps.assign(speeds.begin(), speeds.end());
  s.smoothed_mps = s.raw_mps;
  s.wavelength_m = wavelength_m;
  if (s.size() >= 2) s.hop_s = s.timestamps_s[1] - s.timestamps_s[0];
  s.validate();
  return s;
}

void SpeedConfig::validate(double fs) const {
  std::ostringstream problems;
  for (const auto& check : {std::function<void()>([&] { acf.validate(fs); }),
                            std::function<void()>([&] { peak.validate(); })}) {
    try {
      check();
    } catch (const Error& e) {
      problems << ' ' << e.what() << ';';
    }
  }
  if (!(min_speed_mps > 0.0) || !(max_speed_mps > min_speed_mps)) {
    problems << " speed range must satisfy 0 < min < max;";
  }
  if (median_window < 1 || median_window % 2 == 0) problems << " median_window must be odd;";
  if (!(motion_gate_factor >= 0.0)) problems << " motion_gate_factor must be >= 0;";
  const std::string text = problems.str();
  if (!text.empty()) throw Error(ErrorCode::invalid_config, "invalid speed config:" + text);
}

double speed_from_lag(double tau_s, double wavelength_m) {
  if (!(tau_s > 0.0)) throw Error(ErrorCode::invalid_argument, "lag must be > 0");
  return kPeakDistanceWavelengths * wavelength_m / tau_s;
}

std::vector<std::optional<double>> median_filter(std::span<const std::optional<double>> values,
                                                 int window) {
  if (window < 1 || window % 2 == 0) {
    throw Error(ErrorCode::invalid_argument, "median window must be a positive odd number");
  }
  std::vector<std::size_t> where;
  std::vector<double> present;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i]) {
      where.push_back(i);
      present.push_back(*values[i]);
    }
  }
  std::vector<std::optional<double>> out(values.size());
  const std::size_t half = static_cast<std::size_t>(window / 2);
  std::vector<double> buf;
  for (std::size_t i = 0; i < present.size(); ++i) {
    const std::size_t h = std::min({half, i, present.size() - 1 - i});
    buf.assign(present.begin() + static_cast<std::ptrdiff_t>(i - h),
               present.begin() + static_cast<std::ptrdiff_t>(i + h + 1));
    std::nth_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(h), buf.end());
    out[where[i]] = buf[h];
  }
  return out;
}

std::optional<double> block_speed(const AcfBlock& block, double wavelength_m,
                                  const SpeedConfig& cfg) {
  if (block.averaged.size() < 2) return std::nullopt;
  const double band = cfg.motion_gate_factor / std::sqrt(static_cast<double>(cfg.acf.avg_samples));
  if (!(block.averaged[1] > band)) return std::nullopt;
  const auto peak = first_peak(block, cfg.peak);
  if (!peak || !(peak->location > 0.0)) return std::nullopt;
  const double v = speed_from_lag(peak->location, wavelength_m);
  if (v < cfg.min_speed_mps || v > cfg.max_speed_mps) return std::nullopt;
  return v;
}

SpeedSeries estimate_speed(const PowerResponse& power, const SpeedConfig& cfg) {
  const double fs = power.config.sampling_rate_hz;
  cfg.validate(fs);
  const auto centers = block_centers(power, cfg.acf);
  if (centers.empty()) {
    std::ostringstream msg;
    msg << "trace too short: needs at least "
        << static_cast<double>(cfg.acf.window_frames(fs)) / fs << " s ("
        << cfg.acf.window_frames(fs) << " frames), has " << power.frame_count() << " frames";
    throw Error(ErrorCode::trace_too_short, msg.str());
  }
  SpeedSeries series;
  series.wavelength_m = power.config.wavelength_m();
  series.hop_s = cfg.acf.hop_s;
  series.timestamps_s = centers;
  series.raw_mps.resize(centers.size());
  for (std::size_t i = 0; i < centers.size(); ++i) {
    try {
      const auto block = acf_block(power, centers[i], cfg.acf);
      series.raw_mps[i] = block_speed(block, series.wavelength_m, cfg);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::zero_variance) throw;
    }
  }
  series.smoothed_mps = median_filter(series.raw_mps, cfg.median_window);
  return series;
}

SpeedSeries estimate_speed(const PowerResponse& power, const AcfConfig& acf_cfg,
                           const PeakFinderConfig& peak_cfg) {
  SpeedConfig cfg;
  cfg.acf = acf_cfg;
  cfg.peak = peak_cfg;
  return estimate_speed(power, cfg);
}

std::vector<double> fill_gaps(const SpeedSeries& series) {
  const auto& t = series.timestamps_s;
  const auto& v = series.smoothed_mps;
  std::vector<double> out(v.size(), 0.0);
  std::optional<std::size_t> prev;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i]) continue;
    out[i] = *v[i];
    if (prev && i > *prev + 1) {
      const std::size_t a = *prev;
      for (std::size_t j = a + 1; j < i; ++j) {
        const double w = (t[j] - t[a]) / (t[i] - t[a]);
        out[j] = *v[a] + w * (*v[i] - *v[a]);
      }
    } else if (!prev) {
      for (std::size_t j = 0; j < i; ++j) out[j] = *v[i];
    }
    prev = i;
  }
  if (!prev) {
    throw Error(ErrorCode::no_estimates, "speed series has no present entries");
  }
  for (std::size_t j = *prev + 1; j < v.size(); ++j) out[j] = *v[*prev];
  return out;
}

double integrate_distance(const SpeedSeries& series, double t0, double t1) {
  const auto& t = series.timestamps_s;
  if (t.empty() || !(t1 >= t0) || t0 < t.front() - 1e-9 || t1 > t.back() + 1e-9) {
    throw Error(ErrorCode::invalid_argument, "integration range must lie within the series span");
  }
  const auto v = fill_gaps(series);
  auto value_at = [&](double x) {
    if (x <= t.front()) return v.front();
    if (x >= t.back()) return v.back();
    const auto it = std::upper_bound(t.begin(), t.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - t.begin()) - 1;
    const double w = (x - t[i]) / (t[i + 1] - t[i]);
    return v[i] + w * (v[i + 1] - v[i]);
  };
  // Knots strictly inside (t0, t1) plus the two ends.
  double total = 0.0;
  double prev_t = t0;
  double prev_v = value_at(t0);
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] <= t0 || t[i] >= t1) continue;
    total += 0.5 * (prev_v + v[i]) * (t[i] - prev_t);
    prev_t = t[i];
    prev_v = v[i];
  }
  total += 0.5 * (prev_v + value_at(t1)) * (t1 - prev_t);
  return total;
}

}  // namespace csispeed
