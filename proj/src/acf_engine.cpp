#include "csispeed/acf_engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "csispeed/constants.hpp"

namespace csispeed {

void AcfConfig::validate(double fs) const {
  std::ostringstream problems;
  if (!(max_lag_s * fs >= 10.0 - 1e-9)) problems << " max_lag_s * F_s must cover >= 10 lags;";
  if (avg_samples < 2) problems << " avg_samples must be >= 2;";
  if (!(hop_s > 0.0) || !std::isfinite(hop_s)) problems << " hop_s must be > 0;";
  const std::string text = problems.str();
  if (!text.empty()) throw Error(ErrorCode::invalid_config, "invalid ACF config:" + text);
}

std::size_t AcfConfig::max_lag_frames(double fs) const {
  return static_cast<std::size_t>(std::llround(max_lag_s * fs));
}

std::size_t AcfConfig::window_frames(double fs) const {
  return max_lag_frames(fs) + static_cast<std::size_t>(avg_samples);
}

std::span<const double> AcfBlock::subcarrier(std::size_t f) const {
  return {per_subcarrier.data() + f * lag_count(), lag_count()};
}

std::size_t AcfBlock::used_subcarriers() const {
  return static_cast<std::size_t>(std::count(subcarrier_used.begin(), subcarrier_used.end(), 1));
}

namespace {

// Writes gamma(0..max_lag) of the window into `out`; returns false for a constant window.
bool autocov_into(std::span<const double> window, std::size_t max_lag, std::size_t m,
                  std::vector<double>& centered, double* out) {
  const auto [lo, hi] = std::minmax_element(window.begin(), window.end());
  if (*lo == *hi) return false;
  double mean = 0.0;
  for (double v : window) mean += v;
  mean /= static_cast<double>(window.size());
  centered.resize(window.size());
  for (std::size_t i = 0; i < window.size(); ++i) centered[i] = window[i] - mean;
  const std::size_t first = window.size() - m;
  const double* tail = centered.data() + first;
  for (std::size_t lag = 0; lag <= max_lag; ++lag) {
    const double* lagged = tail - lag;
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += lagged[i] * tail[i];
    out[lag] = acc / static_cast<double>(m);
  }
  return out[0] > 0.0;
}

}  // namespace

std::vector<double> sample_autocov(std::span<const double> g, std::size_t max_lag, std::size_t m) {
  if (m < 1 || g.size() < max_lag + m) {
    throw Error(ErrorCode::insufficient_samples, "series shorter than max_lag + m");
  }
  std::vector<double> centered;
  std::vector<double> gamma(max_lag + 1, 0.0);
  if (!autocov_into(g.subspan(g.size() - (max_lag + m)), max_lag, m, centered, gamma.data())) {
    throw Error(ErrorCode::zero_variance, "series has zero variance");
  }
  return gamma;
}

AcfBlock acf_block(const PowerResponse& power, double t_center_s, const AcfConfig& cfg) {
  const double fs = power.config.sampling_rate_hz;
  cfg.validate(fs);
  const std::size_t lags = cfg.max_lag_frames(fs);
  const std::size_t m = static_cast<std::size_t>(cfg.avg_samples);
  const std::size_t need = lags + m;
  const auto& ts = power.timestamps_s;
  const auto end_it = std::upper_bound(ts.begin(), ts.end(), t_center_s + 1e-9 / fs);
  const std::size_t end = static_cast<std::size_t>(end_it - ts.begin());
  if (end < need) {
    std::ostringstream msg;
    msg << "block at t=" << t_center_s << " s needs " << need << " frames, has " << end;
    throw Error(ErrorCode::insufficient_samples, msg.str());
  }
  const std::size_t start = end - need;
  const std::size_t subcarriers = power.subcarrier_count();

  AcfBlock block;
  block.t_center_s = t_center_s;
  block.sampling_rate_hz = fs;
  block.subcarrier_count = subcarriers;
  block.lags_s.resize(lags + 1);
  for (std::size_t i = 0; i <= lags; ++i) block.lags_s[i] = static_cast<double>(i) / fs;
  block.per_subcarrier.assign(subcarriers * (lags + 1), 0.0);
  block.subcarrier_used.assign(subcarriers, 0);
  block.averaged.assign(lags + 1, 0.0);

  std::vector<double> column(need);
  std::vector<double> centered;
  std::size_t used = 0;
  for (std::size_t f = 0; f < subcarriers; ++f) {
    for (std::size_t i = 0; i < need; ++i) column[i] = power.values[(start + i) * subcarriers + f];
    double* row = block.per_subcarrier.data() + f * (lags + 1);
    if (!autocov_into(column, lags, m, centered, row)) {
      std::fill(row, row + lags + 1, 0.0);
      continue;
    }
    const double g0 = row[0];
    for (std::size_t i = 0; i <= lags; ++i) row[i] /= g0;
    row[0] = 1.0;
    block.subcarrier_used[f] = 1;
    ++used;
    for (std::size_t i = 0; i <= lags; ++i) block.averaged[i] += row[i];
  }
  if (used == 0) {
    throw Error(ErrorCode::zero_variance, "all subcarriers have zero variance in this block");
  }
  for (double& v : block.averaged) v /= static_cast<double>(used);
  block.averaged[0] = 1.0;

  block.differential.resize(lags);
  block.differential_lags_s.resize(lags);
  for (std::size_t i = 0; i < lags; ++i) {
    block.differential[i] = (block.averaged[i + 1] - block.averaged[i]) * fs;
    block.differential_lags_s[i] = (static_cast<double>(i) + 0.5) / fs;
  }
  return block;
}

std::vector<double> block_centers(const PowerResponse& power, const AcfConfig& cfg) {
  const double fs = power.config.sampling_rate_hz;
  cfg.validate(fs);
  const auto& ts = power.timestamps_s;
  const std::size_t need = cfg.window_frames(fs);
  std::vector<double> centers;
  if (ts.size() < need) return centers;
  const double first = ts[need - 1];
  const double last = ts.back();
  const double t0 = ts.front();
  auto n = static_cast<long long>(std::ceil((first - t0) / cfg.hop_s - 1e-9));
  for (;; ++n) {
    const double c = t0 + static_cast<double>(n) * cfg.hop_s;
    if (c > last + 1e-9) break;
    centers.push_back(c);
  }
  return centers;
}

std::vector<BlockResult> stream_blocks(const PowerResponse& power, const AcfConfig& cfg) {
  std::vector<BlockResult> out;
  for (double c : block_centers(power, cfg)) {
    BlockResult r;
    r.t_center_s = c;
    try {
      r.block = acf_block(power, c, cfg);
    } catch (const Error& e) {
      r.skip_code = e.code();
      r.skip_reason = e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::size_t min_window_frames(double speed_mps, double wavelength_m, double fs, int avg_samples) {
  if (!(speed_mps > 0.0)) throw Error(ErrorCode::invalid_argument, "speed must be > 0");
  return static_cast<std::size_t>(std::ceil(kPeakDistanceWavelengths * wavelength_m / speed_mps * fs)) +
         static_cast<std::size_t>(avg_samples);
}

double min_window_seconds(double speed_mps, double wavelength_m, double fs, int avg_samples) {
  if (!(speed_mps > 0.0)) throw Error(ErrorCode::invalid_argument, "speed must be > 0");
  return kPeakDistanceWavelengths * wavelength_m / speed_mps + avg_samples / fs;
}

std::uint64_t multiplications_per_block(std::size_t subcarriers, std::size_t avg_samples,
                                        std::size_t lags) {
  return static_cast<std::uint64_t>(subcarriers) * avg_samples * lags;
}

}  // namespace csispeed
