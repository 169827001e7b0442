#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "csispeed/csi_io.hpp"
#include "csispeed/error.hpp"

namespace testing_helpers {

inline csispeed::RadioConfig radio(std::size_t subcarriers, double fs = 1500.0) {
  return csispeed::RadioConfig::uniform(5.805e9, 40e6, fs, subcarriers);
}

inline csispeed::CsiTrace random_trace(std::size_t frames, std::size_t subcarriers,
                                       std::uint64_t seed) {
  csispeed::CsiTrace trace;
  trace.config = radio(subcarriers);
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 1.0f);
  for (std::size_t t = 0; t < frames; ++t) {
    trace.timestamps_s.push_back(static_cast<double>(t) / trace.config.sampling_rate_hz);
    for (std::size_t f = 0; f < subcarriers; ++f) trace.frames.emplace_back(g(rng), g(rng));
  }
  return trace;
}

// Power response with one row per frame built from explicit per-subcarrier series.
inline csispeed::PowerResponse power_from(const std::vector<std::vector<double>>& columns,
                                          double fs = 1500.0) {
  csispeed::PowerResponse p;
  p.config = radio(columns.size(), fs);
  const std::size_t n = columns.front().size();
  for (std::size_t t = 0; t < n; ++t) {
    p.timestamps_s.push_back(static_cast<double>(t) / fs);
    for (const auto& c : columns) p.values.push_back(c[t]);
  }
  return p;
}

}  // namespace testing_helpers
