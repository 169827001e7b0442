#include "csispeed/peak_finder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/fisher_f.hpp>

#include "csispeed/error.hpp"

namespace csispeed {

double f_quantile(int half_window, double p) {
  if (half_window < 2 || !(p > 0.0 && p < 1.0)) {
    throw Error(ErrorCode::invalid_argument, "f_quantile needs L >= 2 and 0 < p < 1");
  }
  const boost::math::fisher_f dist(1.0, 2.0 * (half_window - 1));
  return boost::math::quantile(boost::math::complement(dist, p));
}

void PeakFinderConfig::validate() const {
  std::ostringstream problems;
  if (half_window < 2) problems << " half_window must be >= 2;";
  if (!(threshold > 0.0)) problems << " threshold must be > 0;";
  if (min_separation < 0) problems << " min_separation must be >= 0;";
  if (guard_lags < 0) problems << " guard_lags must be >= 0;";
  if (!(refine_fraction >= 0.0)) problems << " refine_fraction must be >= 0;";
  if (refine_min_half_window < 2) problems << " refine_min_half_window must be >= 2;";
  const std::string text = problems.str();
  if (!text.empty()) throw Error(ErrorCode::invalid_config, "invalid peak finder config:" + text);
}

PeakFinderConfig PeakFinderConfig::with_false_peak_rate(int half_window, double p) {
  PeakFinderConfig cfg;
  cfg.half_window = half_window;
  cfg.threshold = f_quantile(half_window, p);
  return cfg;
}

PeakScore peak_score(std::span<const double> y) {
  if (y.size() < 5 || y.size() % 2 == 0) {
    throw Error(ErrorCode::invalid_argument, "peak window must have odd length >= 5");
  }
  const auto half = static_cast<double>(y.size() / 2);
  const double shift = half * (half + 1.0) / 3.0;
  // Orthogonal basis on x = -L..L: 1, x, x^2 - L(L+1)/3.
  double s1 = 0.0, s2 = 0.0, y0 = 0.0, y1 = 0.0, y2 = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double x = static_cast<double>(i) - half;
    const double p2 = x * x - shift;
    s1 += x * x;
    s2 += p2 * p2;
    y0 += y[i];
    y1 += y[i] * x;
    y2 += y[i] * p2;
  }
  const double n = static_cast<double>(y.size());
  const double c0 = y0 / n;
  const double c1 = y1 / s1;
  const double c2 = y2 / s2;
  double sse = 0.0, sse_r = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double x = static_cast<double>(i) - half;
    const double lin = y[i] - c0 - c1 * x;
    const double quad = lin - c2 * (x * x - shift);
    sse_r += lin * lin;
    sse += quad * quad;
    scale += (y[i] - c0) * (y[i] - c0);
  }
  const double tiny = 1e-24 * std::max(scale, std::numeric_limits<double>::min());
  PeakScore s;
  s.curvature = c2;
  s.vertex = c2 != 0.0 ? -c1 / (2.0 * c2) : 0.0;
  s.height = c0 - c2 * shift - (c2 != 0.0 ? c1 * c1 / (4.0 * c2) : 0.0);
  if (sse_r <= tiny) {
    s.alpha = 0.0;
  } else if (sse <= tiny) {
    s.alpha = std::numeric_limits<double>::infinity();
  } else {
    s.alpha = std::max(0.0, (sse_r - sse) / (sse / (n - 3.0)));
  }
  return s;
}

std::vector<PeakScore> window_scores(std::span<const double> y, int half_window) {
  const auto l = static_cast<std::size_t>(half_window);
  if (half_window < 2 || y.size() < 2 * l + 1) return {};
  std::vector<PeakScore> out(y.size() - 2 * l);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = peak_score(y.subspan(i, 2 * l + 1));
  return out;
}

namespace {

double interpolate(std::span<const double> abscissa, double index) {
  const double clamped = std::clamp(index, 0.0, static_cast<double>(abscissa.size() - 1));
  const auto lo = static_cast<std::size_t>(std::floor(clamped));
  if (lo + 1 >= abscissa.size()) return abscissa[lo];
  const double w = clamped - static_cast<double>(lo);
  return abscissa[lo] + w * (abscissa[lo + 1] - abscissa[lo]);
}

// Indices (into `scores`) passing threshold, curvature and neighborhood-maximum tests.
std::vector<std::size_t> candidate_windows(const std::vector<PeakScore>& scores, int half_window,
                                           double threshold, std::size_t first) {
  const auto l = static_cast<std::size_t>(half_window);
  auto eligible = [&](const PeakScore& s) {
    return s.alpha > threshold && s.curvature < 0.0 &&
           std::abs(s.vertex) <= static_cast<double>(half_window);
  };
  std::vector<std::size_t> out;
  for (std::size_t i = first; i < scores.size(); ++i) {
    const auto& s = scores[i];
    if (!eligible(s)) continue;
    const std::size_t lo = i >= l ? i - l : 0;
    const std::size_t hi = std::min(scores.size() - 1, i + l);
    bool is_max = true;
    for (std::size_t j = lo; j <= hi && is_max; ++j) {
      if (!eligible(scores[j])) continue;
      if (j < i && scores[j].alpha >= s.alpha) is_max = false;
      if (j > i && scores[j].alpha > s.alpha) is_max = false;
    }
    if (is_max) out.push_back(i);
  }
  return out;
}

Peak make_peak(const PeakScore& s, std::size_t center, std::span<const double> abscissa) {
  Peak p;
  p.window_center = center;
  p.location = interpolate(abscissa, static_cast<double>(center) + s.vertex);
  p.height = s.height;
  p.score = s.alpha;
  return p;
}

}  // namespace

std::vector<Peak> find_peaks(std::span<const double> y, std::span<const double> abscissa,
                             const PeakFinderConfig& cfg) {
  cfg.validate();
  if (abscissa.size() != y.size()) {
    throw Error(ErrorCode::invalid_argument, "abscissa and series lengths differ");
  }
  const auto scores = window_scores(y, cfg.half_window);
  std::vector<Peak> peaks;
  for (std::size_t i : candidate_windows(scores, cfg.half_window, cfg.threshold, 0)) {
    peaks.push_back(make_peak(scores[i], i + static_cast<std::size_t>(cfg.half_window), abscissa));
  }
  if (cfg.min_separation > 0 && peaks.size() > 1) {
    std::vector<std::size_t> order(peaks.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return peaks[a].score > peaks[b].score; });
    std::vector<Peak> kept;
    for (std::size_t idx : order) {
      const auto& p = peaks[idx];
      const bool clear = std::none_of(kept.begin(), kept.end(), [&](const Peak& q) {
        const auto gap = p.window_center > q.window_center ? p.window_center - q.window_center
                                                           : q.window_center - p.window_center;
        return gap < static_cast<std::size_t>(cfg.min_separation);
      });
      if (clear) kept.push_back(p);
    }
    peaks = std::move(kept);
  }
  std::stable_sort(peaks.begin(), peaks.end(),
                   [](const Peak& a, const Peak& b) { return a.location < b.location; });
  return peaks;
}

std::optional<Peak> first_peak(std::span<const double> d, std::span<const double> abscissa,
                               const PeakFinderConfig& cfg) {
  cfg.validate();
  if (abscissa.size() != d.size()) {
    throw Error(ErrorCode::invalid_argument, "abscissa and series lengths differ");
  }
  const auto scores = window_scores(d, cfg.half_window);
  const auto found = candidate_windows(scores, cfg.half_window, cfg.threshold,
                                       static_cast<std::size_t>(cfg.guard_lags));
  if (found.empty()) return std::nullopt;
  const std::size_t i = found.front();
  const std::size_t center = i + static_cast<std::size_t>(cfg.half_window);
  Peak peak = make_peak(scores[i], center, abscissa);
  if (cfg.refine_fraction <= 0.0) return peak;

  // Refit a narrower quadratic around the detected vertex.
  const double index = static_cast<double>(center) + scores[i].vertex;
  const auto half = static_cast<std::size_t>(std::max<long long>(
      cfg.refine_min_half_window, std::llround(cfg.refine_fraction * (index + 0.5))));
  const auto mid = static_cast<long long>(std::llround(index));
  if (mid < static_cast<long long>(half) || static_cast<std::size_t>(mid) + half >= d.size()) {
    return peak;
  }
  const auto c = static_cast<std::size_t>(mid);
  const auto refined = peak_score(d.subspan(c - half, 2 * half + 1));
  if (refined.curvature < 0.0 && std::abs(refined.vertex) <= static_cast<double>(half)) {
    peak.location = interpolate(abscissa, static_cast<double>(c) + refined.vertex);
    peak.height = refined.height;
  }
  return peak;
}

std::optional<Peak> first_peak(const AcfBlock& block, const PeakFinderConfig& cfg) {
  return first_peak(block.differential, block.differential_lags_s, cfg);
}

std::vector<PersistencePair> persistence_peaks(std::span<const double> y, double min_persistence) {
  if (y.empty()) throw Error(ErrorCode::invalid_argument, "series must be non-empty");
  const std::size_t n = y.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return y[a] > y[b]; });

  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> parent(n, kNone);
  std::vector<std::size_t> birth(n, kNone);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  };
  // Elder component: higher birth value, earlier index on ties.
  auto older = [&](std::size_t a, std::size_t b) {
    const std::size_t ba = birth[a], bb = birth[b];
    return y[ba] > y[bb] || (y[ba] == y[bb] && ba < bb);
  };

  std::vector<PersistencePair> pairs;
  for (std::size_t i : order) {
    parent[i] = i;
    birth[i] = i;
    for (std::size_t nb : {i == 0 ? kNone : i - 1, i + 1 < n ? i + 1 : kNone}) {
      if (nb == kNone || parent[nb] == kNone) continue;
      std::size_t a = find(i);
      std::size_t b = find(nb);
      if (a == b) continue;
      if (older(a, b)) std::swap(a, b);
      // `a` is younger and dies here unless it is just the current sample.
      if (birth[a] != i) pairs.push_back({birth[a], i, y[birth[a]] - y[i]});
      parent[a] = b;
    }
  }
  const std::size_t root = find(order.front());
  const std::size_t global_min = static_cast<std::size_t>(
      std::min_element(y.begin(), y.end()) - y.begin());
  pairs.push_back({birth[root], global_min, y[birth[root]] - y[global_min]});

  std::vector<PersistencePair> out;
  for (const auto& p : pairs) {
    if (p.max_index == 0 || p.max_index + 1 == n) continue;
    if (!(p.persistence >= min_persistence) || p.persistence <= 0.0) continue;
    out.push_back(p);
  }
  std::sort(out.begin(), out.end(),
            [](const PersistencePair& a, const PersistencePair& b) { return a.max_index < b.max_index; });
  return out;
}

}  // namespace csispeed
