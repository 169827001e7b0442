#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "csispeed/acf_engine.hpp"

namespace csispeed {

/// Upper quantile of F(1, 2L - 2): the score exceeded with probability p under white noise.
double f_quantile(int half_window, double p);

struct PeakFinderConfig {
  int half_window = 8;
  double threshold = f_quantile(8, 0.01);
  int min_separation = 0;
  /// Leading differential samples that no first-peak window may touch.
  int guard_lags = 2;
  /// Refit half-window as a fraction of the detected lag (0 disables refinement).
  double refine_fraction = 0.1;
  int refine_min_half_window = 3;

  void validate() const;
  /// Same settings with threshold moved to the p-quantile for `half_window`.
  static PeakFinderConfig with_false_peak_rate(int half_window, double p);
};

struct PeakScore {
  double alpha = 0.0;
  /// Vertex offset from the window center, in samples.
  double vertex = 0.0;
  /// Quadratic coefficient a of y = a x^2 + b x + c.
  double curvature = 0.0;
  /// Fitted value at the vertex.
  double height = 0.0;
};

struct Peak {
  double location = 0.0;
  double height = 0.0;
  double score = 0.0;
  std::size_t window_center = 0;
};

/// Linear-vs-quadratic F statistic for a window of 2L + 1 equally spaced samples.
PeakScore peak_score(std::span<const double> window);

/// Score for every window center in [L, n - L - 1]; entry i belongs to center i + L.
std::vector<PeakScore> window_scores(std::span<const double> y, int half_window);

std::vector<Peak> find_peaks(std::span<const double> y, std::span<const double> abscissa,
                             const PeakFinderConfig& cfg);

/// Earliest peak of a differential curve outside the guard region, optionally refit locally.
std::optional<Peak> first_peak(std::span<const double> differential,
                               std::span<const double> abscissa, const PeakFinderConfig& cfg);
std::optional<Peak> first_peak(const AcfBlock& block, const PeakFinderConfig& cfg);

struct PersistencePair {
  std::size_t max_index = 0;
  std::size_t min_index = 0;
  double persistence = 0.0;
};

/// Interior local maxima paired with the minimum at which they merge into a higher feature.
std::vector<PersistencePair> persistence_peaks(std::span<const double> y, double min_persistence);

}  // namespace csispeed
