#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "csispeed/error.hpp"
#include "csispeed/speed_pipeline.hpp"

namespace csispeed {

struct TrendFilterConfig {
  /// Regularization weight; when absent, lambda_fraction * lambda_max of each segment.
  std::optional<double> lambda_reg;
  double lambda_fraction = 0.03;
  int max_iterations = 200;
  /// Relative duality gap at which the solver stops.
  double tolerance = 1e-8;

  void validate() const;
};

/// Raised when the solver stops early; carries its best iterate.
class NotConvergedError : public Error {
 public:
  NotConvergedError(const std::string& message, std::vector<double> best, double gap)
      : Error(ErrorCode::not_converged, message), best_(std::move(best)), gap_(gap) {}

  const std::vector<double>& best_iterate() const noexcept { return best_; }
  double duality_gap() const noexcept { return gap_; }

 private:
  std::vector<double> best_;
  double gap_;
};

/// sum (x - y)^2 + lambda * sum |x[n-1] - 2 x[n] + x[n+1]|.
double trend_objective(std::span<const double> y, std::span<const double> x, double lambda);

/// Smallest lambda for which the minimizer is affine.
double trend_lambda_max(std::span<const double> y);

/// Least-squares straight line through equally spaced samples.
std::vector<double> affine_fit(std::span<const double> y);

struct TrendResult {
  std::vector<double> trend;
  double lambda = 0.0;
  double duality_gap = 0.0;
  int iterations = 0;
};

TrendResult l1_trend_solve(std::span<const double> y, double lambda, const TrendFilterConfig& cfg);
std::vector<double> l1_trend(std::span<const double> y, const TrendFilterConfig& cfg);

struct AccelSeries {
  /// Timestamp of the later sample in each difference.
  std::vector<double> timestamps_s;
  std::vector<std::optional<double>> accel_mps2;
  /// Trend-filtered speed aligned with the speed series timestamps.
  std::vector<std::optional<double>> trend_mps;

  std::size_t size() const { return timestamps_s.size(); }
};

/// Gap runs longer than this split the series into separately filtered segments.
inline constexpr double kMaxGapSeconds = 0.5;

AccelSeries acceleration(const SpeedSeries& series, const TrendFilterConfig& cfg = {});

struct GaitConfig {
  double min_persistence = 0.15;
  double min_mean_speed = 1.0;
  double max_mean_speed = 2.0;
  double max_abs_accel = 3.0;
};

struct GaitReport {
  std::vector<double> peak_times_s;
  std::vector<double> cycle_times_s;
  std::vector<double> stride_lengths_m;
  int step_count = 0;
  double mean_stride_m = 0.0;
  bool gate_passed = false;
  std::string gate_reason;
};

GaitReport gait_cycles(const SpeedSeries& series, const AccelSeries& accel,
                       const GaitConfig& cfg = {});

}  // namespace csispeed
