#include "csispeed/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "csispeed/peak_finder.hpp"

namespace csispeed {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

// Second-difference operator D, (n-2) x n.
SpMat second_difference(Eigen::Index n) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(3 * (n - 2)));
  for (Eigen::Index i = 0; i + 2 < n; ++i) {
    t.emplace_back(i, i, 1.0);
    t.emplace_back(i, i + 1, -2.0);
    t.emplace_back(i, i + 2, 1.0);
  }
  SpMat d(n - 2, n);
  d.setFromTriplets(t.begin(), t.end());
  return d;
}

Vec to_vec(std::span<const double> y) {
  Vec v(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) v[static_cast<Eigen::Index>(i)] = y[i];
  return v;
}

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

void require_length(std::span<const double> y) {
  if (y.size() < 3) throw Error(ErrorCode::invalid_argument, "trend filter needs >= 3 samples");
  for (double v : y) {
    if (!std::isfinite(v)) throw Error(ErrorCode::non_finite_value, "trend input must be finite");
  }
}

}  // namespace

void TrendFilterConfig::validate() const {
  std::ostringstream problems;
  if (lambda_reg && !(*lambda_reg >= 0.0)) problems << " lambda_reg must be >= 0;";
  if (!(lambda_fraction >= 0.0)) problems << " lambda_fraction must be >= 0;";
  if (max_iterations < 1) problems << " max_iterations must be >= 1;";
  if (!(tolerance > 0.0)) problems << " tolerance must be > 0;";
  const std::string text = problems.str();
  if (!text.empty()) throw Error(ErrorCode::invalid_config, "invalid trend filter config:" + text);
}

double trend_objective(std::span<const double> y, std::span<const double> x, double lambda) {
  double fit = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) fit += (x[i] - y[i]) * (x[i] - y[i]);
  double tv = 0.0;
  for (std::size_t i = 0; i + 2 < x.size(); ++i) tv += std::abs(x[i] - 2.0 * x[i + 1] + x[i + 2]);
  return fit + lambda * tv;
}

double trend_lambda_max(std::span<const double> y) {
  require_length(y);
  const auto n = static_cast<Eigen::Index>(y.size());
  const SpMat d = second_difference(n);
  const SpMat ddt = d * SpMat(d.transpose());
  Eigen::SimplicialLDLT<SpMat> solver(ddt);
  const Vec z = solver.solve(d * to_vec(y));
  // Half-scaled problem threshold is |z|_inf; our objective carries a factor 2.
  return 2.0 * z.lpNorm<Eigen::Infinity>();
}

std::vector<double> affine_fit(std::span<const double> y) {
  const auto n = static_cast<double>(y.size());
  const double xm = (n - 1.0) / 2.0;
  double ym = 0.0;
  for (double v : y) ym += v;
  ym /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double dx = static_cast<double>(i) - xm;
    sxy += dx * (y[i] - ym);
    sxx += dx * dx;
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = ym + slope * (static_cast<double>(i) - xm);
  return out;
}

// Primal-dual interior point on the box-constrained dual of
// minimize 1/2 |y - x|^2 + mu |D x|_1, with mu = lambda / 2.
TrendResult l1_trend_solve(std::span<const double> y_in, double lambda,
                           const TrendFilterConfig& cfg) {
  cfg.validate();
  require_length(y_in);
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::invalid_argument, "lambda must be finite and >= 0");
  }
  TrendResult result;
  result.lambda = lambda;
  if (lambda == 0.0) {
    result.trend.assign(y_in.begin(), y_in.end());
    return result;
  }
  if (lambda >= trend_lambda_max(y_in)) {
    result.trend = affine_fit(y_in);
    return result;
  }

  constexpr double kAlpha = 0.01;
  constexpr double kBeta = 0.5;
  constexpr double kMu = 2.0;
  constexpr int kMaxLineSearch = 40;

  const double mu = lambda / 2.0;
  const auto n = static_cast<Eigen::Index>(y_in.size());
  const Eigen::Index m = n - 2;
  const Vec y = to_vec(y_in);
  const SpMat d = second_difference(n);
  const SpMat dt = d.transpose();
  const SpMat ddt = d * dt;
  const Vec dy = d * y;
  Eigen::SimplicialLDLT<SpMat> ddt_solver(ddt);

  Vec z = Vec::Zero(m);
  Vec mu1 = Vec::Ones(m);
  Vec mu2 = Vec::Ones(m);
  double t = 1e-10;
  double step = std::numeric_limits<double>::infinity();
  double gap = std::numeric_limits<double>::infinity();
  // Gaps below rounding level of the data count as converged.
  const double gap_floor = std::numeric_limits<double>::epsilon() * 0.5 * y.squaredNorm();

  SpMat s = ddt;
  Eigen::SimplicialLDLT<SpMat> s_solver;
  s_solver.analyzePattern(s);

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    const Vec dtz = dt * z;
    const Vec ddtz = d * dtz;
    const Vec w = dy - (mu1 - mu2);
    const double pobj1 = 0.5 * w.dot(ddt_solver.solve(w)) + mu * (mu1 + mu2).sum();
    const double pobj2 = 0.5 * dtz.squaredNorm() + mu * (dy - ddtz).cwiseAbs().sum();
    const double pobj = std::min(pobj1, pobj2);
    const double dobj = -0.5 * dtz.squaredNorm() + dy.dot(z);
    gap = pobj - dobj;
    result.iterations = iter;
    if (gap <= std::max(cfg.tolerance * std::abs(pobj), gap_floor)) {
      result.trend = to_std(y - dtz);
      result.duality_gap = 2.0 * gap;
      return result;
    }
    if (step >= 0.2) t = std::max(2.0 * static_cast<double>(m) * kMu / gap, 1.2 * t);

    const Vec f1 = z.array() - mu;
    const Vec f2 = -z.array() - mu;
    const Vec j1 = mu1.cwiseQuotient(f1);
    const Vec j2 = mu2.cwiseQuotient(f2);
    s = ddt;
    for (Eigen::Index i = 0; i < m; ++i) s.coeffRef(i, i) -= j1[i] + j2[i];
    s_solver.factorize(s);
    if (s_solver.info() != Eigen::Success) break;
    const Vec r = -ddtz + dy + (1.0 / t) * f1.cwiseInverse() - (1.0 / t) * f2.cwiseInverse();
    const Vec dz = s_solver.solve(r);
    const Vec dmu1 = -(mu1 + ((1.0 / t) * Vec::Ones(m) + dz.cwiseProduct(mu1)).cwiseQuotient(f1));
    const Vec dmu2 = -(mu2 + ((1.0 / t) * Vec::Ones(m) - dz.cwiseProduct(mu2)).cwiseQuotient(f2));

    auto residual_norm = [&](const Vec& zz, const Vec& m1, const Vec& m2) {
      const Vec res_dual = ddt * zz - dy + m1 - m2;
      const Vec c1 = -m1.cwiseProduct(zz.array().matrix() - mu * Vec::Ones(m)) -
                     (1.0 / t) * Vec::Ones(m);
      const Vec c2 = -m2.cwiseProduct(-zz - mu * Vec::Ones(m)) - (1.0 / t) * Vec::Ones(m);
      return std::sqrt(res_dual.squaredNorm() + c1.squaredNorm() + c2.squaredNorm());
    };
    const double residual = residual_norm(z, mu1, mu2);

    step = 1.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (dmu1[i] < 0.0) step = std::min(step, -0.99 * mu1[i] / dmu1[i]);
      if (dmu2[i] < 0.0) step = std::min(step, -0.99 * mu2[i] / dmu2[i]);
    }
    Vec nz, nmu1, nmu2;
    bool accepted = false;
    for (int ls = 0; ls < kMaxLineSearch; ++ls) {
      nz = z + step * dz;
      nmu1 = mu1 + step * dmu1;
      nmu2 = mu2 + step * dmu2;
      const double max_f = std::max((nz.array() - mu).maxCoeff(), (-nz.array() - mu).maxCoeff());
      if (max_f < 0.0 && residual_norm(nz, nmu1, nmu2) <= (1.0 - kAlpha * step) * residual) {
        accepted = true;
        break;
      }
      step *= kBeta;
    }
    if (!accepted) break;
    z = nz;
    mu1 = nmu1;
    mu2 = nmu2;
  }
  std::ostringstream msg;
  msg << "trend filter did not reach relative gap " << cfg.tolerance << " (gap " << 2.0 * gap << ")";
  throw NotConvergedError(msg.str(), to_std(y - dt * z), 2.0 * gap);
}

std::vector<double> l1_trend(std::span<const double> y, const TrendFilterConfig& cfg) {
  cfg.validate();
  const double lambda = cfg.lambda_reg ? *cfg.lambda_reg : cfg.lambda_fraction * trend_lambda_max(y);
  return l1_trend_solve(y, lambda, cfg).trend;
}

AccelSeries acceleration(const SpeedSeries& series, const TrendFilterConfig& cfg) {
  cfg.validate();
  series.validate();
  const auto& t = series.timestamps_s;
  const std::size_t n = t.size();
  AccelSeries out;
  out.trend_mps.assign(n, std::nullopt);
  if (n >= 1) {
    out.timestamps_s.assign(t.begin() + 1, t.end());
    out.accel_mps2.assign(n - 1, std::nullopt);
  }
  std::vector<std::size_t> present;
  for (std::size_t i = 0; i < n; ++i) {
    if (series.smoothed_mps[i]) present.push_back(i);
  }
  if (present.empty()) return out;
  const double hop = series.hop_s > 0.0 ? series.hop_s : (n >= 2 ? t[1] - t[0] : 0.0);

  // Segments of present entries separated by gaps no longer than kMaxGapSeconds.
  std::size_t seg_begin = 0;
  for (std::size_t k = 1; k <= present.size(); ++k) {
    const bool split = k == present.size() ||
                       t[present[k]] - t[present[k - 1]] - hop > kMaxGapSeconds + 1e-9;
    if (!split) continue;
    const std::size_t first = present[seg_begin];
    const std::size_t last = present[k - 1];
    std::vector<double> values(last - first + 1);
    std::optional<std::size_t> prev;
    for (std::size_t i = first; i <= last; ++i) {
      if (!series.smoothed_mps[i]) continue;
      values[i - first] = *series.smoothed_mps[i];
      if (prev && i > *prev + 1) {
        for (std::size_t j = *prev + 1; j < i; ++j) {
          const double w = (t[j] - t[*prev]) / (t[i] - t[*prev]);
          values[j - first] = values[*prev - first] + w * (values[i - first] - values[*prev - first]);
        }
      }
      prev = i;
    }
    const auto trend = values.size() >= 3 ? l1_trend(values, cfg) : values;
    for (std::size_t i = first; i <= last; ++i) out.trend_mps[i] = trend[i - first];
    for (std::size_t i = first + 1; i <= last; ++i) {
      out.accel_mps2[i - 1] = (trend[i - first] - trend[i - 1 - first]) / (t[i] - t[i - 1]);
    }
    seg_begin = k;
  }
  return out;
}

GaitReport gait_cycles(const SpeedSeries& series, const AccelSeries& accel, const GaitConfig& cfg) {
  GaitReport report;
  series.validate();
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& v : series.smoothed_mps) {
    if (v) {
      sum += *v;
      ++count;
    }
  }
  if (count == 0) {
    report.gate_reason = "no speed estimates";
    return report;
  }
  const double mean = sum / static_cast<double>(count);
  double max_accel = 0.0;
  for (const auto& a : accel.accel_mps2) {
    if (a) max_accel = std::max(max_accel, std::abs(*a));
  }
  std::ostringstream reason;
  if (mean < cfg.min_mean_speed || mean > cfg.max_mean_speed) {
    reason << "mean speed " << mean << " m/s outside [" << cfg.min_mean_speed << ", "
           << cfg.max_mean_speed << "]";
  } else if (max_accel > cfg.max_abs_accel) {
    reason << "max |acceleration| " << max_accel << " m/s^2 above " << cfg.max_abs_accel;
  }
  report.gate_reason = reason.str();
  if (!report.gate_reason.empty()) return report;
  report.gate_passed = true;

  const auto v = fill_gaps(series);
  const auto& t = series.timestamps_s;
  for (const auto& p : persistence_peaks(v, cfg.min_persistence)) {
    const std::size_t i = p.max_index;
    double when = t[i];
    const double denom = v[i - 1] - 2.0 * v[i] + v[i + 1];
    if (denom < 0.0) {
      const double offset = std::clamp(0.5 * (v[i - 1] - v[i + 1]) / denom, -0.5, 0.5);
      when += offset * (offset >= 0.0 ? t[i + 1] - t[i] : t[i] - t[i - 1]);
    }
    report.peak_times_s.push_back(when);
  }
  report.step_count = static_cast<int>(report.peak_times_s.size());
  for (std::size_t k = 1; k < report.peak_times_s.size(); ++k) {
    const double a = report.peak_times_s[k - 1];
    const double b = report.peak_times_s[k];
    report.cycle_times_s.push_back(b - a);
    report.stride_lengths_m.push_back(integrate_distance(series, a, b));
  }
  if (!report.stride_lengths_m.empty()) {
    report.mean_stride_m =
        std::accumulate(report.stride_lengths_m.begin(), report.stride_lengths_m.end(), 0.0) /
        static_cast<double>(report.stride_lengths_m.size());
  }
  return report;
}

}  // namespace csispeed
