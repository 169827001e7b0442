#include <doctest.h>

#include <numbers>
#include <random>

#include "csispeed/kinematics.hpp"
#include "csispeed/scenarios.hpp"
#include "oracles.hpp"

using namespace csispeed;

namespace {

std::vector<double> piecewise_noisy(std::size_t n, std::uint64_t seed, double sigma = 0.05) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i);
    double v = 1.0 + 0.02 * x;
    if (x > 30) v -= 0.05 * (x - 30);
    if (x > 55) v += 0.04 * (x - 55);
    y[i] = v + noise(rng);
  }
  return y;
}

double dense_lambda_max(const std::vector<double>& y) {
  const auto n = static_cast<Eigen::Index>(y.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n - 2, n);
  for (Eigen::Index i = 0; i < n - 2; ++i) {
    d(i, i) = 1;
    d(i, i + 1) = -2;
    d(i, i + 2) = 1;
  }
  const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
  const Eigen::MatrixXd ddt = d * d.transpose();
  return 2.0 * ddt.ldlt().solve(d * yv).cwiseAbs().maxCoeff();
}

std::vector<double> qr_line(const std::vector<double>& y) {
  const auto n = static_cast<Eigen::Index>(y.size());
  Eigen::MatrixXd a(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, 0) = 1.0;
    a(i, 1) = static_cast<double>(i);
  }
  const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
  const Eigen::VectorXd fit = a * a.householderQr().solve(yv);
  return {fit.data(), fit.data() + n};
}

}  // namespace

TEST_SUITE("kinematics") {
  TEST_CASE("limits of the trend filter") {
    const auto y = piecewise_noisy(80, 1);
    CHECK(l1_trend_solve(y, 0.0, {}).trend == y);
    const double lmax = trend_lambda_max(y);
    CHECK(lmax == doctest::Approx(dense_lambda_max(y)).epsilon(1e-10));
    const auto line = qr_line(y);
    const auto big = l1_trend_solve(y, lmax * 1.01, {}).trend;
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(big[i] == doctest::Approx(line[i]).epsilon(1e-10));
    const auto fit = affine_fit(y);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(fit[i] == doctest::Approx(line[i]).epsilon(1e-10));
  }

  TEST_CASE("solution matches the ADMM oracle") {
    for (std::uint64_t seed : {2u, 3u, 4u}) {
      const auto y = piecewise_noisy(70, seed);
      for (double lambda : {0.5, 0.1 * trend_lambda_max(y)}) {
        const auto x = l1_trend_solve(y, lambda, {}).trend;
        const auto ref = oracle::trend_admm(y, lambda);
        const double got = trend_objective(y, x, lambda);
        const double want = oracle::objective(y, ref, lambda);
        CHECK(got <= want * (1 + 1e-6));
        CHECK(got == doctest::Approx(want).epsilon(1e-6));
      }
    }
  }

  TEST_CASE("objective beats the obvious candidates") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> frac(0.01, 0.9);
    for (std::uint64_t seed = 10; seed < 20; ++seed) {
      const auto y = piecewise_noisy(60, seed, 0.1);
      const double lambda = frac(rng) * trend_lambda_max(y);
      const auto x = l1_trend_solve(y, lambda, {}).trend;
      const double obj = trend_objective(y, x, lambda);
      CHECK(obj <= trend_objective(y, y, lambda) + 1e-9);
      CHECK(obj <= trend_objective(y, affine_fit(y), lambda) + 1e-9);
    }
  }

  TEST_CASE("adding a line shifts the trend by that line") {
    const auto y = piecewise_noisy(60, 6);
    std::vector<double> shifted(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) shifted[i] = y[i] + 3.0 - 0.7 * static_cast<double>(i);
    const double lambda = 2.0;
    const auto a = l1_trend_solve(y, lambda, {}).trend;
    const auto b = l1_trend_solve(shifted, lambda, {}).trend;
    for (std::size_t i = 0; i < y.size(); ++i) {
      CHECK(b[i] - (3.0 - 0.7 * static_cast<double>(i)) == doctest::Approx(a[i]).epsilon(1e-5));
    }
  }

  TEST_CASE("trend is piecewise linear") {
    const auto y = piecewise_noisy(100, 7, 0.01);
    const auto x = l1_trend_solve(y, 0.2 * trend_lambda_max(y), {}).trend;
    int kinks = 0;
    for (std::size_t i = 0; i + 2 < x.size(); ++i) {
      if (std::abs(x[i] - 2 * x[i + 1] + x[i + 2]) > 1e-6) ++kinks;
    }
    CHECK(kinks <= 10);
  }

  TEST_CASE("iteration cap reports the best iterate") {
    const auto y = piecewise_noisy(50, 8);
    TrendFilterConfig cfg;
    cfg.max_iterations = 1;
    try {
      l1_trend_solve(y, 1.0, cfg);
      FAIL("expected not-converged");
    } catch (const NotConvergedError& e) {
      CHECK(e.code() == ErrorCode::not_converged);
      CHECK(e.best_iterate().size() == y.size());
      CHECK(e.duality_gap() > 0.0);
    }
  }

  TEST_CASE("trend input checks") {
    CHECK_THROWS_AS(l1_trend_solve(std::vector<double>{1.0, 2.0}, 1.0, {}), Error);
    CHECK_THROWS_AS(l1_trend_solve(std::vector<double>{1.0, NAN, 2.0}, 1.0, {}), Error);
    CHECK_THROWS_AS(l1_trend_solve(std::vector<double>{1.0, 2.0, 3.0}, -1.0, {}), Error);
    TrendFilterConfig bad;
    bad.tolerance = 0.0;
    bad.max_iterations = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
  }

  TEST_CASE("acceleration of constant and ramp speeds") {
    std::vector<double> t, flat, ramp;
    for (int i = 0; i <= 40; ++i) {
      t.push_back(0.05 * i);
      flat.push_back(1.3);
      ramp.push_back(0.05 * i);
    }
    const auto a0 = acceleration(SpeedSeries::from_speeds(t, flat));
    REQUIRE(a0.size() == 40);
    for (const auto& a : a0.accel_mps2) CHECK(*a == doctest::Approx(0.0).scale(1.0));
    const auto a1 = acceleration(SpeedSeries::from_speeds(t, ramp));
    for (std::size_t i = 0; i < a1.size(); ++i) {
      CHECK(a1.timestamps_s[i] == t[i + 1]);
      CHECK(*a1.accel_mps2[i] == doctest::Approx(1.0).epsilon(0.05));
    }
  }

  TEST_CASE("long gaps split the series") {
    std::vector<double> t;
    std::vector<std::optional<double>> v;
    for (int i = 0; i < 40; ++i) {
      t.push_back(0.05 * i);
      v.emplace_back(i >= 10 && i < 25 ? std::nullopt : std::optional<double>(1.0 + 0.01 * i));
    }
    SpeedSeries s;
    s.timestamps_s = t;
    s.raw_mps = v;
    s.smoothed_mps = v;
    s.hop_s = 0.05;
    const auto a = acceleration(s);
    for (int i = 10; i < 25; ++i) CHECK(!a.trend_mps[static_cast<std::size_t>(i)]);
    CHECK(!a.accel_mps2[24]);
    CHECK(a.accel_mps2[25]);
    CHECK(*a.accel_mps2[5] == doctest::Approx(0.2).epsilon(1e-6));

    // A short gap is bridged.
    v.assign(40, 1.0);
    v[12] = std::nullopt;
    s.raw_mps = v;
    s.smoothed_mps = v;
    const auto b = acceleration(s);
    CHECK(b.accel_mps2[12]);
  }

  TEST_CASE("synthetic gait") {
    const auto profile = oscillating_profile(1.3, 0.3, 0.54, 10.8);
    std::vector<double> t, v;
    for (int i = 0; i <= 216; ++i) {
      t.push_back(0.05 * i);
      v.push_back(profile.speed_at(0.05 * i));
    }
    const auto s = SpeedSeries::from_speeds(t, v);
    const auto r = gait_cycles(s, acceleration(s));
    REQUIRE(r.gate_passed);
    CHECK(r.step_count == 20);
    for (double c : r.cycle_times_s) CHECK(std::abs(c - 0.54) <= 0.01);
    CHECK(std::abs(r.mean_stride_m - (1.3 * 0.54)) <= 0.02);
  }

  TEST_CASE("gait gate and constant speed") {
    std::vector<double> t, fast, slow;
    for (int i = 0; i <= 100; ++i) {
      t.push_back(0.05 * i);
      fast.push_back(1.3);
      slow.push_back(0.5);
    }
    const auto s = SpeedSeries::from_speeds(t, fast);
    const auto r = gait_cycles(s, acceleration(s));
    CHECK(r.gate_passed);
    CHECK(r.step_count == 0);
    const auto s2 = SpeedSeries::from_speeds(t, slow);
    const auto r2 = gait_cycles(s2, acceleration(s2));
    CHECK(!r2.gate_passed);
    CHECK(!r2.gate_reason.empty());
  }
}
