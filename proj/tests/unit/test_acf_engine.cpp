#include <doctest.h>

#include <numbers>

#include "csispeed/acf_engine.hpp"
#include "csispeed/em_simulator.hpp"
#include "csispeed/scenarios.hpp"
#include "helpers.hpp"

using namespace csispeed;
using testing_helpers::power_from;
using testing_helpers::radio;

namespace {

// Direct definition: mean over the last max_lag + m samples, products over the last m.
std::vector<double> autocov_oracle(const std::vector<double>& g, std::size_t max_lag,
                                   std::size_t m) {
  const std::size_t start = g.size() - (max_lag + m);
  double mean = 0.0;
  for (std::size_t i = start; i < g.size(); ++i) mean += g[i];
  mean /= static_cast<double>(max_lag + m);
  std::vector<double> out;
  for (std::size_t lag = 0; lag <= max_lag; ++lag) {
    double acc = 0.0;
    for (std::size_t t = g.size() - m; t < g.size(); ++t) acc += (g[t] - mean) * (g[t - lag] - mean);
    out.push_back(acc / static_cast<double>(m));
  }
  return out;
}

std::vector<double> white(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

}  // namespace

TEST_SUITE("acf_engine") {
  TEST_CASE("autocovariance matches the direct sum") {
    const auto g = white(700, 1);
    const auto got = sample_autocov(g, 50, 400);
    const auto want = autocov_oracle(g, 50, 400);
    for (std::size_t i = 0; i <= 50; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }

  TEST_CASE("constant series has no ACF") {
    std::vector<double> g(500, 2.0);
    CHECK_THROWS_AS(sample_autocov(g, 50, 100), Error);
    CHECK_THROWS_AS(sample_autocov(white(100, 2), 50, 100), Error);
  }

  TEST_CASE("white noise stays inside the band") {
    const std::size_t t = 2000;
    int inside = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto g = white(t + 300, 100 + seed);
      const auto gamma = sample_autocov(g, 300, t);
      for (std::size_t lag = 1; lag <= 300; ++lag) {
        if (std::abs(gamma[lag] / gamma[0]) <= 2.0 / std::sqrt(static_cast<double>(t))) ++inside;
      }
    }
    CHECK(inside >= 2850);
  }

  TEST_CASE("cosine autocovariance") {
    std::vector<double> g;
    for (int i = 0; i < 3300; ++i) g.push_back(std::cos(2.0 * std::numbers::pi * 5.0 * i / 1500.0));
    const auto gamma = sample_autocov(g, 300, 3000);
    for (std::size_t lag = 0; lag <= 300; ++lag) {
      CHECK(std::abs(gamma[lag] / gamma[0] - std::cos(2.0 * std::numbers::pi * 5.0 * lag / 1500.0)) <=
            0.05);
    }
  }

  TEST_CASE("block invariants") {
    const auto scene = make_scene(SceneKind::device_based, SpeedProfile::constant(1.3), 5);
    const auto p = synthesize_power(scene, radio(6), 1.0);
    const AcfConfig cfg;
    const auto b = acf_block(p, 0.6, cfg);
    REQUIRE(b.lag_count() == 301);
    CHECK(b.averaged[0] == 1.0);
    for (std::size_t f = 0; f < 6; ++f) CHECK(b.subcarrier(f)[0] == 1.0);
    CHECK(b.differential.size() == 300);
    CHECK(b.used_subcarriers() == 6);
    for (std::size_t i = 0; i < 300; ++i) {
      CHECK(b.differential_lags_s[i] == doctest::Approx((b.lags_s[i] + b.lags_s[i + 1]) / 2));
      CHECK(b.differential[i] == doctest::Approx((b.averaged[i + 1] - b.averaged[i]) * 1500.0));
    }
    for (std::size_t lag = 0; lag <= 300; ++lag) {
      double mean = 0.0;
      for (std::size_t f = 0; f < 6; ++f) mean += b.subcarrier(f)[lag] / 6.0;
      CHECK(b.averaged[lag] == doctest::Approx(mean));
    }
  }

  TEST_CASE("block uses the window ending at its center") {
    std::vector<double> a = white(2000, 7), c = white(2000, 8);
    const auto p = power_from({a, c});
    const AcfConfig cfg;
    const auto b = acf_block(p, 1000.0 / 1500.0, cfg);
    const std::vector<double> head(a.begin(), a.begin() + 1001);
    const auto want = autocov_oracle(head, 300, 100);
    for (std::size_t lag = 0; lag <= 300; ++lag) {
      CHECK(b.subcarrier(0)[lag] == doctest::Approx(want[lag] / want[0]).epsilon(1e-10));
    }
  }

  TEST_CASE("constant subcarriers are excluded") {
    std::vector<double> flat(1000, 1.0);
    const auto p = power_from({flat, white(1000, 9)});
    const auto b = acf_block(p, 900.0 / 1500.0, AcfConfig{});
    CHECK(b.used_subcarriers() == 1);
    CHECK(b.subcarrier_used[0] == 0);
    const auto all_flat = power_from({flat, flat});
    try {
      acf_block(all_flat, 900.0 / 1500.0, AcfConfig{});
      FAIL("expected zero-variance");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::zero_variance);
    }
  }

  TEST_CASE("short history") {
    const auto p = power_from({white(1000, 10)});
    try {
      acf_block(p, 0.1, AcfConfig{});
      FAIL("expected insufficient-samples");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::insufficient_samples);
    }
  }

  TEST_CASE("static scene with noise is white blockwise") {
    ScattererScene scene;
    scene.static_power_per_axis = {1, 1, 1};
    scene.noise_variance = 0.2;
    scene.seed = 4;
    const auto p = synthesize_power(scene, radio(30), 1.0);
    const auto b = acf_block(p, 0.9, AcfConfig{});
    const double band = 2.5 / std::sqrt(100.0);
    int inside = 0;
    for (std::size_t lag = 1; lag <= 300; ++lag) {
      if (std::abs(b.averaged[lag]) <= band) ++inside;
    }
    CHECK(inside == 300);
  }

  TEST_CASE("averaged block follows the theory") {
    ScattererScene scene;
    scene.dynamic.push_back(Scatterer{.speed_mps = 1.3});
    scene.seed = 6;
    const auto r = radio(30);
    const auto p = synthesize_power(scene, r, 1.5);
    const auto b = acf_block(p, 1.4, AcfConfig{.avg_samples = 1500});
    double worst = 0.0;
    for (std::size_t lag = 1; lag <= 300; ++lag) {
      worst = std::max(worst, std::abs(b.averaged[lag] - theoretical_acf_g(scene, r, b.lags_s[lag])));
    }
    CHECK(worst <= 0.1);
  }

  TEST_CASE("subcarrier averaging reduces noise") {
    ScattererScene scene;
    scene.dynamic.push_back(Scatterer{.speed_mps = 1.3});
    scene.noise_variance = 0.05;
    scene.seed = 8;
    const auto r = radio(30);
    const auto p = synthesize_power(scene, r, 1.0);
    const auto b = acf_block(p, 0.9, AcfConfig{});
    auto deviation_std = [&](std::span<const double> curve) {
      double s = 0.0, s2 = 0.0;
      for (std::size_t lag = 1; lag <= 300; ++lag) {
        const double d = curve[lag] - theoretical_acf_g(scene, r, b.lags_s[lag]);
        s += d;
        s2 += d * d;
      }
      return std::sqrt(s2 / 300 - (s / 300) * (s / 300));
    };
    std::vector<double> per;
    for (std::size_t f = 0; f < 30; ++f) per.push_back(deviation_std(b.subcarrier(f)));
    std::nth_element(per.begin(), per.begin() + 15, per.end());
    CHECK(deviation_std(b.averaged) <= per[15] / std::sqrt(15.0));
  }

  TEST_CASE("stream equals direct blocks") {
    const auto scene = make_scene(SceneKind::device_free, SpeedProfile::constant(1.0), 12);
    const auto p = synthesize_power(scene, radio(4), 1.0);
    const AcfConfig cfg;
    const auto blocks = stream_blocks(p, cfg);
    REQUIRE(!blocks.empty());
    CHECK(blocks.front().t_center_s >= p.timestamps_s[cfg.window_frames(1500.0) - 1] - 1e-12);
    for (std::size_t i = 1; i < blocks.size(); ++i) {
      CHECK(blocks[i].t_center_s - blocks[i - 1].t_center_s == doctest::Approx(0.05));
    }
    for (const auto& r : blocks) {
      REQUIRE(r.block);
      const auto direct = acf_block(p, r.t_center_s, cfg);
      CHECK(direct.averaged == r.block->averaged);
    }
  }

  TEST_CASE("window size and operation count") {
    const double lambda = radio(1).wavelength_m();
    CHECK(min_window_seconds(1.3, lambda, 1500.0, 100) == doctest::Approx(0.12).epsilon(0.05));
    const std::size_t frames = min_window_frames(1.3, lambda, 1500.0, 100);
    CHECK(frames == static_cast<std::size_t>(std::ceil(0.54 * lambda / 1.3 * 1500.0)) + 100);
    CHECK(static_cast<double>(frames) / 1500.0 ==
          doctest::Approx(min_window_seconds(1.3, lambda, 1500.0, 100)).epsilon(0.01));
    CHECK(multiplications_per_block(180, 100, 300) == 5400000);
  }

  TEST_CASE("config validation") {
    AcfConfig bad{.max_lag_s = 0.001, .hop_s = -1.0, .avg_samples = 1};
    try {
      bad.validate(1500.0);
      FAIL("expected invalid-config");
    } catch (const Error& e) {
      const std::string msg = e.what();
      CHECK(msg.find("max_lag") != std::string::npos);
      CHECK(msg.find("avg_samples") != std::string::npos);
      CHECK(msg.find("hop_s") != std::string::npos);
    }
  }
}
