#include "csispeed/scenarios.hpp"

#include <cmath>
#include <numbers>

#include "csispeed/error.hpp"

namespace csispeed {

ScenePreset preset_for(SceneKind kind) {
  ScenePreset p;
  if (kind == SceneKind::device_free) {
    p.static_power_per_axis = 0.005;
    p.noise_variance = 0.1;
  }
  return p;
}

ScattererScene make_scene(const ScenePreset& preset, const SpeedProfile& profile,
                          std::uint64_t seed) {
  ScattererScene scene;
  Scatterer s;
  s.power = preset.dynamic_power;
  s.n_waves = preset.n_waves;
  s.speed_mps = profile.speed_at(0.0);
  s.profile = profile;
  scene.dynamic.push_back(s);
  scene.static_power_per_axis = {preset.static_power_per_axis, preset.static_power_per_axis,
                                 preset.static_power_per_axis};
  scene.noise_variance = preset.noise_variance;
  scene.seed = seed;
  return scene;
}

ScattererScene make_scene(SceneKind kind, const SpeedProfile& profile, std::uint64_t seed) {
  return make_scene(preset_for(kind), profile, seed);
}

SpeedProfile oscillating_profile(double mean, double amplitude, double period, double duration,
                                 double step) {
  if (!(period > 0.0) || !(duration > 0.0) || !(step > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "period, duration and step must be > 0");
  }
  std::vector<double> t, v;
  const auto count = static_cast<std::size_t>(std::ceil(duration / step));
  for (std::size_t i = 0; i <= count; ++i) {
    const double ti = static_cast<double>(i) * step;
    t.push_back(ti);
    v.push_back(std::max(0.0, mean + amplitude * std::sin(2.0 * std::numbers::pi * ti / period)));
  }
  return SpeedProfile(std::move(t), std::move(v));
}

std::string_view activity_name(Activity a) {
  switch (a) {
    case Activity::fall: return "fall";
    case Activity::sit_down: return "sit-down";
    case Activity::stand_up: return "stand-up";
    case Activity::pick_up: return "pick-up";
    case Activity::walk: return "walk";
  }
  return "unknown";
}

bool parse_activity(std::string_view name, Activity& out) {
  for (Activity a : {Activity::fall, Activity::sit_down, Activity::stand_up, Activity::pick_up,
                     Activity::walk}) {
    if (activity_name(a) == name) {
      out = a;
      return true;
    }
  }
  return false;
}

namespace {

struct Knots {
  std::vector<double> t{0.0};
  std::vector<double> v{0.0};
  void to(double dt, double speed) {
    t.push_back(t.back() + dt);
    v.push_back(speed);
  }
};

}  // namespace

SpeedProfile activity_profile(Activity activity, std::mt19937_64& rng, double duration) {
  auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  Knots k;
  switch (activity) {
    case Activity::fall:
      k.to(u(2.0, 4.0), 0.0);
      k.to(u(0.35, 0.5), u(1.6, 2.2));
      k.to(u(0.25, 0.4), 0.0);
      break;
    case Activity::sit_down:
      k.to(u(2.0, 4.0), 0.0);
      k.to(u(0.5, 0.8), u(0.5, 0.9));
      k.to(u(0.5, 0.8), 0.0);
      break;
    case Activity::stand_up:
      k.to(u(2.0, 4.0), 0.0);
      k.to(u(0.5, 0.8), u(0.6, 1.0));
      k.to(u(0.6, 0.9), 0.0);
      break;
    case Activity::pick_up: {
      k.to(u(1.5, 3.0), 0.0);
      k.to(u(0.4, 0.6), u(0.5, 0.8));
      k.to(u(0.4, 0.6), 0.0);
      k.to(u(0.5, 1.0), 0.0);
      k.to(u(0.4, 0.6), u(0.5, 0.8));
      k.to(u(0.4, 0.6), 0.0);
      break;
    }
    case Activity::walk: {
      const double v = u(1.0, 1.4);
      k.to(u(0.5, 1.5), 0.0);
      k.to(u(1.2, 1.8), v);
      k.to(u(2.0, 2.5), v);
      k.to(u(1.2, 1.8), 0.0);
      break;
    }
  }
  if (k.t.back() < duration) k.to(duration - k.t.back(), 0.0);
  return SpeedProfile(std::move(k.t), std::move(k.v));
}

}  // namespace csispeed
