#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "csispeed/em_simulator.hpp"

namespace csispeed {

enum class SceneKind { device_based, device_free };

/// Scene presets: device-based puts all power in the carried source; device-free adds a weak
/// static field and stronger measurement noise.
struct ScenePreset {
  double dynamic_power = 1.0;
  double static_power_per_axis = 0.0;
  double noise_variance = 0.01;
  int n_waves = 512;
};

ScenePreset preset_for(SceneKind kind);
ScattererScene make_scene(SceneKind kind, const SpeedProfile& profile, std::uint64_t seed);
ScattererScene make_scene(const ScenePreset& preset, const SpeedProfile& profile,
                          std::uint64_t seed);

/// mean + amplitude * sin(2 pi t / period), sampled every `step_s`.
SpeedProfile oscillating_profile(double mean_mps, double amplitude_mps, double period_s,
                                 double duration_s, double step_s = 0.005);

enum class Activity { fall, sit_down, stand_up, pick_up, walk };

std::string_view activity_name(Activity a);
bool parse_activity(std::string_view name, Activity& out);

/// Randomized speed profile of one activity over `duration_s`.
SpeedProfile activity_profile(Activity activity, std::mt19937_64& rng, double duration_s = 8.0);

}  // namespace csispeed
