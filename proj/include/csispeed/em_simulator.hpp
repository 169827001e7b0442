#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "csispeed/csi_io.hpp"

namespace csispeed {

using Vec3 = std::array<double, 3>;

/// Piecewise-linear speed over time; held constant outside the knot range.
class SpeedProfile {
 public:
  SpeedProfile() = default;
  SpeedProfile(std::vector<double> times_s, std::vector<double> speeds_mps);

  static SpeedProfile constant(double speed_mps);

  double speed_at(double t_s) const;
  /// Distance travelled since t = 0 (exact integral of the piecewise-linear speed).
  double displacement_at(double t_s) const;

  const std::vector<double>& times_s() const { return times_; }
  const std::vector<double>& speeds_mps() const { return speeds_; }

 private:
  std::vector<double> times_;
  std::vector<double> speeds_;
  std::vector<double> cumulative_;
};

struct Scatterer {
  double speed_mps = 1.0;
  double power = 1.0;
  Vec3 direction{0.0, 0.0, 1.0};
  int n_waves = 512;
  /// Overrides speed_mps when set.
  std::optional<SpeedProfile> profile;

  void validate() const;
  double speed_at(double t_s) const;
  double displacement_at(double t_s) const;
};

struct ScattererScene {
  std::vector<Scatterer> dynamic;
  Vec3 static_power_per_axis{0.0, 0.0, 0.0};
  double noise_variance = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
  double dynamic_power() const;
};

struct SynthesisOptions {
  /// Use k = 2*pi*f/c per subcarrier instead of the carrier wavenumber.
  bool per_subcarrier_wavenumber = false;
};

/// Independent random stream for a (scatterer, subcarrier) pair.
std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t subcarrier);

/// Plane waves of one scatterer, expressed in the lab frame.
///
/// Each wave contributes amplitude * exp(j k c x) where x is the scatterer's
/// displacement and c the cosine between arrival direction and motion axis.
struct PlaneWaveField {
  std::vector<double> doppler_cos;
  std::vector<std::array<std::complex<double>, 3>> amplitude;

  static PlaneWaveField draw(const Scatterer& scatterer, std::mt19937_64& rng);

  std::size_t size() const { return doppler_cos.size(); }
  std::array<std::complex<double>, 3> at(double wavenumber, double displacement_m) const;
};

std::vector<double> frame_timestamps(double sampling_rate_hz, double duration_s);

PowerResponse synthesize_power(const ScattererScene& scene, const RadioConfig& radio,
                               double duration_s, const SynthesisOptions& options = {});

/// H = sqrt(max(G, 0)) with zero phase.
CsiTrace synthesize(const ScattererScene& scene, const RadioConfig& radio, double duration_s,
                    const SynthesisOptions& options = {});

/// Speed of the first dynamic scatterer at each timestamp.
std::vector<double> ground_truth_speed(const ScattererScene& scene,
                                       const std::vector<double>& timestamps_s);

double acf_field(double kvt);
double acf_axis_transverse(double kvt);
double acf_axis_longitudinal(double kvt);
double acf_axis_transverse_derivative(double kvt);

/// Normalized power ACF rho_G(tau), tau > 0.
double theoretical_acf_g(const ScattererScene& scene, const RadioConfig& radio, double tau_s);

/// Displacement in wavelengths of the first local maximum of d/dd rho_T^2(2 pi d).
double first_peak_distance_transverse();

}  // namespace csispeed
