#include "csispeed/em_simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <thread>

#include <boost/math/tools/minima.hpp>

#include "csispeed/error.hpp"

namespace csispeed {

namespace {

constexpr std::uint64_t kStaticStream = 1ULL << 32;
constexpr std::uint64_t kNoiseStream = (1ULL << 32) + 1;
constexpr std::size_t kChunkFrames = 256;
constexpr double kSeriesCutoff = 0.5;
constexpr int kSeriesTerms = 12;

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Power-series coefficients of rho_T and rho_L in x^(2m).
double transverse_coefficient(int m) {
  const double sign = (m % 2 == 0) ? 1.0 : -1.0;
  return 1.5 * sign * (1.0 / factorial(2 * m + 1) - 2.0 * (m + 1) / factorial(2 * m + 3));
}

double longitudinal_coefficient(int m) {
  const double sign = (m % 2 == 0) ? 1.0 : -1.0;
  return 3.0 * sign * 2.0 * (m + 1) / factorial(2 * m + 3);
}

template <typename Coefficient>
double even_series(double x, Coefficient coefficient) {
  const double x2 = x * x;
  double sum = 0.0;
  double power = 1.0;
  for (int m = 0; m < kSeriesTerms; ++m) {
    sum += coefficient(m) * power;
    power *= x2;
  }
  return sum;
}

template <typename Coefficient>
double even_series_derivative(double x, Coefficient coefficient) {
  const double x2 = x * x;
  double sum = 0.0;
  double power = x;
  for (int m = 1; m < kSeriesTerms; ++m) {
    sum += 2.0 * m * coefficient(m) * power;
    power *= x2;
  }
  return sum;
}

void check_argument(double x) {
  if (!(x >= 0.0) || !std::isfinite(x)) {
    throw Error(ErrorCode::invalid_argument, "ACF argument must be finite and non-negative");
  }
}

struct Bessel {
  double j0, j1, j2;
};

Bessel spherical_bessel(double x) {
  const double s = std::sin(x);
  const double c = std::cos(x);
  const double j0 = s / x;
  const double j1 = s / (x * x) - c / x;
  const double j2 = (3.0 / (x * x) - 1.0) * s / x - 3.0 * c / (x * x);
  return {j0, j1, j2};
}

// Rotation taking the z axis onto `d`.
std::array<Vec3, 3> rotation_to(const Vec3& d) {
  const double c = d[2];
  if (c > 1.0 - 1e-12) {
    return {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  }
  if (c < -1.0 + 1e-12) {
    return {{{1, 0, 0}, {0, -1, 0}, {0, 0, -1}}};
  }
  // Axis z x d, angle acos(c).
  const double ax = -d[1];
  const double ay = d[0];
  const double s2 = ax * ax + ay * ay;
  const double k = (1.0 - c) / s2;
  return {{{c + k * ax * ax, k * ax * ay, ay},
           {k * ax * ay, c + k * ay * ay, -ax},
           {-ay, ax, c}}};
}

double norm3(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

}  // namespace

SpeedProfile::SpeedProfile(std::vector<double> times_s, std::vector<double> speeds_mps)
    : times_(std::move(times_s)), speeds_(std::move(speeds_mps)) {
  if (times_.empty() || times_.size() != speeds_.size()) {
    throw Error(ErrorCode::invalid_argument, "speed profile needs matching non-empty knots");
  }
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (!std::isfinite(times_[i]) || !std::isfinite(speeds_[i]) || speeds_[i] < 0.0) {
      throw Error(ErrorCode::invalid_argument, "speed profile knots must be finite, speeds >= 0");
    }
    if (i > 0 && !(times_[i] > times_[i - 1])) {
      throw Error(ErrorCode::invalid_argument, "speed profile times must increase");
    }
  }
  cumulative_.assign(times_.size(), 0.0);
  for (std::size_t i = 1; i < times_.size(); ++i) {
    cumulative_[i] =
        cumulative_[i - 1] + 0.5 * (speeds_[i] + speeds_[i - 1]) * (times_[i] - times_[i - 1]);
  }
}

SpeedProfile SpeedProfile::constant(double speed_mps) { return SpeedProfile({0.0}, {speed_mps}); }

double SpeedProfile::speed_at(double t) const {
  if (t <= times_.front()) return speeds_.front();
  if (t >= times_.back()) return speeds_.back();
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - times_.begin()) - 1;
  const double w = (t - times_[i]) / (times_[i + 1] - times_[i]);
  return speeds_[i] + w * (speeds_[i + 1] - speeds_[i]);
}

double SpeedProfile::displacement_at(double t) const {
  // Distance from time 0, so account for the constant segment before the first knot.
  auto from_origin = [&](double u) {
    if (u <= times_.front()) return speeds_.front() * (u - times_.front());
    if (u >= times_.back()) return cumulative_.back() + speeds_.back() * (u - times_.back());
    const auto it = std::upper_bound(times_.begin(), times_.end(), u);
    const std::size_t i = static_cast<std::size_t>(it - times_.begin()) - 1;
    const double v = speed_at(u);
    return cumulative_[i] + 0.5 * (speeds_[i] + v) * (u - times_[i]);
  };
  return from_origin(t) - from_origin(0.0);
}

void Scatterer::validate() const {
  std::ostringstream problems;
  if (!(speed_mps >= 0.0) || !std::isfinite(speed_mps)) problems << " speed must be >= 0;";
  if (!(power > 0.0) || !std::isfinite(power)) problems << " power must be > 0;";
  if (std::abs(norm3(direction) - 1.0) > 1e-9) problems << " direction must be a unit vector;";
  if (n_waves < 16) problems << " n_waves must be >= 16;";
  const std::string text = problems.str();
  if (!text.empty()) throw Error(ErrorCode::invalid_config, "invalid scatterer:" + text);
}

double Scatterer::speed_at(double t) const {
  return profile ? profile->speed_at(t) : speed_mps;
}

double Scatterer::displacement_at(double t) const {
  return profile ? profile->displacement_at(t) : speed_mps * t;
}

void ScattererScene::validate() const {
  for (const auto& s : dynamic) s.validate();
  for (double p : static_power_per_axis) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw Error(ErrorCode::invalid_config, "static power per axis must be finite and >= 0");
    }
  }
  if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance)) {
    throw Error(ErrorCode::invalid_config, "noise variance must be finite and >= 0");
  }
  const double static_total =
      static_power_per_axis[0] + static_power_per_axis[1] + static_power_per_axis[2];
  if (dynamic.empty() && static_total == 0.0 && noise_variance == 0.0) {
    throw Error(ErrorCode::degenerate_scene,
                "scene has no dynamic scatterers, no static field and no noise");
  }
}

double ScattererScene::dynamic_power() const {
  double total = 0.0;
  for (const auto& s : dynamic) total += s.power;
  return total;
}

std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t subcarrier) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(stream), hi(stream), lo(subcarrier), hi(subcarrier)};
  return std::mt19937_64(seq);
}

PlaneWaveField PlaneWaveField::draw(const Scatterer& scatterer, std::mt19937_64& rng) {
  const auto n = static_cast<std::size_t>(scatterer.n_waves);
  const auto rot = rotation_to(scatterer.direction);
  // Each of F_alpha, F_beta has E|F|^2 = power / (2N); real and imaginary parts split it.
  const double sigma = std::sqrt(scatterer.power / (4.0 * static_cast<double>(n)));
  std::uniform_real_distribution<double> cos_dist(-1.0, 1.0);
  std::uniform_real_distribution<double> az_dist(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> gauss(0.0, sigma);

  PlaneWaveField field;
  field.doppler_cos.resize(n);
  field.amplitude.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = cos_dist(rng);
    const double beta = az_dist(rng);
    const double sa = std::sqrt(std::max(0.0, 1.0 - u * u));
    const double cb = std::cos(beta);
    const double sb = std::sin(beta);
    const std::complex<double> fa(gauss(rng), gauss(rng));
    const std::complex<double> fb(gauss(rng), gauss(rng));
    const Vec3 alpha_hat{u * cb, u * sb, -sa};
    const Vec3 beta_hat{-sb, cb, 0.0};
    std::array<std::complex<double>, 3> local;
    for (int a = 0; a < 3; ++a) local[a] = fa * alpha_hat[a] + fb * beta_hat[a];
    for (int r = 0; r < 3; ++r) {
      field.amplitude[i][r] = rot[r][0] * local[0] + rot[r][1] * local[1] + rot[r][2] * local[2];
    }
    field.doppler_cos[i] = u;
  }
  return field;
}

std::array<std::complex<double>, 3> PlaneWaveField::at(double wavenumber,
                                                       double displacement_m) const {
  std::array<std::complex<double>, 3> e{};
  for (std::size_t i = 0; i < size(); ++i) {
    const std::complex<double> phase = std::polar(1.0, wavenumber * doppler_cos[i] * displacement_m);
    for (int u = 0; u < 3; ++u) e[u] += amplitude[i][u] * phase;
  }
  return e;
}

std::vector<double> frame_timestamps(double sampling_rate_hz, double duration_s) {
  if (!(sampling_rate_hz > 0.0) || !(duration_s * sampling_rate_hz >= 2.0 - 1e-9)) {
    throw Error(ErrorCode::invalid_argument, "duration must cover at least two frames");
  }
  const auto count = static_cast<std::size_t>(std::floor(duration_s * sampling_rate_hz + 1e-9));
  std::vector<double> t(count);
  for (std::size_t j = 0; j < count; ++j) t[j] = static_cast<double>(j) / sampling_rate_hz;
  return t;
}

namespace {

// Adds one scatterer's field to e[3][T] using a phasor recurrence re-anchored every chunk.
void accumulate_field(const PlaneWaveField& field, double wavenumber,
                      const std::vector<double>& x, const std::vector<double>& dx,
                      const std::vector<double>& ddx, bool varying,
                      std::array<std::vector<std::complex<double>>, 3>& e) {
  const std::size_t frames = x.size();
  for (std::size_t j0 = 0; j0 < frames; j0 += kChunkFrames) {
    const std::size_t j1 = std::min(frames, j0 + kChunkFrames);
    for (std::size_t n = 0; n < field.size(); ++n) {
      const double omega = wavenumber * field.doppler_cos[n];
      const auto& a = field.amplitude[n];
      double pr = std::cos(omega * x[j0]);
      double pi = std::sin(omega * x[j0]);
      double rr = 1.0;
      double ri = 0.0;
      if (j0 < dx.size()) {
        rr = std::cos(omega * dx[j0]);
        ri = std::sin(omega * dx[j0]);
      }
      const double a0r = a[0].real(), a0i = a[0].imag();
      const double a1r = a[1].real(), a1i = a[1].imag();
      const double a2r = a[2].real(), a2i = a[2].imag();
      auto* e0 = reinterpret_cast<double*>(e[0].data());
      auto* e1 = reinterpret_cast<double*>(e[1].data());
      auto* e2 = reinterpret_cast<double*>(e[2].data());
      for (std::size_t j = j0; j < j1; ++j) {
        e0[2 * j] += a0r * pr - a0i * pi;
        e0[2 * j + 1] += a0r * pi + a0i * pr;
        e1[2 * j] += a1r * pr - a1i * pi;
        e1[2 * j + 1] += a1r * pi + a1i * pr;
        e2[2 * j] += a2r * pr - a2i * pi;
        e2[2 * j + 1] += a2r * pi + a2i * pr;
        const double npr = pr * rr - pi * ri;
        pi = pr * ri + pi * rr;
        pr = npr;
        if (varying && j < ddx.size()) {
          const double eps = omega * ddx[j];
          double qr, qi;
          if (std::abs(eps) < 1e-3) {
            const double e2s = eps * eps;
            qr = 1.0 - 0.5 * e2s + e2s * e2s / 24.0;
            qi = eps * (1.0 - e2s / 6.0);
          } else {
            qr = std::cos(eps);
            qi = std::sin(eps);
          }
          const double nrr = rr * qr - ri * qi;
          ri = rr * qi + ri * qr;
          rr = nrr;
        }
      }
    }
  }
}

struct Motion {
  std::vector<double> x, dx, ddx;
  bool varying = false;
};

Motion motion_of(const Scatterer& s, const std::vector<double>& t) {
  Motion m;
  m.x.resize(t.size());
  for (std::size_t j = 0; j < t.size(); ++j) m.x[j] = s.displacement_at(t[j]);
  if (t.size() >= 2) {
    m.dx.resize(t.size() - 1);
    for (std::size_t j = 0; j + 1 < t.size(); ++j) m.dx[j] = m.x[j + 1] - m.x[j];
  }
  if (m.dx.size() >= 2) {
    m.ddx.resize(m.dx.size() - 1);
    for (std::size_t j = 0; j + 1 < m.dx.size(); ++j) {
      m.ddx[j] = m.dx[j + 1] - m.dx[j];
      if (m.ddx[j] != 0.0) m.varying = true;
    }
  }
  return m;
}

}  // namespace

PowerResponse synthesize_power(const ScattererScene& scene, const RadioConfig& radio,
                               double duration_s, const SynthesisOptions& options) {
  radio.validate();
  scene.validate();
  const auto t = frame_timestamps(radio.sampling_rate_hz, duration_s);
  const std::size_t frames = t.size();
  const std::size_t subcarriers = radio.subcarrier_count();

  std::vector<Motion> motions;
  motions.reserve(scene.dynamic.size());
  for (const auto& s : scene.dynamic) motions.push_back(motion_of(s, t));

  PowerResponse out;
  out.config = radio;
  out.timestamps_s = t;
  out.values.assign(frames * subcarriers, 0.0);

  auto run_subcarrier = [&](std::size_t f) {
    const double k = options.per_subcarrier_wavenumber
                         ? radio.wavenumber(radio.subcarrier_frequencies_hz[f])
                         : radio.carrier_wavenumber();
    std::array<std::vector<std::complex<double>>, 3> e;
    auto static_rng = substream(scene.seed, kStaticStream, f);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    for (int u = 0; u < 3; ++u) {
      const auto es = std::polar(std::sqrt(scene.static_power_per_axis[u]), phase(static_rng));
      e[u].assign(frames, es);
    }
    for (std::size_t i = 0; i < scene.dynamic.size(); ++i) {
      auto rng = substream(scene.seed, i, f);
      const auto field = PlaneWaveField::draw(scene.dynamic[i], rng);
      const auto& m = motions[i];
      accumulate_field(field, k, m.x, m.dx, m.ddx, m.varying, e);
    }
    auto noise_rng = substream(scene.seed, kNoiseStream, f);
    std::normal_distribution<double> noise(0.0, std::sqrt(scene.noise_variance));
    for (std::size_t j = 0; j < frames; ++j) {
      double g = std::norm(e[0][j]) + std::norm(e[1][j]) + std::norm(e[2][j]);
      if (scene.noise_variance > 0.0) g += noise(noise_rng);
      out.values[j * subcarriers + f] = g;
    }
  };

  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), subcarriers));
  if (workers == 1) {
    for (std::size_t f = 0; f < subcarriers; ++f) run_subcarrier(f);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t f = w; f < subcarriers; f += workers) run_subcarrier(f);
      });
    }
  }
  return out;
}

CsiTrace synthesize(const ScattererScene& scene, const RadioConfig& radio, double duration_s,
                    const SynthesisOptions& options) {
  const auto power = synthesize_power(scene, radio, duration_s, options);
  CsiTrace trace;
  trace.config = power.config;
  trace.timestamps_s = power.timestamps_s;
  trace.frames.resize(power.values.size());
  for (std::size_t i = 0; i < power.values.size(); ++i) {
    trace.frames[i] = {static_cast<float>(std::sqrt(std::max(power.values[i], 0.0))), 0.0f};
  }
  return trace;
}

std::vector<double> ground_truth_speed(const ScattererScene& scene,
                                       const std::vector<double>& timestamps_s) {
  std::vector<double> v(timestamps_s.size(), 0.0);
  if (scene.dynamic.empty()) return v;
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = scene.dynamic.front().speed_at(timestamps_s[j]);
  return v;
}

double acf_field(double x) {
  check_argument(x);
  if (x < kSeriesCutoff) {
    return even_series(x, [](int m) {
      return ((m % 2 == 0) ? 1.0 : -1.0) / factorial(2 * m + 1);
    });
  }
  return std::sin(x) / x;
}

double acf_axis_transverse(double x) {
  check_argument(x);
  if (x < kSeriesCutoff) return even_series(x, transverse_coefficient);
  const auto b = spherical_bessel(x);
  return 1.5 * (b.j0 - b.j1 / x);
}

double acf_axis_longitudinal(double x) {
  check_argument(x);
  if (x < kSeriesCutoff) return even_series(x, longitudinal_coefficient);
  const auto b = spherical_bessel(x);
  return 3.0 * b.j1 / x;
}

double acf_axis_transverse_derivative(double x) {
  check_argument(x);
  if (x < kSeriesCutoff) return even_series_derivative(x, transverse_coefficient);
  const auto b = spherical_bessel(x);
  return 1.5 * (-b.j1 + b.j2 / x);
}

double theoretical_acf_g(const ScattererScene& scene, const RadioConfig& radio, double tau_s) {
  if (!(tau_s > 0.0)) throw Error(ErrorCode::invalid_argument, "tau must be > 0");
  if (!(scene.dynamic_power() > 0.0)) {
    throw Error(ErrorCode::undefined_acf, "ACF undefined without dynamic power");
  }
  const double k = radio.carrier_wavenumber();
  // Axis covariance C(tau) = sum_i (E_i^2/3) [rho_T (I - d d^T) + rho_L d d^T].
  auto covariance = [&](double tau) {
    std::array<std::array<double, 3>, 3> c{};
    for (const auto& s : scene.dynamic) {
      const double x = k * s.speed_mps * tau;
      const double rt = tau == 0.0 ? 1.0 : acf_axis_transverse(x);
      const double rl = tau == 0.0 ? 1.0 : acf_axis_longitudinal(x);
      const double w = s.power / 3.0;
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
          const double dd = s.direction[a] * s.direction[b];
          c[a][b] += w * (rt * ((a == b ? 1.0 : 0.0) - dd) + rl * dd);
        }
      }
    }
    return c;
  };
  auto gamma = [&](double tau) {
    const auto c = covariance(tau);
    double g = 0.0;
    for (int a = 0; a < 3; ++a) {
      g += 2.0 * scene.static_power_per_axis[a] * c[a][a];
      for (int b = 0; b < 3; ++b) g += c[a][b] * c[a][b];
    }
    return g;
  };
  return gamma(tau_s) / (gamma(0.0) + scene.noise_variance);
}

double first_peak_distance_transverse() {
  const double two_pi = 2.0 * std::numbers::pi;
  // d/dd rho_T(2 pi d)^2 = 4 pi rho_T rho_T'.
  auto slope = [&](double d) {
    const double x = two_pi * d;
    return 2.0 * two_pi * acf_axis_transverse(x) * acf_axis_transverse_derivative(x);
  };
  const double step = 1e-3;
  double prev2 = slope(step);
  double prev = slope(2 * step);
  for (int i = 3; i < 5000; ++i) {
    const double d = i * step;
    const double cur = slope(d);
    if (prev > prev2 && prev >= cur) {
      const auto r = boost::math::tools::brent_find_minima(
          [&](double z) { return -slope(z); }, d - 2 * step, d, 52);
      return r.first;
    }
    prev2 = prev;
    prev = cur;
  }
  throw Error(ErrorCode::not_converged, "no local maximum found");
}

}  // namespace csispeed
