#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "csispeed/acf_engine.hpp"
#include "csispeed/csi_io.hpp"
#include "csispeed/em_simulator.hpp"
#include "csispeed/error.hpp"
#include "csispeed/event_detector.hpp"
#include "csispeed/kinematics.hpp"
#include "csispeed/peak_finder.hpp"
#include "csispeed/scenarios.hpp"
#include "csispeed/speed_pipeline.hpp"

namespace csispeed::cli {

namespace {

using nlohmann::json;

struct Options {
  double carrier_hz = 5.805e9;
  double bandwidth_hz = 40e6;
  double sampling_rate_hz = 1500.0;
  std::size_t subcarriers = 30;

  double max_lag_s = 0.2;
  double hop_s = 0.05;
  int avg_samples = 100;

  int half_window = 8;
  double false_peak_rate = 0.01;
  std::optional<double> threshold;
  int min_separation = 0;
  int guard_lags = 2;
  double refine_fraction = 0.1;

  int median_window = 5;
  double min_speed = 0.2;
  double max_speed = 4.0;
  double motion_gate = 2.5;

  std::optional<double> lambda;
  double lambda_fraction = 0.03;
  double trend_tolerance = 1e-8;
  int trend_max_iterations = 200;

  double fall_window_s = 0.5;
  double delta_a_threshold = 1.6;
  double vmax_threshold = 1.2;
  double merge_s = 1.0;

  double min_persistence = 0.15;
  double gait_min_speed = 1.0;
  double gait_max_speed = 2.0;
  double gait_max_accel = 3.0;

  std::string input;
  std::string output;

  std::string scene = "device-based";
  std::string motion = "constant";
  double speed = 1.3;
  double duration_s = 12.0;
  std::uint64_t seed = 7;
  std::optional<double> static_power;
  std::optional<double> noise_variance;
  std::optional<int> waves;
  bool per_subcarrier_k = false;
  std::string truth;

  std::vector<double> distance;
};

SpeedConfig speed_config(const Options& o) {
  SpeedConfig cfg;
  cfg.acf.max_lag_s = o.max_lag_s;
  cfg.acf.hop_s = o.hop_s;
  cfg.acf.avg_samples = o.avg_samples;
  cfg.peak.half_window = o.half_window;
  cfg.peak.min_separation = o.min_separation;
  cfg.peak.guard_lags = o.guard_lags;
  cfg.peak.refine_fraction = o.refine_fraction;
  cfg.peak.threshold = o.threshold ? *o.threshold
                                   : (o.half_window >= 2 && o.false_peak_rate > 0.0 &&
                                              o.false_peak_rate < 1.0
                                          ? f_quantile(o.half_window, o.false_peak_rate)
                                          : 0.0);
  cfg.median_window = o.median_window;
  cfg.min_speed_mps = o.min_speed;
  cfg.max_speed_mps = o.max_speed;
  cfg.motion_gate_factor = o.motion_gate;
  return cfg;
}

TrendFilterConfig trend_config(const Options& o) {
  TrendFilterConfig cfg;
  cfg.lambda_reg = o.lambda;
  cfg.lambda_fraction = o.lambda_fraction;
  cfg.tolerance = o.trend_tolerance;
  cfg.max_iterations = o.trend_max_iterations;
  return cfg;
}

FallConfig fall_config(const Options& o) {
  FallConfig cfg;
  cfg.window_s = o.fall_window_s;
  cfg.delta_a_threshold = o.delta_a_threshold;
  cfg.vmax_threshold = o.vmax_threshold;
  cfg.merge_s = o.merge_s;
  cfg.trend = trend_config(o);
  return cfg;
}

GaitConfig gait_config(const Options& o) {
  GaitConfig cfg;
  cfg.min_persistence = o.min_persistence;
  cfg.min_mean_speed = o.gait_min_speed;
  cfg.max_mean_speed = o.gait_max_speed;
  cfg.max_abs_accel = o.gait_max_accel;
  return cfg;
}

RadioConfig radio_config(const Options& o) {
  return RadioConfig::uniform(o.carrier_hz, o.bandwidth_hz, o.sampling_rate_hz, o.subcarriers);
}

// Collects every violated invariant across the sub-configurations.
void validate_all(const Options& o) {
  std::vector<std::string> problems;
  auto check = [&](const std::function<void()>& f) {
    try {
      f();
    } catch (const Error& e) {
      problems.emplace_back(e.what());
    }
  };
  check([&] { radio_config(o).validate(); });
  check([&] {
    if (!o.threshold && !(o.false_peak_rate > 0.0 && o.false_peak_rate < 1.0)) {
      throw Error(ErrorCode::invalid_config, "false-peak-rate must lie in (0, 1)");
    }
  });
  check([&] { speed_config(o).validate(o.sampling_rate_hz); });
  check([&] { trend_config(o).validate(); });
  check([&] { fall_config(o).validate(); });
  check([&] {
    if (!(o.min_persistence >= 0.0)) {
      throw Error(ErrorCode::invalid_config, "min-persistence must be >= 0");
    }
  });
  if (!problems.empty()) {
    std::string joined;
    for (const auto& p : problems) joined += (joined.empty() ? "" : "; ") + p;
    throw Error(ErrorCode::invalid_config, joined);
  }
}

std::optional<double> opt_json(const std::optional<double>& v) { return v; }

json nullable(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

PowerResponse load_power(const Options& o) {
  if (!std::filesystem::exists(o.input)) {
    throw Error(ErrorCode::input_not_found, "input not found: " + o.input);
  }
  return power_response(load_trace(o.input));
}

// Writes to --output when given, otherwise to `out`.
void emit(const Options& o, std::ostream& out, const std::function<void(std::ostream&)>& body) {
  if (o.output.empty()) {
    body(out);
    return;
  }
  std::ofstream file(o.output, std::ios::binary);
  if (!file) throw Error(ErrorCode::io_error, "cannot open output: " + o.output);
  body(file);
  if (!file) throw Error(ErrorCode::io_error, "failed writing output: " + o.output);
}

SpeedProfile motion_profile(const Options& o) {
  if (o.motion == "constant") return SpeedProfile::constant(o.speed);
  if (o.motion == "gait") return oscillating_profile(o.speed, 0.3, 0.54, o.duration_s);
  Activity a;
  if (!parse_activity(o.motion, a)) {
    throw Error(ErrorCode::invalid_config, "unknown motion: " + o.motion);
  }
  std::mt19937_64 rng(o.seed);
  return activity_profile(a, rng, o.duration_s);
}

void cmd_simulate(const Options& o, std::ostream& out) {
  if (o.output.empty()) throw Error(ErrorCode::invalid_config, "simulate needs --output");
  SceneKind kind;
  if (o.scene == "device-based") {
    kind = SceneKind::device_based;
  } else if (o.scene == "device-free") {
    kind = SceneKind::device_free;
  } else {
    throw Error(ErrorCode::invalid_config, "unknown scene: " + o.scene);
  }
  auto preset = preset_for(kind);
  if (o.static_power) preset.static_power_per_axis = *o.static_power;
  if (o.noise_variance) preset.noise_variance = *o.noise_variance;
  if (o.waves) preset.n_waves = *o.waves;
  const auto radio = radio_config(o);
  const auto scene = make_scene(preset, motion_profile(o), o.seed);
  SynthesisOptions options;
  options.per_subcarrier_wavenumber = o.per_subcarrier_k;
  const auto trace = synthesize(scene, radio, o.duration_s, options);
  write_trace(trace, std::filesystem::path(o.output));

  const std::string truth_path = o.truth.empty() ? o.output + ".truth.ndjson" : o.truth;
  std::ofstream truth(truth_path, std::ios::binary);
  if (!truth) throw Error(ErrorCode::io_error, "cannot open ground-truth output: " + truth_path);
  const auto v = ground_truth_speed(scene, trace.timestamps_s);
  for (std::size_t i = 0; i < v.size(); ++i) {
    truth << json{{"t", trace.timestamps_s[i]}, {"v_true", v[i]}}.dump() << '\n';
  }
  out << json{{"trace", o.output},
              {"truth", truth_path},
              {"frames", trace.frame_count()},
              {"subcarriers", trace.subcarrier_count()}}
             .dump()
      << '\n';
}

void cmd_acf_dump(const Options& o, std::ostream& out) {
  const auto power = load_power(o);
  const auto blocks = stream_blocks(power, speed_config(o).acf);
  emit(o, out, [&](std::ostream& s) {
    for (const auto& b : blocks) {
      if (!b.block) {
        s << json{{"t", b.t_center_s},
                  {"skipped", std::string(error_code_name(*b.skip_code))},
                  {"reason", b.skip_reason}}
                 .dump()
          << '\n';
        continue;
      }
      s << json{{"t", b.t_center_s},
                {"lags", b.block->lags_s},
                {"acf", b.block->averaged},
                {"dacf", b.block->differential}}
               .dump()
        << '\n';
    }
  });
}

void cmd_estimate(const Options& o, std::ostream& out) {
  const auto series = estimate_speed(load_power(o), speed_config(o));
  emit(o, out, [&](std::ostream& s) {
    for (std::size_t i = 0; i < series.size(); ++i) {
      s << json{{"t", series.timestamps_s[i]},
                {"v_raw", nullable(series.raw_mps[i])},
                {"v_smooth", nullable(series.smoothed_mps[i])}}
               .dump()
        << '\n';
    }
  });
  if (!o.distance.empty()) {
    if (o.distance.size() != 2) throw Error(ErrorCode::invalid_config, "--distance takes t0 t1");
    const double d = integrate_distance(series, o.distance[0], o.distance[1]);
    out << json{{"t0", o.distance[0]}, {"t1", o.distance[1]}, {"distance_m", d}}.dump() << '\n';
  }
}

void cmd_gait(const Options& o, std::ostream& out) {
  const auto series = estimate_speed(load_power(o), speed_config(o));
  const auto accel = acceleration(series, trend_config(o));
  const auto r = gait_cycles(series, accel, gait_config(o));
  emit(o, out, [&](std::ostream& s) {
    s << json{{"gate_passed", r.gate_passed},
              {"gate_reason", r.gate_reason},
              {"step_count", r.step_count},
              {"peak_times_s", r.peak_times_s},
              {"cycle_times_s", r.cycle_times_s},
              {"stride_lengths_m", r.stride_lengths_m},
              {"mean_stride_m", r.mean_stride_m}}
             .dump()
      << '\n';
  });
}

void cmd_falls(const Options& o, std::ostream& out) {
  const auto series = estimate_speed(load_power(o), speed_config(o));
  const auto events = detect_falls(series, fall_config(o));
  emit(o, out, [&](std::ostream& s) {
    for (const auto& e : events) {
      s << json{{"t", e.t_s}, {"delta_a", e.delta_a}, {"v_max", e.v_max}}.dump() << '\n';
    }
  });
}

// Keeps the top-level settings that carry a value, so the text loads back as a config file.
std::string global_config(const std::string& dump) {
  std::istringstream in(dump);
  std::string line, kept;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key.find('.') != std::string::npos || key == "dump-config" || value == "\"\"") continue;
    kept += line + '\n';
  }
  return kept;
}

void print_error(std::ostream& err, std::string_view code, const std::string& message) {
  err << json{{"error", {{"code", code}, {"message", message}}}}.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Speed, gait and fall estimation from CSI power measurements", "csispeed"};
  app.set_config("--config", "", "Key-value config file; flags override it")->envname(kConfigEnv);
  app.require_subcommand(1);
  bool dump_config = false;
  app.add_flag("--dump-config", dump_config, "Print the effective configuration and exit");

  app.add_option("--carrier-frequency", o.carrier_hz, "Carrier frequency (Hz)")->capture_default_str();
  app.add_option("--bandwidth", o.bandwidth_hz, "Occupied bandwidth (Hz)")->capture_default_str();
  app.add_option("--sampling-rate", o.sampling_rate_hz, "CSI frames per second")->capture_default_str();
  app.add_option("--subcarriers", o.subcarriers, "Subcarrier count")->capture_default_str();
  app.add_option("--max-lag", o.max_lag_s, "Largest ACF lag (s)")->capture_default_str();
  app.add_option("--hop", o.hop_s, "Spacing between ACF blocks (s)")->capture_default_str();
  app.add_option("--avg-samples", o.avg_samples, "Products averaged per lag (M)")->capture_default_str();
  app.add_option("--half-window", o.half_window, "Peak finder half window (L)")->capture_default_str();
  app.add_option("--false-peak-rate", o.false_peak_rate, "Per-window false peak probability")
      ->capture_default_str();
  app.add_option("--threshold", o.threshold, "Explicit peak score threshold");
  app.add_option("--min-separation", o.min_separation, "Minimum peak spacing (samples)")
      ->capture_default_str();
  app.add_option("--guard-lags", o.guard_lags, "Leading differential samples to skip")
      ->capture_default_str();
  app.add_option("--refine-fraction", o.refine_fraction, "Peak refit half window per lag")
      ->capture_default_str();
  app.add_option("--median-window", o.median_window, "Median filter length")->capture_default_str();
  app.add_option("--min-speed", o.min_speed, "Slowest accepted speed (m/s)")->capture_default_str();
  app.add_option("--max-speed", o.max_speed, "Fastest accepted speed (m/s)")->capture_default_str();
  app.add_option("--motion-gate", o.motion_gate, "Lag-1 ACF gate in units of 1/sqrt(M)")
      ->capture_default_str();
  app.add_option("--lambda", o.lambda, "Trend filter regularization");
  app.add_option("--lambda-fraction", o.lambda_fraction, "Regularization as a fraction of lambda_max")
      ->capture_default_str();
  app.add_option("--trend-tolerance", o.trend_tolerance, "Relative duality gap")->capture_default_str();
  app.add_option("--trend-max-iterations", o.trend_max_iterations, "Solver iteration cap")
      ->capture_default_str();
  app.add_option("--fall-window", o.fall_window_s, "Fall metric window (s)")->capture_default_str();
  app.add_option("--delta-a-threshold", o.delta_a_threshold, "Fall acceleration swing (m/s^2)")
      ->capture_default_str();
  app.add_option("--vmax-threshold", o.vmax_threshold, "Fall peak speed (m/s)")->capture_default_str();
  app.add_option("--merge", o.merge_s, "Merge distance between fall windows (s)")->capture_default_str();
  app.add_option("--min-persistence", o.min_persistence, "Gait peak persistence (m/s)")
      ->capture_default_str();
  app.add_option("--gait-min-speed", o.gait_min_speed, "Gait gate lower speed (m/s)")->capture_default_str();
  app.add_option("--gait-max-speed", o.gait_max_speed, "Gait gate upper speed (m/s)")->capture_default_str();
  app.add_option("--gait-max-accel", o.gait_max_accel, "Gait gate acceleration bound (m/s^2)")
      ->capture_default_str();

  auto* simulate = app.add_subcommand("simulate", "Synthesize a CSI trace with ground truth");
  simulate->add_option("-o,--output", o.output, "WSPD trace to write");
  simulate->add_option("--truth", o.truth, "Ground-truth NDJSON (default: <output>.truth.ndjson)");
  simulate->add_option("--scene", o.scene, "device-based or device-free")->capture_default_str();
  simulate->add_option("--motion", o.motion,
                       "constant, gait, fall, sit-down, stand-up, pick-up or walk")
      ->capture_default_str();
  simulate->add_option("--speed", o.speed, "Speed for constant/gait motion (m/s)")->capture_default_str();
  simulate->add_option("--duration", o.duration_s, "Trace length (s)")->capture_default_str();
  simulate->add_option("--seed", o.seed, "Root random seed")->capture_default_str();
  simulate->add_option("--static-power", o.static_power, "Static field power per axis");
  simulate->add_option("--noise-variance", o.noise_variance, "Power measurement noise variance");
  simulate->add_option("--waves", o.waves, "Plane waves per scatterer");
  simulate->add_flag("--per-subcarrier-k", o.per_subcarrier_k, "Use each subcarrier's wavenumber");

  auto add_input = [&](CLI::App* sub) {
    sub->add_option("-i,--input", o.input, "CSI trace (WSPD, or NDJSON by extension)")->required();
    sub->add_option("-o,--output", o.output, "Output file (default: stdout)");
  };
  auto* acf = app.add_subcommand("acf-dump", "Write averaged ACF blocks as NDJSON");
  add_input(acf);
  auto* estimate = app.add_subcommand("estimate", "Estimate the speed series");
  add_input(estimate);
  estimate->add_option("--distance", o.distance, "Integrate distance between t0 and t1")
      ->expected(2);
  auto* gait = app.add_subcommand("gait", "Report gait cycles and strides");
  add_input(gait);
  auto* falls = app.add_subcommand("falls", "Detect falls");
  add_input(falls);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (std::find(args.begin(), args.end(), "--dump-config") != args.end()) {
      app.require_subcommand(0, 1);
    }
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    print_error(err, "invalid-config", e.what());
    return 2;
  }

  try {
    validate_all(o);
    if (dump_config) {
      out << global_config(app.config_to_str(true, false));
      return 0;
    }
    if (*simulate) cmd_simulate(o, out);
    if (*acf) cmd_acf_dump(o, out);
    if (*estimate) cmd_estimate(o, out);
    if (*gait) cmd_gait(o, out);
    if (*falls) cmd_falls(o, out);
  } catch (const Error& e) {
    print_error(err, error_code_name(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error(err, "internal-error", e.what());
    return 1;
  }
  return 0;
}

}  // namespace csispeed::cli
