#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>
#include <limits>

#include "csispeed/acf_engine.hpp"
#include "csispeed/csi_io.hpp"
#include "csispeed/em_simulator.hpp"
#include "csispeed/error.hpp"
#include "csispeed/event_detector.hpp"
#include "csispeed/kinematics.hpp"
#include "csispeed/peak_finder.hpp"
#include "csispeed/scenarios.hpp"
#include "csispeed/speed_pipeline.hpp"

namespace py = pybind11;
using namespace csispeed;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_array(const std::vector<double>& v) { return Array(static_cast<py::ssize_t>(v.size()), v.data()); }

Array to_array(const std::vector<std::optional<double>>& v) {
  Array out(static_cast<py::ssize_t>(v.size()));
  auto m = out.mutable_unchecked<1>();
  for (std::size_t i = 0; i < v.size(); ++i) {
    m(static_cast<py::ssize_t>(i)) = v[i].value_or(std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

Array to_matrix(const std::vector<double>& v, std::size_t rows, std::size_t cols) {
  Array out({static_cast<py::ssize_t>(rows), static_cast<py::ssize_t>(cols)});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

std::vector<double> to_vector(const Array& a) {
  if (a.ndim() != 1) throw Error(ErrorCode::invalid_argument, "expected a 1-d array");
  return {a.data(), a.data() + a.size()};
}

std::vector<std::optional<double>> to_optional(const Array& a) {
  std::vector<std::optional<double>> out;
  for (double x : to_vector(a)) {
    if (std::isnan(x)) {
      out.emplace_back();
    } else {
      out.emplace_back(x);
    }
  }
  return out;
}

PowerResponse make_power(const Array& values, const Array& timestamps, const RadioConfig& radio) {
  if (values.ndim() != 2) throw Error(ErrorCode::invalid_argument, "values must be frames x subcarriers");
  PowerResponse p;
  p.config = radio;
  p.timestamps_s = to_vector(timestamps);
  p.values.assign(values.data(), values.data() + values.size());
  if (static_cast<std::size_t>(values.shape(0)) != p.timestamps_s.size() ||
      static_cast<std::size_t>(values.shape(1)) != radio.subcarrier_count()) {
    throw Error(ErrorCode::invalid_argument, "values shape does not match timestamps and radio");
  }
  validate_timestamps(p.timestamps_s, radio.sampling_rate_hz);
  return p;
}

SceneKind parse_scene(const std::string& name) {
  if (name == "device-based") return SceneKind::device_based;
  if (name == "device-free") return SceneKind::device_free;
  throw Error(ErrorCode::invalid_config, "unknown scene: " + name);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Speed estimation from Wi-Fi channel state information";

  static py::handle error_type =
      py::exception<Error>(m, "CsiSpeedError", PyExc_RuntimeError).release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type)(e.what());
      exc.attr("code") = std::string(error_code_name(e.code()));
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  py::class_<RadioConfig>(m, "RadioConfig")
      .def(py::init([](double carrier_hz, double bandwidth_hz, double sampling_rate_hz,
                       std::size_t subcarriers) {
             return RadioConfig::uniform(carrier_hz, bandwidth_hz, sampling_rate_hz, subcarriers);
           }),
           py::arg("carrier_frequency_hz") = 5.805e9, py::arg("bandwidth_hz") = 40e6,
           py::arg("sampling_rate_hz") = 1500.0, py::arg("subcarriers") = 30)
      .def_readwrite("carrier_frequency_hz", &RadioConfig::carrier_frequency_hz)
      .def_readwrite("bandwidth_hz", &RadioConfig::bandwidth_hz)
      .def_readwrite("sampling_rate_hz", &RadioConfig::sampling_rate_hz)
      .def_readwrite("subcarrier_frequencies_hz", &RadioConfig::subcarrier_frequencies_hz)
      .def_property_readonly("wavelength_m", &RadioConfig::wavelength_m)
      .def_property_readonly("subcarrier_count", &RadioConfig::subcarrier_count)
      .def("validate", &RadioConfig::validate);

  py::class_<PowerResponse>(m, "PowerResponse")
      .def(py::init(&make_power), py::arg("values"), py::arg("timestamps_s"), py::arg("radio"))
      .def_readonly("config", &PowerResponse::config)
      .def_property_readonly("timestamps_s", [](const PowerResponse& p) { return to_array(p.timestamps_s); })
      .def_property_readonly("values",
                             [](const PowerResponse& p) {
                               return to_matrix(p.values, p.frame_count(), p.subcarrier_count());
                             })
      .def_property_readonly("frame_count", &PowerResponse::frame_count)
      .def_property_readonly("subcarrier_count", &PowerResponse::subcarrier_count)
      .def("scaled", &PowerResponse::scaled);

  m.def("load_power", [](const std::filesystem::path& path) { return power_response(load_trace(path)); },
        py::arg("path"), "Reads a WSPD or NDJSON trace and returns its power response.");
  m.def(
      "simulate_trace",
      [](const std::filesystem::path& path, const std::string& scene, double speed, double duration,
         std::uint64_t seed, const RadioConfig& radio) {
        write_trace(synthesize(make_scene(parse_scene(scene), SpeedProfile::constant(speed), seed),
                               radio, duration),
                    path);
      },
      py::arg("path"), py::arg("scene") = "device-based", py::arg("speed_mps") = 1.3,
      py::arg("duration_s") = 5.0, py::arg("seed") = 0, py::arg("radio") = RadioConfig::uniform(5.805e9, 40e6, 1500.0, 30));
  m.def(
      "simulate",
      [](const std::string& scene, double speed, double duration, std::uint64_t seed,
         const RadioConfig& radio) {
        return synthesize_power(make_scene(parse_scene(scene), SpeedProfile::constant(speed), seed),
                                radio, duration);
      },
      py::arg("scene") = "device-based", py::arg("speed_mps") = 1.3, py::arg("duration_s") = 5.0,
      py::arg("seed") = 0, py::arg("radio") = RadioConfig::uniform(5.805e9, 40e6, 1500.0, 30));
  m.def(
      "simulate_profile",
      [](const std::string& scene, const Array& times, const Array& speeds, double duration,
         std::uint64_t seed, const RadioConfig& radio) {
        const SpeedProfile profile(to_vector(times), to_vector(speeds));
        return synthesize_power(make_scene(parse_scene(scene), profile, seed), radio, duration);
      },
      py::arg("scene"), py::arg("times_s"), py::arg("speeds_mps"), py::arg("duration_s"),
      py::arg("seed") = 0, py::arg("radio") = RadioConfig::uniform(5.805e9, 40e6, 1500.0, 30));

  m.def("acf_field", py::vectorize(&acf_field));
  m.def("acf_axis_transverse", py::vectorize(&acf_axis_transverse));
  m.def("acf_axis_longitudinal", py::vectorize(&acf_axis_longitudinal));
  m.def("first_peak_distance", &first_peak_distance_transverse);

  py::class_<AcfConfig>(m, "AcfConfig")
      .def(py::init([](double max_lag_s, double hop_s, int avg_samples) {
             return AcfConfig{.max_lag_s = max_lag_s, .hop_s = hop_s, .avg_samples = avg_samples};
           }),
           py::arg("max_lag_s") = 0.2, py::arg("hop_s") = 0.05, py::arg("avg_samples") = 100)
      .def_readwrite("max_lag_s", &AcfConfig::max_lag_s)
      .def_readwrite("hop_s", &AcfConfig::hop_s)
      .def_readwrite("avg_samples", &AcfConfig::avg_samples);

  py::class_<AcfBlock>(m, "AcfBlock")
      .def_readonly("t_center_s", &AcfBlock::t_center_s)
      .def_property_readonly("lags_s", [](const AcfBlock& b) { return to_array(b.lags_s); })
      .def_property_readonly("per_subcarrier",
                             [](const AcfBlock& b) {
                               return to_matrix(b.per_subcarrier, b.subcarrier_count, b.lag_count());
                             })
      .def_property_readonly("averaged", [](const AcfBlock& b) { return to_array(b.averaged); })
      .def_property_readonly("differential", [](const AcfBlock& b) { return to_array(b.differential); })
      .def_property_readonly("differential_lags_s",
                             [](const AcfBlock& b) { return to_array(b.differential_lags_s); })
      .def_property_readonly("used_subcarriers", &AcfBlock::used_subcarriers);

  m.def("acf_block", &acf_block, py::arg("power"), py::arg("t_center_s"),
        py::arg("config") = AcfConfig{});
  m.def(
      "sample_autocov",
      [](const Array& g, std::size_t max_lag, std::size_t m) {
        return to_array(sample_autocov(to_vector(g), max_lag, m));
      },
      py::arg("g"), py::arg("max_lag"), py::arg("m"));

  py::class_<PeakFinderConfig>(m, "PeakFinderConfig")
      .def(py::init<>())
      .def_static("with_false_peak_rate", &PeakFinderConfig::with_false_peak_rate)
      .def_readwrite("half_window", &PeakFinderConfig::half_window)
      .def_readwrite("threshold", &PeakFinderConfig::threshold)
      .def_readwrite("min_separation", &PeakFinderConfig::min_separation)
      .def_readwrite("guard_lags", &PeakFinderConfig::guard_lags)
      .def_readwrite("refine_fraction", &PeakFinderConfig::refine_fraction);

  py::class_<Peak>(m, "Peak")
      .def_readonly("location", &Peak::location)
      .def_readonly("height", &Peak::height)
      .def_readonly("score", &Peak::score);

  m.def(
      "find_peaks",
      [](const Array& y, const Array& x, const PeakFinderConfig& cfg) {
        return find_peaks(to_vector(y), to_vector(x), cfg);
      },
      py::arg("y"), py::arg("abscissa"), py::arg("config") = PeakFinderConfig{});
  m.def(
      "first_peak",
      [](const Array& y, const Array& x, const PeakFinderConfig& cfg) {
        return first_peak(to_vector(y), to_vector(x), cfg);
      },
      py::arg("differential"), py::arg("abscissa"), py::arg("config") = PeakFinderConfig{});
  m.def("f_quantile", &f_quantile, py::arg("half_window"), py::arg("p"));

  py::class_<SpeedConfig>(m, "SpeedConfig")
      .def(py::init<>())
      .def_readwrite("acf", &SpeedConfig::acf)
      .def_readwrite("peak", &SpeedConfig::peak)
      .def_readwrite("min_speed_mps", &SpeedConfig::min_speed_mps)
      .def_readwrite("max_speed_mps", &SpeedConfig::max_speed_mps)
      .def_readwrite("median_window", &SpeedConfig::median_window)
      .def_readwrite("motion_gate_factor", &SpeedConfig::motion_gate_factor);

  py::class_<SpeedSeries>(m, "SpeedSeries")
      .def(py::init([](const Array& t, const Array& v) {
             return SpeedSeries::from_speeds(to_vector(t), to_vector(v));
           }),
           py::arg("timestamps_s"), py::arg("speeds_mps"))
      .def_property_readonly("timestamps_s", [](const SpeedSeries& s) { return to_array(s.timestamps_s); })
      .def_property_readonly("raw_mps", [](const SpeedSeries& s) { return to_array(s.raw_mps); })
      .def_property_readonly("smoothed_mps", [](const SpeedSeries& s) { return to_array(s.smoothed_mps); })
      .def_readonly("hop_s", &SpeedSeries::hop_s)
      .def_property_readonly("present_count", &SpeedSeries::present_count)
      .def("__len__", &SpeedSeries::size);

  m.def("speed_from_lag", &speed_from_lag, py::arg("tau_s"), py::arg("wavelength_m"));
  m.def("estimate_speed", py::overload_cast<const PowerResponse&, const SpeedConfig&>(&estimate_speed),
        py::arg("power"), py::arg("config") = SpeedConfig{});
  m.def(
      "median_filter",
      [](const Array& v, int window) { return to_array(median_filter(to_optional(v), window)); },
      py::arg("values"), py::arg("window") = 5);
  m.def("fill_gaps", [](const SpeedSeries& s) { return to_array(fill_gaps(s)); });
  m.def("integrate_distance", &integrate_distance, py::arg("series"), py::arg("t0"), py::arg("t1"));

  py::class_<TrendFilterConfig>(m, "TrendFilterConfig")
      .def(py::init<>())
      .def_readwrite("lambda_reg", &TrendFilterConfig::lambda_reg)
      .def_readwrite("lambda_fraction", &TrendFilterConfig::lambda_fraction)
      .def_readwrite("max_iterations", &TrendFilterConfig::max_iterations)
      .def_readwrite("tolerance", &TrendFilterConfig::tolerance);

  m.def(
      "l1_trend",
      [](const Array& y, double lambda, const TrendFilterConfig& cfg) {
        const auto r = l1_trend_solve(to_vector(y), lambda, cfg);
        return py::make_tuple(to_array(r.trend), r.duality_gap, r.iterations);
      },
      py::arg("y"), py::arg("lam"), py::arg("config") = TrendFilterConfig{},
      "Returns (trend, duality_gap, iterations).");
  m.def(
      "trend_objective",
      [](const Array& y, const Array& x, double lambda) {
        return trend_objective(to_vector(y), to_vector(x), lambda);
      },
      py::arg("y"), py::arg("x"), py::arg("lam"));
  m.def("trend_lambda_max", [](const Array& y) { return trend_lambda_max(to_vector(y)); });

  py::class_<AccelSeries>(m, "AccelSeries")
      .def_property_readonly("timestamps_s", [](const AccelSeries& a) { return to_array(a.timestamps_s); })
      .def_property_readonly("accel_mps2", [](const AccelSeries& a) { return to_array(a.accel_mps2); })
      .def_property_readonly("trend_mps", [](const AccelSeries& a) { return to_array(a.trend_mps); });
  m.def("acceleration", &acceleration, py::arg("series"), py::arg("config") = TrendFilterConfig{});

  py::class_<GaitConfig>(m, "GaitConfig")
      .def(py::init<>())
      .def_readwrite("min_persistence", &GaitConfig::min_persistence)
      .def_readwrite("min_mean_speed", &GaitConfig::min_mean_speed)
      .def_readwrite("max_mean_speed", &GaitConfig::max_mean_speed)
      .def_readwrite("max_abs_accel", &GaitConfig::max_abs_accel);

  py::class_<GaitReport>(m, "GaitReport")
      .def_readonly("peak_times_s", &GaitReport::peak_times_s)
      .def_readonly("cycle_times_s", &GaitReport::cycle_times_s)
      .def_readonly("stride_lengths_m", &GaitReport::stride_lengths_m)
      .def_readonly("step_count", &GaitReport::step_count)
      .def_readonly("mean_stride_m", &GaitReport::mean_stride_m)
      .def_readonly("gate_passed", &GaitReport::gate_passed)
      .def_readonly("gate_reason", &GaitReport::gate_reason);
  m.def("gait_cycles", &gait_cycles, py::arg("series"), py::arg("accel"),
        py::arg("config") = GaitConfig{});

  py::class_<FallConfig>(m, "FallConfig")
      .def(py::init<>())
      .def_readwrite("window_s", &FallConfig::window_s)
      .def_readwrite("delta_a_threshold", &FallConfig::delta_a_threshold)
      .def_readwrite("vmax_threshold", &FallConfig::vmax_threshold)
      .def_readwrite("merge_s", &FallConfig::merge_s);

  py::class_<FallEvent>(m, "FallEvent")
      .def_readonly("t_s", &FallEvent::t_s)
      .def_readonly("delta_a", &FallEvent::delta_a)
      .def_readonly("v_max", &FallEvent::v_max);
  m.def("detect_falls", py::overload_cast<const SpeedSeries&, const FallConfig&>(&detect_falls),
        py::arg("series"), py::arg("config") = FallConfig{});
}
