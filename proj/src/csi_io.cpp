#include "csispeed/csi_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "csispeed/error.hpp"

namespace csispeed {

namespace {

constexpr std::array<char, 4> kMagic = {'W', 'S', 'P', 'D'};

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_arithmetic_v<T>);
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  static_assert(sizeof(T) == sizeof(U));
  auto bits = std::bit_cast<U>(value);
  std::array<char, sizeof(U)> bytes{};
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffU);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename T>
bool get_le(std::istream& in, T& value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  std::array<unsigned char, sizeof(U)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) return false;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bits |= static_cast<U>(bytes[i]) << (8 * i);
  }
  value = std::bit_cast<T>(bits);
  return true;
}

std::string frame_message(const char* what, std::size_t index) {
  std::ostringstream os;
  os << what << " at frame " << index;
  return os.str();
}

}  // namespace

double RadioConfig::carrier_wavenumber() const {
  return wavenumber(carrier_frequency_hz);
}

double RadioConfig::wavenumber(double frequency_hz) const {
  return 2.0 * std::numbers::pi * frequency_hz / kSpeedOfLight;
}

void RadioConfig::validate() const {
  std::vector<std::string> problems;
  if (!(carrier_frequency_hz > 0.0) || !std::isfinite(carrier_frequency_hz))
    problems.emplace_back("carrier_frequency_hz must be > 0");
  if (!(bandwidth_hz >= 0.0) || !std::isfinite(bandwidth_hz))
    problems.emplace_back("bandwidth_hz must be >= 0");
  if (!(sampling_rate_hz > 0.0) || !std::isfinite(sampling_rate_hz))
    problems.emplace_back("sampling_rate_hz must be > 0");
  if (subcarrier_frequencies_hz.empty()) problems.emplace_back("at least one subcarrier required");
  const double lo = carrier_frequency_hz - bandwidth_hz / 2.0;
  const double hi = carrier_frequency_hz + bandwidth_hz / 2.0;
  for (std::size_t i = 0; i < subcarrier_frequencies_hz.size(); ++i) {
    const double f = subcarrier_frequencies_hz[i];
    if (!(f >= lo && f <= hi)) {
      problems.push_back("subcarrier " + std::to_string(i) + " outside the occupied band");
      break;
    }
    if (i > 0 && !(f > subcarrier_frequencies_hz[i - 1])) {
      problems.push_back("subcarrier frequencies must be strictly increasing (index " +
                         std::to_string(i) + ")");
      break;
    }
  }
  if (!problems.empty()) {
    std::string msg = "invalid radio config:";
    for (const auto& p : problems) msg += " " + p + ";";
    throw Error(ErrorCode::invalid_config, msg);
  }
}

RadioConfig RadioConfig::uniform(double carrier_hz, double bandwidth_hz, double sampling_rate_hz,
                                 std::size_t count) {
  RadioConfig cfg;
  cfg.carrier_frequency_hz = carrier_hz;
  cfg.bandwidth_hz = bandwidth_hz;
  cfg.sampling_rate_hz = sampling_rate_hz;
  cfg.subcarrier_frequencies_hz.resize(count);
  const double spacing = count > 0 ? bandwidth_hz / static_cast<double>(count) : 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    cfg.subcarrier_frequencies_hz[i] =
        carrier_hz - bandwidth_hz / 2.0 + (static_cast<double>(i) + 0.5) * spacing;
  }
  return cfg;
}

std::span<const std::complex<float>> CsiTrace::frame(std::size_t t) const {
  const std::size_t f = subcarrier_count();
  return {frames.data() + t * f, f};
}

void validate_timestamps(std::span<const double> timestamps_s, double sampling_rate_hz) {
  const double nominal = 1.0 / sampling_rate_hz;
  std::size_t jittered = 0;
  for (std::size_t i = 0; i < timestamps_s.size(); ++i) {
    if (!std::isfinite(timestamps_s[i])) {
      throw IndexedError(ErrorCode::non_finite_value, frame_message("non-finite timestamp", i), i);
    }
    if (i == 0) continue;
    const double gap = timestamps_s[i] - timestamps_s[i - 1];
    if (!(gap > 0.0)) {
      throw IndexedError(ErrorCode::non_monotone_timestamps,
                         frame_message("timestamps not strictly increasing", i), i);
    }
    if (std::abs(gap - nominal) > kJitterTolerance * nominal) ++jittered;
  }
  if (timestamps_s.size() > 1) {
    const double fraction =
        static_cast<double>(jittered) / static_cast<double>(timestamps_s.size() - 1);
    if (fraction > kMaxJitteredFraction) {
      std::ostringstream os;
      os << "timestamp jitter: " << jittered << " of " << timestamps_s.size() - 1
         << " frame gaps deviate more than 10% from 1/F_s";
      throw Error(ErrorCode::timestamp_jitter, os.str());
    }
  }
}

void CsiTrace::validate() const {
  config.validate();
  const std::size_t f = subcarrier_count();
  if (frames.size() != timestamps_s.size() * f) {
    throw Error(ErrorCode::invalid_argument, "frame matrix does not match T x F");
  }
  validate_timestamps(timestamps_s, config.sampling_rate_hz);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (!std::isfinite(frames[i].real()) || !std::isfinite(frames[i].imag())) {
      throw IndexedError(ErrorCode::non_finite_value, frame_message("non-finite CSI", i / f),
                         i / f);
    }
  }
}

std::span<const double> PowerResponse::frame(std::size_t t) const {
  const std::size_t f = subcarrier_count();
  return {values.data() + t * f, f};
}

PowerResponse PowerResponse::scaled(double factor) const {
  PowerResponse out = *this;
  for (auto& v : out.values) v *= factor;
  return out;
}

PowerResponse power_response(const CsiTrace& trace) {
  const std::size_t f = trace.subcarrier_count();
  if (trace.frames.size() != trace.frame_count() * f) {
    throw Error(ErrorCode::invalid_argument, "frame matrix does not match T x F");
  }
  PowerResponse out;
  out.config = trace.config;
  out.timestamps_s = trace.timestamps_s;
  out.values.resize(trace.frames.size());
  for (std::size_t i = 0; i < trace.frames.size(); ++i) {
    const double re = trace.frames[i].real();
    const double im = trace.frames[i].imag();
    if (!std::isfinite(re) || !std::isfinite(im)) {
      throw IndexedError(ErrorCode::non_finite_value, frame_message("non-finite CSI", i / f),
                         i / f);
    }
    out.values[i] = re * re + im * im;
  }
  return out;
}

void write_trace(const CsiTrace& trace, std::ostream& out) {
  trace.validate();
  const auto& cfg = trace.config;
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kWspdVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.subcarrier_count()));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(trace.frame_count()));
  put_le(out, cfg.carrier_frequency_hz);
  put_le(out, cfg.bandwidth_hz);
  put_le(out, cfg.sampling_rate_hz);
  for (double f : cfg.subcarrier_frequencies_hz) put_le(out, f);
  const std::size_t nf = cfg.subcarrier_count();
  for (std::size_t t = 0; t < trace.frame_count(); ++t) {
    put_le(out, trace.timestamps_s[t]);
    for (std::size_t k = 0; k < nf; ++k) {
      const auto h = trace.frames[t * nf + k];
      put_le(out, h.real());
      put_le(out, h.imag());
    }
  }
  if (!out) throw Error(ErrorCode::io_error, "failed writing WSPD stream");
}

void write_trace(const CsiTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot open " + path.string() + " for writing");
  write_trace(trace, out);
}

CsiTrace read_trace(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != 4) throw Error(ErrorCode::truncated_header, "WSPD header truncated");
  if (magic != kMagic) throw Error(ErrorCode::bad_magic, "bad magic: not a WSPD file");

  std::uint32_t version = 0;
  std::uint32_t nf = 0;
  std::uint64_t nt = 0;
  if (!get_le(in, version)) throw Error(ErrorCode::truncated_header, "WSPD header truncated");
  if (version != kWspdVersion) {
    throw Error(ErrorCode::version_mismatch,
                "unsupported WSPD version " + std::to_string(version));
  }
  CsiTrace trace;
  auto& cfg = trace.config;
  if (!get_le(in, nf) || !get_le(in, nt) || !get_le(in, cfg.carrier_frequency_hz) ||
      !get_le(in, cfg.bandwidth_hz) || !get_le(in, cfg.sampling_rate_hz)) {
    throw Error(ErrorCode::truncated_header, "WSPD header truncated");
  }
  cfg.subcarrier_frequencies_hz.resize(nf);
  for (auto& f : cfg.subcarrier_frequencies_hz) {
    if (!get_le(in, f)) throw Error(ErrorCode::truncated_header, "WSPD header truncated");
  }
  cfg.validate();

  // Do not trust T for allocation before the data has actually been seen.
  constexpr std::uint64_t kReserveCap = 1u << 20;
  trace.timestamps_s.reserve(static_cast<std::size_t>(std::min(nt, kReserveCap)));
  trace.frames.reserve(static_cast<std::size_t>(std::min(nt, kReserveCap)) * nf);
  for (std::uint64_t t = 0; t < nt; ++t) {
    double ts = 0.0;
    bool ok = get_le(in, ts);
    for (std::uint32_t k = 0; ok && k < nf; ++k) {
      float re = 0.0F;
      float im = 0.0F;
      ok = get_le(in, re) && get_le(in, im);
      if (ok) trace.frames.emplace_back(re, im);
    }
    if (!ok) {
      throw IndexedError(ErrorCode::truncated_frame, frame_message("truncated record", t),
                         static_cast<std::size_t>(t));
    }
    trace.timestamps_s.push_back(ts);
  }
  trace.validate();
  return trace;
}

CsiTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::input_not_found, "cannot open " + path.string());
  return read_trace(in);
}

CsiTrace read_ndjson_trace(std::istream& in) {
  using nlohmann::json;
  std::string line;
  std::size_t line_no = 0;
  auto next_object = [&](json& obj) {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        obj = json::parse(line);
      } catch (const json::parse_error& e) {
        throw Error(ErrorCode::parse_error,
                    "NDJSON line " + std::to_string(line_no) + ": " + e.what());
      }
      return true;
    }
    return false;
  };

  json header;
  if (!next_object(header)) throw Error(ErrorCode::parse_error, "NDJSON trace is empty");
  CsiTrace trace;
  try {
    trace.config.carrier_frequency_hz = header.at("fc").get<double>();
    trace.config.bandwidth_hz = header.at("bw").get<double>();
    trace.config.sampling_rate_hz = header.at("fs").get<double>();
    trace.config.subcarrier_frequencies_hz = header.at("subcarriers").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("NDJSON header: ") + e.what());
  }
  trace.config.validate();
  const std::size_t nf = trace.config.subcarrier_count();

  json rec;
  while (next_object(rec)) {
    try {
      const auto& csi = rec.at("csi");
      if (csi.size() != nf) {
        throw Error(ErrorCode::parse_error, "NDJSON line " + std::to_string(line_no) +
                                                ": expected " + std::to_string(nf) +
                                                " subcarriers");
      }
      trace.timestamps_s.push_back(rec.at("t").get<double>());
      for (const auto& pair : csi) {
        trace.frames.emplace_back(pair.at(0).get<float>(), pair.at(1).get<float>());
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::parse_error,
                  "NDJSON line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  trace.validate();
  return trace;
}

CsiTrace read_ndjson_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::input_not_found, "cannot open " + path.string());
  return read_ndjson_trace(in);
}

CsiTrace load_trace(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".ndjson" || ext == ".jsonl" || ext == ".json") return read_ndjson_trace(path);
  return read_trace(path);
}

}  // namespace csispeed
