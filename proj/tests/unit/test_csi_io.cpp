#include <doctest.h>

#include <functional>
#include <numbers>
#include <sstream>

#include "csispeed/csi_io.hpp"
#include "csispeed/error.hpp"
#include "helpers.hpp"

using namespace csispeed;
using testing_helpers::random_trace;

namespace {

std::string encode(const CsiTrace& trace) {
  std::ostringstream out(std::ios::binary);
  write_trace(trace, out);
  return out.str();
}

CsiTrace decode(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  return read_trace(in);
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::invalid_argument;
}

}  // namespace

TEST_SUITE("csi_io") {
  TEST_CASE("power of single samples") {
    CsiTrace trace = random_trace(2, 2, 1);
    trace.frames = {{1.0f, 0.0f}, {3.0f, 4.0f}, {0.0f, 0.0f}, {-2.0f, 1.0f}};
    const auto p = power_response(trace);
    CHECK(p.at(0, 0) == 1.0);
    CHECK(p.at(0, 1) == 25.0);
    CHECK(p.at(1, 0) == 0.0);
    CHECK(p.at(1, 1) == 5.0);
  }

  TEST_CASE("power matches an elementwise loop") {
    const auto trace = random_trace(10, 4, 2);
    const auto p = power_response(trace);
    for (std::size_t t = 0; t < 10; ++t) {
      for (std::size_t f = 0; f < 4; ++f) {
        const auto h = trace.frames[t * 4 + f];
        const double re = h.real(), im = h.imag();
        CHECK(p.at(t, f) == doctest::Approx(re * re + im * im).epsilon(1e-15));
      }
    }
  }

  TEST_CASE("power ignores a common phase rotation") {
    auto trace = random_trace(50, 6, 3);
    const auto before = power_response(trace);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    for (std::size_t t = 0; t < 50; ++t) {
      const auto rot = std::polar(1.0, phase(rng));
      for (std::size_t f = 0; f < 6; ++f) {
        auto& h = trace.frames[t * 6 + f];
        h = std::complex<float>(std::complex<double>(h) * rot);
      }
    }
    const auto after = power_response(trace);
    for (std::size_t i = 0; i < before.values.size(); ++i) {
      CHECK(after.values[i] == doctest::Approx(before.values[i]).epsilon(1e-5));
    }
  }

  TEST_CASE("round trip is exact") {
    const auto trace = random_trace(2, 3, 5);
    const auto bytes = encode(trace);
    const auto back = decode(bytes);
    CHECK(back.timestamps_s == trace.timestamps_s);
    CHECK(back.frames == trace.frames);
    CHECK(back.config.subcarrier_frequencies_hz == trace.config.subcarrier_frequencies_hz);
    CHECK(back.config.carrier_frequency_hz == trace.config.carrier_frequency_hz);
    CHECK(encode(back) == bytes);
  }

  TEST_CASE("header layout") {
    const auto bytes = encode(random_trace(2, 3, 6));
    CHECK(bytes.substr(0, 4) == "WSPD");
    const std::size_t header = 4 + 4 + 4 + 8 + 3 * 8 + 3 * 8;
    CHECK(bytes.size() == header + 2 * (8 + 3 * 8));
  }

  TEST_CASE("malformed files") {
    const auto bytes = encode(random_trace(4, 3, 7));
    std::string bad = bytes;
    bad.replace(0, 4, "XXXX");
    CHECK(code_of([&] { decode(bad); }) == ErrorCode::bad_magic);

    std::string version = bytes;
    version[4] = 2;
    CHECK(code_of([&] { decode(version); }) == ErrorCode::version_mismatch);

    CHECK(code_of([&] { decode(bytes.substr(0, 10)); }) == ErrorCode::truncated_header);

    const std::string cut = bytes.substr(0, bytes.size() - 5);
    try {
      decode(cut);
      FAIL("expected truncated-frame");
    } catch (const IndexedError& e) {
      CHECK(e.code() == ErrorCode::truncated_frame);
      CHECK(e.index() == 3);
    }
  }

  TEST_CASE("timestamp checks") {
    std::vector<double> ts{0.0, 1.0 / 1500, 2.0 / 1500, 1.5 / 1500};
    try {
      validate_timestamps(ts, 1500.0);
      FAIL("expected non-monotone error");
    } catch (const IndexedError& e) {
      CHECK(e.code() == ErrorCode::non_monotone_timestamps);
      CHECK(e.index() == 3);
    }
    std::vector<double> jittered;
    for (int i = 0; i < 100; ++i) jittered.push_back((i + (i % 2 ? 0.3 : 0.0)) / 1500.0);
    CHECK(code_of([&] { validate_timestamps(jittered, 1500.0); }) == ErrorCode::timestamp_jitter);
  }

  TEST_CASE("non-finite CSI is rejected") {
    auto trace = random_trace(3, 2, 8);
    trace.frames[3] = {std::numeric_limits<float>::quiet_NaN(), 0.0f};
    CHECK(code_of([&] { trace.validate(); }) == ErrorCode::non_finite_value);
  }

  TEST_CASE("ndjson import") {
    std::string text =
        "{\"fc\":5.805e9,\"bw\":40e6,\"fs\":1000,\"subcarriers\":[5.8e9,5.81e9]}\n"
        "{\"t\":0.0,\"csi\":[[1,0],[3,4]]}\n"
        "\n"
        "{\"t\":0.001,\"csi\":[[0,2],[1,1]]}\n";
    std::istringstream in(text);
    const auto p = power_response(read_ndjson_trace(in));
    REQUIRE(p.frame_count() == 2);
    CHECK(p.at(0, 1) == 25.0);
    CHECK(p.at(1, 0) == 4.0);

    std::istringstream wrong("{\"fc\":5.805e9,\"bw\":40e6,\"fs\":1000,\"subcarriers\":[5.8e9]}\n"
                             "{\"t\":0.0,\"csi\":[[1,0],[3,4]]}\n");
    CHECK(code_of([&] { read_ndjson_trace(wrong); }) == ErrorCode::parse_error);
  }

  TEST_CASE("uniform subcarriers sit inside the band") {
    const auto r = RadioConfig::uniform(5.805e9, 40e6, 1500.0, 30);
    REQUIRE(r.subcarrier_count() == 30);
    double mean = 0.0;
    for (double f : r.subcarrier_frequencies_hz) {
      CHECK(f > 5.805e9 - 20e6);
      CHECK(f < 5.805e9 + 20e6);
      mean += f / 30.0;
    }
    CHECK(mean == doctest::Approx(5.805e9));
    CHECK(r.wavelength_m() == doctest::Approx(0.05164).epsilon(1e-3));
  }

  TEST_CASE("missing file") {
    CHECK(code_of([] { load_trace("/nonexistent/trace.wspd"); }) == ErrorCode::input_not_found);
  }
}
