#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <unistd.h>

#include "cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = csispeed::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<json> lines(const std::string& text) {
  std::vector<json> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("csispeed_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("simulate is deterministic") {
    TempDir dir;
    const auto a = (dir.path / "a.wspd").string();
    const auto b = (dir.path / "b.wspd").string();
    const std::vector<std::string> common{"--subcarriers", "4", "simulate", "--seed", "7",
                                          "--duration", "1"};
    auto args = common;
    args.insert(args.end(), {"-o", a});
    REQUIRE(run(args).code == 0);
    args = common;
    args.insert(args.end(), {"-o", b});
    REQUIRE(run(args).code == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK(slurp(a + ".truth.ndjson") == slurp(b + ".truth.ndjson"));
    CHECK(!slurp(a).empty());
  }

  TEST_CASE("estimate agrees with the ground truth sidecar") {
    TempDir dir;
    const auto trace = (dir.path / "walk.wspd").string();
    REQUIRE(run({"simulate", "--seed", "3", "--speed", "1.3", "--duration", "4", "-o", trace}).code ==
            0);
    const auto r = run({"estimate", "-i", trace, "--distance", "1", "3"});
    REQUIRE(r.code == 0);
    const auto rows = lines(r.out);
    REQUIRE(rows.size() > 2);
    double sum = 0.0;
    int n = 0;
    for (const auto& row : rows) {
      if (!row.contains("v_smooth") || row["v_smooth"].is_null()) continue;
      sum += row["v_smooth"].get<double>();
      ++n;
    }
    REQUIRE(n > 0);
    double truth = 0.0;
    const auto sidecar = lines(slurp(trace + ".truth.ndjson"));
    for (const auto& row : sidecar) truth += row["v_true"].get<double>();
    truth /= static_cast<double>(sidecar.size());
    CHECK(sum / n == doctest::Approx(truth).epsilon(0.05));
    const auto& dist = rows.back();
    REQUIRE(dist.contains("distance_m"));
    CHECK(dist["distance_m"].get<double>() == doctest::Approx(2.6).epsilon(0.1));
  }

  TEST_CASE("other commands emit JSON") {
    TempDir dir;
    const auto trace = (dir.path / "t.wspd").string();
    REQUIRE(run({"--subcarriers", "8", "simulate", "--duration", "2", "-o", trace}).code == 0);
    const auto acf = run({"acf-dump", "-i", trace});
    REQUIRE(acf.code == 0);
    const auto blocks = lines(acf.out);
    REQUIRE(!blocks.empty());
    CHECK(blocks.front()["acf"][0].get<double>() == 1.0);
    CHECK(blocks.front()["dacf"].size() + 1 == blocks.front()["acf"].size());
    const auto gait = run({"gait", "-i", trace});
    REQUIRE(gait.code == 0);
    CHECK(lines(gait.out).front().contains("step_count"));
    const auto out_file = (dir.path / "falls.ndjson").string();
    REQUIRE(run({"falls", "-i", trace, "-o", out_file}).code == 0);
    CHECK(fs::exists(out_file));
  }

  TEST_CASE("missing input") {
    const auto r = run({"estimate", "-i", "/nonexistent/trace.wspd"});
    CHECK(r.code != 0);
    const auto err = json::parse(r.err);
    CHECK(err["error"]["code"] == "input-not-found");
  }

  TEST_CASE("config problems are all reported") {
    const auto r = run({"--hop", "-1", "--median-window", "4", "--avg-samples", "1", "estimate",
                        "-i", "x.wspd"});
    CHECK(r.code != 0);
    const auto err = json::parse(r.err);
    CHECK(err["error"]["code"] == "invalid-config");
    const auto msg = err["error"]["message"].get<std::string>();
    CHECK(msg.find("hop") != std::string::npos);
    CHECK(msg.find("median") != std::string::npos);
    CHECK(msg.find("avg_samples") != std::string::npos);
  }

  TEST_CASE("config file round trip") {
    TempDir dir;
    const auto first = run({"--hop", "0.1", "--max-lag", "0.15", "--dump-config"});
    REQUIRE(first.code == 0);
    const auto path = (dir.path / "cfg.ini").string();
    std::ofstream(path) << first.out;
    const auto second = run({"--config", path, "--dump-config"});
    REQUIRE(second.code == 0);
    CHECK(second.out == first.out);
    const auto overridden = run({"--config", path, "--hop", "0.2", "--dump-config"});
    CHECK(overridden.out.find("hop=0.2") != std::string::npos);

    ::setenv(csispeed::cli::kConfigEnv, path.c_str(), 1);
    const auto env = run({"--dump-config"});
    ::unsetenv(csispeed::cli::kConfigEnv);
    CHECK(env.out == first.out);
  }

  TEST_CASE("usage errors") {
    CHECK(run({}).code != 0);
    CHECK(run({"--help"}).code == 0);
    const auto r = run({"simulate", "--scene", "nowhere", "-o", "/tmp/x.wspd"});
    CHECK(r.code != 0);
    CHECK(json::parse(r.err)["error"]["code"] == "invalid-config");
  }
}
