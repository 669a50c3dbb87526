#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "json.hpp"

#include "fpp/campaign.hpp"
#include "fpp/config.hpp"
#include "fpp/io.hpp"

using namespace fpp;
namespace fs = std::filesystem;

namespace {

const fs::path kTmp = FPP_TEST_TMP;

fs::path fresh_dir(const std::string& name) {
  const auto p = kTmp / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ExperimentConfig tiny_config(const fs::path& out) {
  ExperimentConfig c;
  c.n_values = {4, 8};
  c.replicas = 8;
  c.bench_n_values = {4, 8};
  c.bench_replicas = 4;
  c.resampling_n = 4.0;
  c.resampling_replicas = 10;
  c.rotation_n = 6.0;
  c.rotation_replicas = 20;
  c.rotation_repetitions = 1;
  c.ubiquity_replicas = 100;
  c.threads = 1;
  c.output_dir = out.string();
  c.experiments = {"estimate", "fluctuation", "bench-midpoint", "bench-argmin", "bench-a24a25",
                   "bench-audit", "bench-c-event", "bench-resampling", "bench-rotation"};
  return c;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + FPP_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> digests_of(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().filename() == "manifest.json") continue;
    out[fs::relative(e.path(), dir).generic_string()] = sha256_file(e.path());
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

TEST_CASE("defaults validate and round-trip") {
  const ExperimentConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.n_values == std::vector<int>{8, 16, 32, 64, 128});
  CHECK(c.replicas == 400);
  CHECK(c.theta == doctest::Approx(0.9 * BenchParams::theta_gate(2, 0.2, 0.5)));
  CHECK(parse_config(serialize_config(c)) == c);
  CHECK(parse_config("{}") == c);
  auto d = c;
  d.padding = 3.0;
  d.phi_override = 2.5;
  d.experiments = {"estimate", "bench-rotation"};
  CHECK(parse_config(serialize_config(d)) == d);
}

TEST_CASE("strict parsing rejects bad input") {
  CHECK_THROWS_AS(parse_config("not json"), ConfigError);
  CHECK_THROWS_AS(parse_config("[]"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"replica": 3})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"replicas": "many"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"replicas": -4})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"alpha": 1.0})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"n_values": [8, 8]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"c_ubiq": 0.25})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"padding": "wide"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"experiments": ["estimate", "estimate"]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"experiments": ["nope"]})"), ConfigError);
  CHECK_THROWS_AS(load_config(kTmp / "missing.json"), ConfigError);
}

TEST_CASE("a missing theta follows the gate of the configured parameters") {
  const auto c = parse_config(R"({"c_ubiq": 0.1, "delta": 1.0})");
  CHECK(c.theta == doctest::Approx(0.9 * BenchParams::theta_gate(2, 0.1, 1.0)));
}

TEST_CASE("environment overrides") {
  ExperimentConfig c;
  ::setenv("FPP_OUTPUT_DIR", "/tmp/elsewhere", 1);
  ::setenv("FPP_THREADS", "3", 1);
  apply_env_overrides(c);
  CHECK(c.output_dir == "/tmp/elsewhere");
  CHECK(c.threads == 3);
  ::setenv("FPP_THREADS", "lots", 1);
  CHECK_THROWS_AS(apply_env_overrides(c), ConfigError);
  ::unsetenv("FPP_OUTPUT_DIR");
  ::unsetenv("FPP_THREADS");
}

// ---------------------------------------------------------------------------
// Campaigns

TEST_CASE("an empty experiment list writes only the manifest") {
  const auto dir = fresh_dir("empty");
  auto c = tiny_config(dir);
  c.experiments.clear();
  const auto out = run_campaign(c);
  CHECK(out.manifest.experiments.empty());
  CHECK(fs::exists(dir / "manifest.json"));
  CHECK(std::distance(fs::directory_iterator(dir), fs::directory_iterator{}) == 1);
  CHECK_THROWS_AS(render_report(dir), ReportError);
}

TEST_CASE("a small campaign writes its outputs, replays identically and resumes") {
  const auto dir = fresh_dir("campaign");
  const auto c = tiny_config(dir);
  const auto out = run_campaign(c);
  REQUIRE(out.manifest.experiments.size() == c.experiments.size());
  for (const auto* f : {"estimate.json", "estimate_replicas.csv", "fluctuation.csv", "fluctuation.json",
                        "fluctuation_diagnostic.csv", "bench_midpoint.json", "bench_argmin.json",
                        "bench_a24a25.json", "bench_audit.json", "bench_c_event.json", "bench_resampling.json",
                        "bench_rotation.json"}) {
    CHECK_MESSAGE(fs::exists(dir / f), f);
  }
  const auto header = read_text_file(dir / "fluctuation.csv");
  CHECK(header.rfind(std::string(kFluctuationCsvHeader) + "\n", 0) == 0);

  const auto manifest = parse_manifest(read_text_file(dir / "manifest.json"));
  CHECK(manifest.config == c);
  CHECK(manifest.version == kArtifactVersion);
  CHECK(!manifest.stream_seeds.empty());

  const auto replay_dir = kTmp / "campaign-replay";
  fs::remove_all(replay_dir);
  const auto replay = replay_manifest(dir / "manifest.json", replay_dir);
  CHECK(replay.identical());
  CHECK(digests_of(dir) == digests_of(replay_dir));

  // Resume skips finished experiments and leaves their outputs untouched.
  const auto before = digests_of(dir);
  std::ostringstream log;
  run_campaign(c, RunOptions{true, &log});
  CHECK(log.str().find("skip estimate") != std::string::npos);
  CHECK(log.str().find("run ") == std::string::npos);
  CHECK(digests_of(dir) == before);

  // A damaged output is recomputed on resume.
  fs::remove(dir / "bench_argmin.json");
  std::ostringstream log2;
  run_campaign(c, RunOptions{true, &log2});
  CHECK(log2.str().find("run bench-argmin") != std::string::npos);
  CHECK(digests_of(dir) == before);

  const auto text = render_report(dir);
  CHECK(text.find("fluct_lb") != std::string::npos);
  CHECK(text.find("bench-argmin") != std::string::npos);
}

TEST_CASE("report errors") {
  CHECK_THROWS_AS(render_report(kTmp / "does-not-exist"), ReportError);
  const auto dir = fresh_dir("corrupt");
  write_text_file(dir / "fluctuation.json", "{ broken");
  CHECK_THROWS_AS(render_report(dir), ReportError);
  CHECK_THROWS_AS(parse_manifest("{}"), ConfigError);
}

TEST_CASE("criterion lines") {
  CriterionResult c{3, "poisson sanity", true, "p=0.4", 1.25, 60.0};
  const auto line = format_criterion(c);
  CHECK(line.rfind("[PASS] C3 poisson sanity: p=0.4", 0) == 0);
  c.passed = false;
  CHECK(format_criterion(c).rfind("[FAIL]", 0) == 0);
  AcceptanceReport r{{c}};
  CHECK_FALSE(r.all_passed());
}

// ---------------------------------------------------------------------------
// Command line

TEST_CASE("command-line exit codes") {
  const auto dir = fresh_dir("cli");
  auto c = tiny_config(dir / "out");
  c.experiments = {"estimate"};
  write_text_file(dir / "ok.json", serialize_config(c));
  write_text_file(dir / "bad.json", R"({"unknown_key": 1})");

  CHECK(run_cli("run \"" + (dir / "bad.json").string() + "\"") == 1);
  CHECK(run_cli("run \"" + (dir / "missing.json").string() + "\"") == 1);
  CHECK(run_cli("-q run \"" + (dir / "ok.json").string() + "\"") == 0);
  CHECK(fs::exists(dir / "out" / "estimate.json"));
  CHECK(run_cli("-q run --resume \"" + (dir / "ok.json").string() + "\"") == 0);
  CHECK(run_cli("report \"" + (dir / "out").string() + "\"") == 0);
  CHECK(run_cli("report \"" + (dir / "nothing").string() + "\"") == 1);
  CHECK(run_cli("-q replay \"" + (dir / "out" / "manifest.json").string() + "\" --output-dir \"" +
                (dir / "replayed").string() + "\"") == 0);
  CHECK(run_cli("") != 0);
  CHECK(run_cli("frobnicate") != 0);
}
