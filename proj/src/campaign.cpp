#include "fpp/campaign.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "fpp/errors.hpp"
#include "fpp/io.hpp"
#include "fpp/seeding.hpp"
#include "runner.hpp"

namespace fpp {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string>& stream_tags() {
  static const std::vector<std::string> tags{
      "estimate",   "midpoint-gain",    "argmin",           "a24-a25",          "geodesic-audit",
      "c-event",    "resampling",       "resampling/inner", "rotation/control", "acceptance/oracle",
      "acceptance/subadditivity", "acceptance/poisson"};
  return tags;
}

std::vector<OutputDigest> digest_files(const fs::path& dir, const std::vector<std::string>& files) {
  std::vector<OutputDigest> out;
  for (const auto& f : files) out.push_back({f, sha256_file(dir / f)});
  return out;
}

std::vector<std::string> files_under(const fs::path& root, const fs::path& base) {
  std::vector<std::string> out;
  if (!fs::exists(root)) return out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), base).generic_string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool record_still_valid(const fs::path& dir, const ExperimentRecord& r) {
  if (r.outputs.empty()) return false;
  for (const auto& o : r.outputs) {
    if (!fs::exists(dir / o.file) || sha256_file(dir / o.file) != o.sha256) return false;
  }
  return true;
}

std::string fixed(double x, int prec = 6) {
  if (!std::isfinite(x)) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, x);
  return buf;
}

}  // namespace

std::string manifest_to_json(const RunManifest& m) {
  ordered_json j;
  j["version"] = m.version;
  j["csv_schema_version"] = m.csv_schema_version;
  j["config"] = ordered_json::parse(serialize_config(m.config));
  auto& seeds = j["stream_seeds"] = ordered_json::object();
  for (const auto& [tag, seed] : m.stream_seeds) seeds[tag] = seed;
  auto& ex = j["experiments"] = ordered_json::array();
  for (const auto& r : m.experiments) {
    ordered_json outputs = ordered_json::object();
    for (const auto& o : r.outputs) outputs[o.file] = o.sha256;
    ex.push_back({{"name", r.name}, {"passed", r.passed}, {"seconds", r.seconds}, {"outputs", outputs}});
  }
  return j.dump(2) + "\n";
}

RunManifest parse_manifest(const std::string& text) {
  try {
    const auto j = json::parse(text);
    RunManifest m;
    m.version = j.at("version").get<std::string>();
    m.csv_schema_version = j.at("csv_schema_version").get<int>();
    m.config = parse_config(j.at("config").dump());
    for (const auto& [tag, seed] : j.at("stream_seeds").items()) m.stream_seeds.emplace_back(tag, seed.get<std::uint64_t>());
    for (const auto& e : j.at("experiments")) {
      ExperimentRecord r;
      r.name = e.at("name").get<std::string>();
      r.passed = e.at("passed").get<bool>();
      r.seconds = e.at("seconds").get<double>();
      for (const auto& [file, sha] : e.at("outputs").items()) r.outputs.push_back({file, sha.get<std::string>()});
      m.experiments.push_back(std::move(r));
    }
    return m;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("corrupt manifest: ") + e.what());
  }
}

RunOutcome run_campaign(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  const fs::path dir = config.output_dir;
  fs::create_directories(dir);
  const fs::path manifest_path = dir / "manifest.json";

  std::optional<RunManifest> previous;
  if (options.resume && fs::exists(manifest_path)) {
    try {
      previous = parse_manifest(read_text_file(manifest_path));
      if (!(previous->config == config)) {
        if (options.log) *options.log << "resume: config changed, rerunning everything\n";
        previous.reset();
      }
    } catch (const ConfigError&) {
      previous.reset();
    }
  }

  RunOutcome outcome;
  auto& m = outcome.manifest;
  m.config = config;
  for (const auto& tag : stream_tags()) m.stream_seeds.emplace_back(tag, derive_seed(config.master_seed, stream_key(tag)));
  write_text_file(manifest_path, manifest_to_json(m));

  detail::Runner runner(config, dir, options.log);
  for (const auto& name : known_experiments()) {
    if (std::find(config.experiments.begin(), config.experiments.end(), name) == config.experiments.end()) continue;
    if (previous) {
      const auto it = std::find_if(previous->experiments.begin(), previous->experiments.end(),
                                   [&](const ExperimentRecord& r) { return r.name == name; });
      if (it != previous->experiments.end() && record_still_valid(dir, *it)) {
        if (options.log) *options.log << "skip " << name << " (complete)\n";
        m.experiments.push_back(*it);
        outcome.acceptance_failed = outcome.acceptance_failed || (name == "acceptance" && !it->passed);
        write_text_file(manifest_path, manifest_to_json(m));
        continue;
      }
    }
    if (options.log) *options.log << "run " << name << std::endl;
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentRecord rec;
    rec.name = name;
    if (name == "acceptance") {
      const auto rep = run_acceptance(config, dir / "acceptance", options.log);
      rec.passed = rep.all_passed();
      outcome.acceptance_failed = !rec.passed;
      // acceptance_results.json carries timings and stays out of the digests.
      auto files = files_under(dir / "acceptance" / "run1", dir);
      const auto second = files_under(dir / "acceptance" / "run2", dir);
      files.insert(files.end(), second.begin(), second.end());
      rec.outputs = digest_files(dir, files);
    } else {
      const auto out = runner.run(name);
      rec.passed = out.passed;
      rec.outputs = digest_files(dir, out.files);
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    m.experiments.push_back(std::move(rec));
    write_text_file(manifest_path, manifest_to_json(m));
  }
  return outcome;
}

ReplayOutcome replay_manifest(const fs::path& manifest_path, std::optional<fs::path> output_dir, std::ostream* log) {
  const auto stored = parse_manifest(read_text_file(manifest_path));
  auto cfg = stored.config;
  ReplayOutcome out;
  out.output_dir = output_dir.value_or(fs::path(cfg.output_dir).string() + "-replay");
  cfg.output_dir = out.output_dir.string();
  const auto fresh = run_campaign(cfg, RunOptions{false, log});
  for (const auto& rec : stored.experiments) {
    for (const auto& o : rec.outputs) {
      const auto p = out.output_dir / o.file;
      if (!fs::exists(p) || sha256_file(p) != o.sha256) out.mismatches.push_back(o.file);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string render_report(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ReportError("no such output directory: " + dir.string());
  auto load = [&](const fs::path& p) -> std::optional<json> {
    if (!fs::exists(p)) return std::nullopt;
    try {
      return json::parse(read_text_file(p));
    } catch (const json::exception& e) {
      throw ReportError("corrupt output " + p.string() + ": " + e.what());
    }
  };
  std::ostringstream os;
  bool any = false;

  if (const auto fl = load(dir / "fluctuation.json")) {
    any = true;
    try {
      std::istringstream in(fl->dump());
      const auto rep = read_fluctuation_json(in);
      os << "Passage times (alpha=" << fixed(rep.alpha) << ", d=" << rep.dimension << ", replicas=" << rep.replicas
         << ", seed=" << rep.master_seed << ")\n";
      char line[256];
      std::snprintf(line, sizeof line, "%6s %10s %12s %10s %12s %12s\n", "n", "T_mean", "psi_hat", "phi_hat",
                    "fluct_lb", "ci95_mean");
      os << line;
      for (const auto& r : rep.rows) {
        std::snprintf(line, sizeof line, "%6d %10.4f %12.5f %10.4f %12.5f %12.5f\n", r.n, r.mean_T, r.var_T,
                      r.phi_hat, r.fluct_lb, r.ci95_mean);
        os << line;
      }
      os << "g_hat = " << fixed(rep.g_hat, 8) << "  (affine fit, not used: "
         << (std::isfinite(rep.g_affine) ? fixed(rep.g_affine, 8) : "n/a") << ")\n\n";
      os << "log_phi_hat fluct_lb\n";
      for (const auto& r : rep.rows) os << fixed(std::log(r.phi_hat), 8) << ' ' << fixed(r.fluct_lb, 8) << '\n';
      os << '\n';
    } catch (const json::exception& e) {
      throw ReportError(std::string("corrupt fluctuation.json: ") + e.what());
    }
  }

  if (!any) {
    if (const auto est = load(dir / "estimate.json")) {
      any = true;
      try {
        os << "Passage times (replicas=" << est->at("replicas").get<std::size_t>() << ")\n";
        char line[256];
        std::snprintf(line, sizeof line, "%6s %10s %12s %12s %9s\n", "n", "T_mean", "var_T", "ci95_mean", "excluded");
        os << line;
        for (const auto& r : est->at("rows")) {
          std::snprintf(line, sizeof line, "%6g %10.4f %12.5f %12.5f %9zu\n", r.at("n").get<double>(),
                        r.at("mean_T").get<double>(), r.at("var_T").get<double>(),
                        r.at("ci95_mean").get<double>(), r.at("excluded").get<std::size_t>());
          os << line;
        }
        os << '\n';
      } catch (const json::exception& e) {
        throw ReportError(std::string("corrupt estimate.json: ") + e.what());
      }
    }
  }

  bool header = false;
  for (const auto* name : {"bench_midpoint", "bench_argmin", "bench_a24a25", "bench_audit", "bench_c_event",
                           "bench_resampling", "bench_rotation"}) {
    const auto j = load(dir / (std::string(name) + ".json"));
    if (!j) continue;
    any = true;
    if (!header) {
      os << "Bench\n";
      header = true;
    }
    if (!j->contains("passed") || !j->at("passed").is_boolean()) throw ReportError(std::string("corrupt ") + name);
    char line[128];
    std::snprintf(line, sizeof line, "  %-18s %s\n", j->value("name", std::string(name)).c_str(),
                  j->at("passed").get<bool>() ? "PASS" : "FAIL");
    os << line;
  }
  if (header) os << '\n';

  for (const auto& p : {dir / "acceptance.json", dir / "acceptance" / "run1" / "acceptance.json"}) {
    const auto j = load(p);
    if (!j) continue;
    any = true;
    os << "Acceptance\n";
    try {
      for (const auto& c : j->at("criteria")) {
        os << "  " << (c.at("passed").get<bool>() ? "[PASS]" : "[FAIL]") << " C" << c.at("id").get<int>() << ' '
           << c.at("name").get<std::string>() << ": " << c.at("detail").get<std::string>() << '\n';
      }
    } catch (const json::exception& e) {
      throw ReportError(std::string("corrupt acceptance.json: ") + e.what());
    }
    break;
  }
  if (!any) throw ReportError("no outputs found in " + dir.string());
  return os.str();
}

}  // namespace fpp
