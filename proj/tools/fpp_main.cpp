#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "fpp/campaign.hpp"
#include "fpp/config.hpp"
#include "fpp/errors.hpp"
#include "fpp/estimator.hpp"

namespace {

enum Exit : int { kOk = 0, kConfig = 1, kRuntime = 2, kAcceptance = 3 };

fpp::ExperimentConfig load(const std::string& path) {
  auto cfg = fpp::load_config(path);
  fpp::apply_env_overrides(cfg);
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Euclidean first-passage percolation laboratory"};
  app.require_subcommand(1);

  std::string config_path, dir, manifest_path, replay_dir;
  bool resume = false, quiet = false, skip_repro = false;
  app.add_flag("-q,--quiet", quiet, "Suppress progress output");

  auto* run = app.add_subcommand("run", "Run the experiments listed in a config");
  run->add_option("config", config_path, "Config JSON")->required();
  run->add_flag("--resume", resume, "Skip experiments whose outputs match the manifest");

  auto* report = app.add_subcommand("report", "Summarize an output directory");
  report->add_option("dir", dir, "Output directory")->required();

  auto* acceptance = app.add_subcommand("acceptance", "Run the acceptance suite");
  acceptance->add_option("config", config_path, "Config JSON")->required();
  acceptance->add_flag("--skip-reproducibility", skip_repro, "Run criteria 1-10 once");

  auto* replay = app.add_subcommand("replay", "Re-run a manifest and compare output digests");
  replay->add_option("manifest", manifest_path, "manifest.json")->required();
  replay->add_option("--output-dir", replay_dir, "Where to write the replayed outputs");

  CLI11_PARSE(app, argc, argv);
  std::ostream* log = quiet ? nullptr : &std::cerr;

  try {
    if (*run) {
      const auto cfg = load(config_path);
      const auto out = fpp::run_campaign(cfg, {resume, log});
      if (out.acceptance_failed) return kAcceptance;
      return kOk;
    }
    if (*report) {
      std::cout << fpp::render_report(dir);
      return kOk;
    }
    if (*acceptance) {
      const auto cfg = load(config_path);
      const auto rep = fpp::run_acceptance(cfg, std::filesystem::path(cfg.output_dir) / "acceptance", &std::cout,
                                           !skip_repro);
      return rep.all_passed() ? kOk : kAcceptance;
    }
    if (*replay) {
      std::optional<std::filesystem::path> target;
      if (!replay_dir.empty()) target = replay_dir;
      const auto out = fpp::replay_manifest(manifest_path, target, log);
      for (const auto& f : out.mismatches) std::cout << "mismatch: " << f << '\n';
      std::cout << (out.identical() ? "replay identical" : "replay differs") << " (" << out.output_dir.string()
                << ")\n";
      return out.identical() ? kOk : kRuntime;
    }
  } catch (const fpp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const fpp::ReportError& e) {
    std::cerr << "report error: " << e.what() << '\n';
    return kConfig;
  } catch (const fpp::InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}
