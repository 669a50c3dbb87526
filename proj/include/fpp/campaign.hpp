#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fpp/config.hpp"

namespace fpp {

inline constexpr const char* kArtifactVersion = "1.0.0";
inline constexpr int kCsvSchemaVersion = 1;

struct OutputDigest {
  std::string file;  // relative to the output directory
  std::string sha256;
  bool operator==(const OutputDigest&) const = default;
};

struct ExperimentRecord {
  std::string name;
  std::vector<OutputDigest> outputs;
  bool passed = true;
  double seconds = 0.0;
};

/// Everything needed to reproduce a run. Timings live only here.
struct RunManifest {
  std::string version = kArtifactVersion;
  int csv_schema_version = kCsvSchemaVersion;
  ExperimentConfig config;
  std::vector<std::pair<std::string, std::uint64_t>> stream_seeds;
  std::vector<ExperimentRecord> experiments;
};

std::string manifest_to_json(const RunManifest& manifest);
RunManifest parse_manifest(const std::string& text);

struct RunOptions {
  /// Skip experiments whose manifest entry exists and whose outputs still match their digests.
  bool resume = false;
  std::ostream* log = nullptr;
};

struct RunOutcome {
  RunManifest manifest;
  bool acceptance_failed = false;
};

/// Runs config.experiments in canonical order and writes outputs plus
/// manifest.json into config.output_dir.
RunOutcome run_campaign(const ExperimentConfig& config, const RunOptions& options = {});

struct ReplayOutcome {
  std::filesystem::path output_dir;
  std::vector<std::string> mismatches;  // files whose digests differ or are missing
  bool identical() const { return mismatches.empty(); }
};
/// Re-executes a stored manifest's config (into `output_dir`, default
/// <original>-replay) and compares every output digest.
ReplayOutcome replay_manifest(const std::filesystem::path& manifest_path,
                              std::optional<std::filesystem::path> output_dir = std::nullopt,
                              std::ostream* log = nullptr);

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
/// Human-readable summary of an output directory. Throws ReportError when
/// nothing readable is there or a file is corrupt.
std::string render_report(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Acceptance suite

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
  double budget_seconds = 0.0;  // 0: no runtime limit
};

struct AcceptanceReport {
  std::vector<CriterionResult> criteria;
  bool all_passed() const;
};

/// One line: "[PASS] C<id> <name>: <detail> (<seconds>s)".
std::string format_criterion(const CriterionResult& c);

/// Runs the eleven criteria. Criteria 1-10 write their outputs under
/// dir/run1; the reproducibility check repeats them under dir/run2 and
/// compares every output byte for byte. Each verdict line goes to `log`.
AcceptanceReport run_acceptance(const ExperimentConfig& config, const std::filesystem::path& dir,
                                std::ostream* log = nullptr, bool check_reproducibility = true);

}  // namespace fpp
