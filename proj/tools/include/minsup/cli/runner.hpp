#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "minsup/analysis.hpp"
#include "minsup/cli/config.hpp"

namespace minsup::cli {

inline constexpr const char* kVersion = "1.0.0";

struct Artifact {
  std::string path;  // relative to the output directory
  std::string content;
};

struct CheckOutcome {
  std::string check;
  std::vector<analysis::CheckReport> reports;
  std::vector<Artifact> artifacts;
  std::string error;  // empty on success
  double wall_time = 0.0;
};

/// Runs one check of the config; errors are captured in the outcome.
CheckOutcome run_check(const RunConfig& config, const std::string& check);

struct FileEntry {
  std::string path;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  std::string config_hash;
  std::vector<std::pair<std::string, std::string>> versions;
  std::vector<std::pair<std::string, double>> wall_times;
  std::vector<FileEntry> files;
  std::vector<std::pair<std::string, std::string>> verdicts;
  std::vector<std::string> diagnostics;
  int exit_code = 1;
};

/// Exit code: 0 when every report passes, 2 when some are inconclusive and
/// none fail, 1 on any failure or error.
int exit_code_for(const std::vector<CheckOutcome>& outcomes);

/// Executes the configured checks on a bounded worker pool and writes
/// config.json, reports/, summary.csv, check artifacts and run_manifest.json
/// into `out_dir`. Every file is written to a temporary name and renamed.
RunManifest run(const RunConfig& config, const std::filesystem::path& out_dir);

std::string manifest_json(const RunManifest& m);
std::string sha256_hex(const std::string& data);
/// Write-to-temp then rename.
void write_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace minsup::cli
