#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace debtscope {

// Each artifact-producing subcommand runs from a fully resolved JSON config,
// so a manifest can re-run it exactly.
struct CommandResult {
  std::vector<std::string> inputs;   // files read
  std::vector<std::string> outputs;  // files written
  nlohmann::ordered_json rng_seeds = nlohmann::ordered_json::object();
  std::string report;  // human-readable summary for stdout
};

const std::vector<std::string>& CommandNames();

// Throws ArgumentError on an invalid config, Error on runtime failures.
CommandResult RunCommand(std::string_view command, const nlohmann::json& config);

struct RunManifest {
  std::string command;
  nlohmann::ordered_json config;
  std::vector<std::pair<std::string, std::string>> inputs;   // path, sha256
  std::vector<std::pair<std::string, std::string>> outputs;  // path, sha256
  nlohmann::ordered_json rng_seeds;
  std::string tool_version;
  std::string started_at;
  std::string finished_at;
};

nlohmann::ordered_json ToJson(const RunManifest& m);
RunManifest RunManifestFromJson(const nlohmann::json& j);

// Where a command's manifest goes unless the config names one.
std::string ManifestPath(std::string_view command, const nlohmann::json& config);

// Runs the command, writes its manifest and (optionally) prints the report.
RunManifest RunAndRecord(std::string_view command, const nlohmann::ordered_json& config, bool echo_report = true);

struct ReplayReport {
  bool identical = true;
  struct Mismatch {
    std::string path, expected, actual;
  };
  std::vector<Mismatch> mismatches;
  CommandResult result;
};

// Re-executes the manifest's command with its recorded config and compares
// output hashes.
ReplayReport Replay(const std::string& manifest_path);

std::string UtcNow();

}  // namespace debtscope
