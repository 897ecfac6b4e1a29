#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "geosim/cli/config.h"
#include "geosim/coord/cluster.h"

namespace geosim {

// Process exit codes.
inline constexpr int kExitClean = 0;
inline constexpr int kExitViolations = 1;
inline constexpr int kExitConfigError = 2;

inline constexpr int kReportSchemaVersion = 1;

// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "GEOSIM_OUT_DIR";

// --out, then $GEOSIM_OUT_DIR, then output.dir, then "geosim-out".
std::string ResolveOutDir(const std::optional<std::string>& cli_out, const OutputConfig& output);

struct ScenarioOutcome {
  int exit_code = kExitClean;
  nlohmann::json report;
  // Cluster scenarios only.
  std::optional<MetricsReport> metrics;
  size_t violations = 0;
  std::string summary;
};

// Runs one scenario in-process. No files are written.
ScenarioOutcome ExecuteScenario(const ScenarioConfig& config, History* history_out = nullptr);

nlohmann::json ClusterReport(const ScenarioConfig& config, const RunResult& result);

// Writes report.json, report.csv and (if enabled) history.ndjson into dir.
void WriteOutcome(const std::string& dir, const ScenarioOutcome& outcome, const History* history);

// Commands. Each returns a process exit code and writes progress to log.
int RunCommand(const std::string& config_path, std::optional<uint64_t> seed,
               std::optional<std::string> out_dir, std::ostream& log);
int SweepCommand(const std::string& config_path, const std::string& param,
                 const std::string& values, std::optional<std::string> out_dir,
                 std::ostream& log);
int CheckCommand(const std::string& history_path, std::ostream& log);

// "0,10,50.5" -> {0, 10, 50.5}. Throws ConfigError when empty or malformed.
std::vector<double> ParseValueList(const std::string& values);

}  // namespace geosim
