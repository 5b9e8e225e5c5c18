#pragma once

// End-to-end orchestration driven by a JSON run configuration.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "groupanon/microdata.hpp"
#include "groupanon/redistribution.hpp"
#include "groupanon/wavelet.hpp"

namespace groupanon {

struct RunConfig {
  std::filesystem::path input;
  std::filesystem::path output;
  std::filesystem::path report;
  std::filesystem::path plot;  // defaults to the report path with .plot.tsv
  char delimiter = ',';
  AttributeSpec attributes;
  std::string wavelet = "db2";
  std::vector<double> custom_lowpass;  // overrides wavelet when non-empty
  int level = 1;
  ExtensionDirection extension = ExtensionDirection::left;
  RedistributionPlan plan;
  std::uint64_t seed = 0;

  WaveletFilterPair filters() const;
};

// Relative paths resolve against base_dir. Unknown keys are rejected.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

// Command-line overrides applied on top of a parsed config.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output;
  std::optional<std::filesystem::path> report;
};

void apply_overrides(RunConfig& config, const Overrides& o);

enum ExitCode : int { kSuccess = 0, kHardError = 1, kInvariantViolation = 2 };

struct RunOutcome {
  int exit_code = kSuccess;
  nlohmann::json report;
};

// Loads, redistributes, rewrites and writes the output microfile, the JSON
// report and the plot dump. Outputs are written even when a check fails.
RunOutcome run_anonymize(const RunConfig& config);

// Read-only: signal, decomposition, reconstruction matrix, fixed indices.
RunOutcome run_inspect(const RunConfig& config);

// Compares the input microfile with the anonymized output.
RunOutcome run_verify(const RunConfig& config);

nlohmann::json error_report(const std::string& message);

// "index<TAB>before<TAB>after" rows with a header line.
std::string plot_dump(std::span<const double> before, std::span<const double> after);

}  // namespace groupanon
