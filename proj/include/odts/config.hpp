#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "odts/models.hpp"
#include "odts/space.hpp"

namespace odts {

enum class Command { simulate, verify, fit, consistency, misspec };

const char* command_name(Command c);
Command command_from_name(std::string_view name);

struct RunBlock {
  long long n = 1000;                 // simulate/fit length; verify horizon
  std::vector<long long> n_grid;      // experiments
  long long burn_in = 1000;
  int replicates = 20;                // experiments; verify MC replicates
  std::uint64_t seed = 1;
  int starts = 10;
  int truncation_m = -1;              // -1 = auto from the stability margin
  double x0 = std::numeric_limits<double>::quiet_NaN();  // NaN = auto
};

struct IoBlock {
  std::string out = "out";
  bool csv = true;
  bool json = true;
};

// Parsed and validated experiment description (all defaults resolved).
struct ExperimentConfig {
  Command command = Command::simulate;
  ModelSpec model;
  std::optional<ParameterSpace> space;
  RunBlock run;
  IoBlock io;
};

// Line-oriented `section.key = value` format; unknown or duplicate keys are
// rejected. The CLI command must match an in-file `command` key if present.
ExperimentConfig parse_config_text(const std::string& text, Command command);
ExperimentConfig load_config(const std::string& path, Command command,
                             std::optional<std::uint64_t> seed_override,
                             std::optional<std::string> out_override);

// Canonical echo with every applicable default materialized; reparsing it
// reproduces the run byte-identically.
std::string render_resolved_config(const ExperimentConfig& config);

// Dispatches and writes artifacts into io.out. Returns 0 on success and 3
// when a verify condition fails; configuration problems throw ConfigError.
int run_experiment(const ExperimentConfig& config);

}  // namespace odts
