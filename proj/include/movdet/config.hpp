#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "movdet/pipeline.hpp"

namespace movdet {

struct KeyValue {
  std::string key;
  std::string value;
  int line = 0;
};

/// Splits `key = value` lines; '#' starts a comment line, blank lines are skipped.
std::vector<KeyValue> parse_key_values(std::string_view text);

/// Every tunable of a run.
struct RunConfig {
  PipelineConfig pipeline;
  double tau = 0.2;  // evaluation overlap threshold
  int warmup = 0;    // frames skipped by evaluation

  bool operator==(const RunConfig& other) const;
};

struct ConfigKey {
  std::string_view name;
  std::string_view description;
  std::string_view provenance;  // set for constants of the method, empty for engineering defaults
};

const std::vector<ConfigKey>& config_keys();

/// Throws ConfigError for unknown keys or malformed values.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);
std::string get_config_value(const RunConfig& config, std::string_view key);

RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);
/// Every key in a fixed order; parse_run_config(format_run_config(c)) == c.
std::string format_run_config(const RunConfig& config);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text, std::string_view what);
long long parse_integer(std::string_view text, std::string_view what);

}  // namespace movdet
