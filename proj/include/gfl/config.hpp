#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "gfl/experiment.hpp"

namespace gfl::cli {

// Configuration / usage problems map to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat `section.key = value` run configuration. Missing keys fall back to
// per-task defaults; unknown keys are rejected.
struct RunConfig {
  labkit::ExperimentSpec spec;
  std::vector<std::uint64_t> seeds{1};
  std::string out_dir = "out";
  std::string data_dir;  // when set, train loads this dataset instead of sampling
};

RunConfig parse_run_config_text(const std::string& text);
RunConfig parse_run_config_file(const std::string& path);

// Canonical `key = value` rendering of a resolved config.
std::string echo_config(const RunConfig& cfg);

}  // namespace gfl::cli
