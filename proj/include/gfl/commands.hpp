#pragma once

#include <string>
#include <vector>

#include "gfl/config.hpp"

namespace gfl::cli {

// Exit codes: 0 success, 1 runtime/data error, 2 config/usage error.
struct CommonOpts {
  std::string out_override;
  int seed_count = 0;       // 0 = use the config's seed list as is
  unsigned threads = 1;
  std::string transport = "inproc";  // inproc | socket
};

int cmd_generate(const std::string& config_path, const CommonOpts& opts);
int cmd_train(const std::string& config_path, const CommonOpts& opts);
int cmd_sweep(const std::string& config_path, const std::string& variable,
              const std::string& values_csv, const CommonOpts& opts);
int cmd_report(const std::vector<std::string>& summary_paths,
               const std::string& out_path);

}  // namespace gfl::cli
