#include "gfl/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace gfl::cli {

using fedrt::BaselineKind;
using fedrt::DpConfig;
using graphgen::TaskKind;

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

std::uint64_t to_count(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d < 0 || d != std::floor(d)) {
    throw ConfigError(key + ": expected a nonnegative integer, got '" + v + "'");
  }
  return static_cast<std::uint64_t>(d);
}

std::vector<std::string> split_commas(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : v) {
    if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(trim(cur));
  return out;
}

TaskKind parse_task(const std::string& v) {
  if (v == "dnc") return TaskKind::dnc;
  if (v == "snc") return TaskKind::snc;
  if (v == "sc") return TaskKind::sc;
  throw ConfigError("task.kind: expected dnc|snc|sc, got '" + v + "'");
}

const char* task_name(TaskKind t) {
  switch (t) {
    case TaskKind::dnc: return "dnc";
    case TaskKind::snc: return "snc";
    default: return "sc";
  }
}

// Operating defaults per task: DNC/SNC/SC generation parameters and the
// training settings they are normally run with. model.alpha is the damping
// weight of the propagation series; 0.9 is the personalized-PageRank profile
// with teleport probability 0.1 that the benchmark numbers correspond to.
void apply_task_defaults(RunConfig& cfg) {
  auto& spec = cfg.spec;
  spec.csbm.p = 100;
  spec.train.hidden = 64;
  spec.train.alpha = 0.9;
  spec.train.steps = 10;
  spec.train.local_updates = 10;
  switch (spec.task) {
    case TaskKind::dnc:
      spec.csbm = {200, 8.0, 2.0, 1.0, 100};
      spec.per_client = 1;
      spec.split = {0.1, 0.1, 0.8};
      spec.train.eta = 0.5;
      spec.train.total_updates = 3000;
      spec.train.batch_size = 1;
      break;
    case TaskKind::snc:
      spec.csbm = {200, 10.0, 2.0, 1.0, 100};
      spec.per_client = 40;
      spec.split = {0.1, 0.1, 0.8};
      spec.train.eta = 0.2;
      spec.train.total_updates = 5000;
      spec.train.batch_size = 40;
      break;
    case TaskKind::sc:
      spec.csbm = {50, 5.0, 2.2, 0.1, 100};
      spec.per_client = 120;
      spec.split = {10.0 / 120.0, 10.0 / 120.0, 100.0 / 120.0};
      spec.train.eta = 0.2;
      spec.train.total_updates = 2000;
      spec.train.batch_size = 5;
      break;
  }
}

}  // namespace

RunConfig parse_run_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  RunConfig cfg;
  auto it = kv.find("task.kind");
  cfg.spec.task = it != kv.end() ? parse_task(it->second) : TaskKind::dnc;
  apply_task_defaults(cfg);

  double dp_sigma = 0.0;
  DpConfig::Target dp_target = DpConfig::Target::hidden;
  bool dp_seen = false;

  for (const auto& [key, value] : kv) {
    if (key == "task.kind") {
      // already consumed
    } else if (key == "task.n") {
      cfg.spec.csbm.n = to_count(key, value);
    } else if (key == "task.d") {
      cfg.spec.csbm.d = to_double(key, value);
    } else if (key == "task.lambda") {
      cfg.spec.csbm.lambda = to_double(key, value);
    } else if (key == "task.mu") {
      cfg.spec.csbm.mu = to_double(key, value);
    } else if (key == "task.p") {
      cfg.spec.csbm.p = to_count(key, value);
    } else if (key == "task.per_client") {
      cfg.spec.per_client = to_count(key, value);
    } else if (key == "task.split") {
      auto parts = split_commas(value);
      if (parts.size() != 3) {
        throw ConfigError("task.split: expected three fractions");
      }
      cfg.spec.split = {to_double(key, parts[0]), to_double(key, parts[1]),
                        to_double(key, parts[2])};
    } else if (key == "model.hidden") {
      cfg.spec.train.hidden = to_count(key, value);
    } else if (key == "model.alpha") {
      cfg.spec.train.alpha = to_double(key, value);
    } else if (key == "model.M") {
      cfg.spec.train.steps = to_count(key, value);
    } else if (key == "train.eta") {
      cfg.spec.train.eta = to_double(key, value);
    } else if (key == "train.T") {
      cfg.spec.train.total_updates = to_count(key, value);
    } else if (key == "train.I") {
      cfg.spec.train.local_updates = to_count(key, value);
    } else if (key == "train.batch") {
      cfg.spec.train.batch_size = to_count(key, value);
    } else if (key == "train.avg") {
      if (value == "labeled") {
        cfg.spec.train.avg_all_clients = false;
      } else if (value == "all") {
        cfg.spec.train.avg_all_clients = true;
      } else {
        throw ConfigError("train.avg: expected labeled|all, got '" + value +
                          "'");
      }
    } else if (key == "train.seeds") {
      cfg.seeds.clear();
      for (const auto& s : split_commas(value)) {
        cfg.seeds.push_back(to_count(key, s));
      }
      if (cfg.seeds.empty()) throw ConfigError("train.seeds: empty list");
    } else if (key == "dp.target") {
      dp_seen = true;
      if (value == "h") {
        dp_target = DpConfig::Target::hidden;
      } else if (value == "h_and_grad") {
        dp_target = DpConfig::Target::hidden_and_grad;
      } else {
        throw ConfigError("dp.target: expected h|h_and_grad, got '" + value +
                          "'");
      }
    } else if (key == "dp.sigma") {
      dp_seen = true;
      dp_sigma = to_double(key, value);
      if (dp_sigma < 0) throw ConfigError("dp.sigma: must be >= 0");
    } else if (key == "baseline") {
      if (value == "none") {
        cfg.spec.train.baseline = BaselineKind::none;
      } else if (value == "fedmlp") {
        cfg.spec.train.baseline = BaselineKind::fedmlp;
      } else if (value == "local_mlps") {
        cfg.spec.train.baseline = BaselineKind::local_mlps;
      } else {
        throw ConfigError("baseline: expected none|fedmlp|local_mlps");
      }
    } else if (key == "io.out_dir") {
      cfg.out_dir = value;
    } else if (key == "io.data_dir") {
      cfg.data_dir = value;
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }

  if (dp_seen && dp_sigma > 0.0) {
    cfg.spec.train.dp = DpConfig{dp_target, dp_sigma};
  }
  cfg.spec.train.task = cfg.spec.task;
  cfg.spec.train.seed = cfg.seeds.front();

  try {
    cfg.spec.csbm.validate();
    cfg.spec.train.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  cfg.spec.train.echo = echo_config(cfg);
  return cfg;
}

RunConfig parse_run_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config_text(ss.str());
}

std::string echo_config(const RunConfig& cfg) {
  const auto& spec = cfg.spec;
  std::ostringstream out;
  auto num = [](double v) {
    // shortest text that parses back to the same value
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, end);
  };
  out << "task.kind = " << task_name(spec.task) << "\n";
  out << "task.n = " << spec.csbm.n << "\n";
  out << "task.d = " << num(spec.csbm.d) << "\n";
  out << "task.lambda = " << num(spec.csbm.lambda) << "\n";
  out << "task.mu = " << num(spec.csbm.mu) << "\n";
  out << "task.p = " << spec.csbm.p << "\n";
  out << "task.per_client = " << spec.per_client << "\n";
  out << "task.split = " << num(spec.split.train) << "," << num(spec.split.valid)
      << "," << num(spec.split.test) << "\n";
  out << "model.hidden = " << spec.train.hidden << "\n";
  out << "model.alpha = " << num(spec.train.alpha) << "\n";
  out << "model.M = " << spec.train.steps << "\n";
  out << "train.eta = " << num(spec.train.eta) << "\n";
  out << "train.T = " << spec.train.total_updates << "\n";
  out << "train.I = " << spec.train.local_updates << "\n";
  out << "train.batch = " << spec.train.batch_size << "\n";
  out << "train.avg = " << (spec.train.avg_all_clients ? "all" : "labeled")
      << "\n";
  out << "train.seeds = ";
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
    out << (i ? "," : "") << cfg.seeds[i];
  }
  out << "\n";
  if (spec.train.dp) {
    out << "dp.target = "
        << (spec.train.dp->target == DpConfig::Target::hidden ? "h"
                                                              : "h_and_grad")
        << "\n";
    out << "dp.sigma = " << num(spec.train.dp->sigma) << "\n";
  }
  out << "baseline = "
      << (spec.train.baseline == BaselineKind::none
              ? "none"
              : spec.train.baseline == BaselineKind::fedmlp ? "fedmlp"
                                                            : "local_mlps")
      << "\n";
  out << "io.out_dir = " << cfg.out_dir << "\n";
  if (!cfg.data_dir.empty()) out << "io.data_dir = " << cfg.data_dir << "\n";
  return out.str();
}

}  // namespace gfl::cli
