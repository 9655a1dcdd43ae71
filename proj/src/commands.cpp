#include "gfl/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

namespace gfl::cli {

namespace fs = std::filesystem;
using fedrt::BaselineKind;
using graphgen::Split;
using graphgen::TaskKind;

namespace {

std::string num17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

RunConfig load_config(const std::string& path, const CommonOpts& opts) {
  RunConfig cfg = parse_run_config_file(path);
  if (!opts.out_override.empty()) cfg.out_dir = opts.out_override;
  if (opts.seed_count > 0) {
    const auto want = static_cast<std::size_t>(opts.seed_count);
    if (cfg.seeds.size() > want) {
      cfg.seeds.resize(want);
    } else {
      while (cfg.seeds.size() < want) {
        cfg.seeds.push_back(cfg.seeds.back() + 1);
      }
    }
  }
  cfg.spec.train.echo = echo_config(cfg);
  std::cout << cfg.spec.train.echo;
  return cfg;
}

std::pair<graphgen::Graph, graphgen::ClientDataset> materialize(
    const RunConfig& cfg, std::uint64_t seed) {
  if (!cfg.data_dir.empty()) {
    if (cfg.spec.per_client != 1) {
      throw ConfigError(
          "io.data_dir supports one-row-per-client datasets only");
    }
    auto [graph, data] = graphgen::load_graph_files(
        cfg.data_dir + "/edges.txt", cfg.data_dir + "/features.csv",
        cfg.data_dir + "/labels.csv");
    graphgen::load_split_file(cfg.data_dir + "/split.csv", data);
    return {std::move(graph), std::move(data)};
  }
  return graphgen::generate_task(cfg.spec.task, cfg.spec.csbm,
                                 cfg.spec.per_client, cfg.spec.split, seed);
}

int run_guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int cmd_generate(const std::string& config_path, const CommonOpts& opts) {
  return run_guarded([&] {
    RunConfig cfg = load_config(config_path, opts);
    auto [graph, data] = materialize(cfg, cfg.seeds.front());
    graphgen::write_graph_files(cfg.out_dir, graph, data);

    std::cout << "phi = " << num17(graphgen::phi_index(cfg.spec.csbm)) << "\n";
    if (graph.is_connected()) {
      std::cout << "connectivity_index = "
                << num17(graphgen::connectivity_index(graph)) << "\n";
    } else {
      std::cout << "connectivity_index = n/a (graph disconnected)\n";
    }
    std::vector<std::uint32_t> train_nodes;
    for (std::uint32_t k = 0; k < graph.n; ++k) {
      if (data.labeled[k]) train_nodes.push_back(k);
    }
    if (!train_nodes.empty() && train_nodes.size() < graph.n) {
      auto sub = graph.induced_subgraph(train_nodes);
      if (sub.is_connected()) {
        std::cout << "connectivity_index_train = "
                  << num17(graphgen::connectivity_index(sub)) << "\n";
      }
    }
    std::cout << "wrote " << cfg.out_dir << "/{edges.txt,features.csv,"
              << "labels.csv,split.csv}\n";
    return 0;
  });
}

int cmd_train(const std::string& config_path, const CommonOpts& opts) {
  return run_guarded([&] {
    RunConfig cfg = load_config(config_path, opts);
    const std::uint64_t seed = cfg.seeds.front();
    auto [graph, data] = materialize(cfg, seed);

    fedrt::TrainingConfig train = cfg.spec.train;
    train.seed = seed;

    std::unique_ptr<fedrt::Transport> transport;
    if (opts.transport == "socket") {
      transport = std::make_unique<fedrt::SocketTransport>(data.num_clients());
    } else if (opts.transport != "inproc") {
      throw ConfigError("unknown transport '" + opts.transport + "'");
    }
    labkit::TrainingHistory history =
        train.baseline == BaselineKind::none
            ? fedrt::run_training(train, graph, data, transport.get())
            : fedrt::run_baseline(train, data, transport.get());

    fs::create_directories(cfg.out_dir);
    labkit::write_metrics(history, cfg.out_dir + "/history.csv");
    fedrt::write_checkpoint(cfg.out_dir + "/checkpoint.bin",
                            history.best_update, history.best_params);
    std::cout << "best_update = " << history.best_update << "\n";
    std::cout << "best_valid_loss = " << num17(history.best_valid_loss) << "\n";
    std::cout << "test_accuracy = " << num17(history.final_test_accuracy)
              << "\n";
    return 0;
  });
}

int cmd_sweep(const std::string& config_path, const std::string& variable,
              const std::string& values_csv, const CommonOpts& opts) {
  return run_guarded([&] {
    if (variable != "I" && variable != "d" && variable != "sigma") {
      throw ConfigError("sweep variable must be one of I|d|sigma");
    }
    RunConfig cfg = load_config(config_path, opts);

    std::vector<std::string> values;
    {
      std::string cur;
      for (char ch : values_csv) {
        if (ch == ',') {
          values.push_back(cur);
          cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(ch))) {
          cur.push_back(ch);
        }
      }
      if (!cur.empty()) values.push_back(cur);
    }
    if (values.empty()) throw ConfigError("sweep: no values given");

    fs::create_directories(cfg.out_dir);
    for (const std::string& value : values) {
      RunConfig point = cfg;
      try {
        if (variable == "I") {
          point.spec.train.local_updates = std::stoull(value);
        } else if (variable == "d") {
          point.spec.csbm.d = std::stod(value);
        } else {
          const double sigma = std::stod(value);
          if (sigma > 0.0) {
            fedrt::DpConfig dp;
            dp.target = point.spec.train.dp
                            ? point.spec.train.dp->target
                            : fedrt::DpConfig::Target::hidden_and_grad;
            dp.sigma = sigma;
            point.spec.train.dp = dp;
          } else {
            point.spec.train.dp.reset();
          }
        }
      } catch (const std::exception&) {
        throw ConfigError("sweep: bad value '" + value + "'");
      }
      point.spec.train.validate();
      point.spec.train.echo = echo_config(point);

      labkit::ExperimentSummary summary =
          labkit::repeat_experiment(point.spec, point.seeds, opts.threads);
      const std::string path =
          cfg.out_dir + "/sweep_" + variable + "_" + value + ".csv";
      labkit::write_metrics(summary, path);
      std::cout << variable << " = " << value
                << "  mean_test_acc = " << num17(summary.mean);
      if (summary.ci95_half_width) {
        std::cout << "  ci95 = " << num17(*summary.ci95_half_width);
      }
      if (summary.connectivity) {
        std::cout << "  connectivity_index = " << num17(*summary.connectivity);
      }
      std::cout << "\n";
    }
    return 0;
  });
}

int cmd_report(const std::vector<std::string>& summary_paths,
               const std::string& out_path) {
  return run_guarded([&] {
    if (summary_paths.empty()) throw ConfigError("report: no input files");
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << "source,seeds,mean_test_acc,ci95_half_width,connectivity_index\n";
    for (const std::string& path : summary_paths) {
      labkit::ExperimentSummary s = labkit::read_summary_csv(path);
      out << path << "," << s.seeds.size() << "," << num17(s.mean) << ",";
      if (s.ci95_half_width) out << num17(*s.ci95_half_width);
      out << ",";
      if (s.connectivity) out << num17(*s.connectivity);
      out << "\n";
      std::cout << path << ": mean = " << num17(s.mean) << " over "
                << s.seeds.size() << " seeds\n";
    }
    std::cout << "wrote " << out_path << "\n";
    return 0;
  });
}

}  // namespace gfl::cli
