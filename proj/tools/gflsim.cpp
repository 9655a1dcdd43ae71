// gflsim: generate cSBM benchmark data, train GFL-APPNP and baselines,
// sweep hyperparameters, and merge result summaries.

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "gfl/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"graph federated learning simulator"};
  app.require_subcommand(1);

  gfl::cli::CommonOpts opts;
  std::string config_path;
  std::string variable;
  std::string values;
  std::vector<std::string> report_inputs;
  std::string report_out = "report.csv";

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    if (needs_config) {
      cmd->add_option("--config", config_path, "run configuration file")
          ->required();
    }
    cmd->add_option("--out", opts.out_override, "output directory override");
    cmd->add_option("--seed-count", opts.seed_count,
                    "truncate or extend the config's seed list");
    cmd->add_option("--threads", opts.threads, "worker thread cap");
    cmd->add_option("--transport", opts.transport,
                    "message transport: inproc|socket");
  };

  CLI::App* generate = app.add_subcommand("generate", "write dataset files");
  add_common(generate, true);
  CLI::App* train = app.add_subcommand("train", "train one seeded run");
  add_common(train, true);
  CLI::App* sweep = app.add_subcommand("sweep", "repeat runs over a variable");
  add_common(sweep, true);
  sweep->add_option("--var", variable, "swept variable: I|d|sigma")->required();
  sweep->add_option("--values", values, "comma-separated values")->required();
  CLI::App* report = app.add_subcommand("report", "merge summary CSVs");
  report->add_option("inputs", report_inputs, "summary CSV files");
  report->add_option("--out", report_out, "merged table path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (generate->parsed()) return gfl::cli::cmd_generate(config_path, opts);
  if (train->parsed()) return gfl::cli::cmd_train(config_path, opts);
  if (sweep->parsed()) {
    return gfl::cli::cmd_sweep(config_path, variable, values, opts);
  }
  if (report->parsed()) return gfl::cli::cmd_report(report_inputs, report_out);
  return 2;
}
