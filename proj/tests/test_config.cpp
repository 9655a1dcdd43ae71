#include <doctest.h>

#include "gfl/config.hpp"

using namespace gfl::cli;
using gfl::fedrt::BaselineKind;
using gfl::fedrt::DpConfig;
using gfl::graphgen::TaskKind;

TEST_CASE("defaults fill in per task") {
  auto dnc = parse_run_config_text("task.kind = dnc\n");
  CHECK(dnc.spec.csbm.n == 200);
  CHECK(dnc.spec.csbm.d == 8.0);
  CHECK(dnc.spec.train.eta == 0.5);
  CHECK(dnc.spec.train.total_updates == 3000);
  CHECK(dnc.spec.train.batch_size == 1);
  CHECK(dnc.spec.per_client == 1);
  CHECK(dnc.spec.train.hidden == 64);
  CHECK(dnc.spec.train.alpha == 0.9);
  CHECK(dnc.spec.train.steps == 10);

  auto snc = parse_run_config_text("task.kind = snc\n");
  CHECK(snc.spec.train.eta == 0.2);
  CHECK(snc.spec.train.total_updates == 5000);
  CHECK(snc.spec.train.batch_size == 40);
  CHECK(snc.spec.per_client == 40);

  auto sc = parse_run_config_text("task.kind = sc\n");
  CHECK(sc.spec.csbm.n == 50);
  CHECK(sc.spec.train.eta == 0.2);
  CHECK(sc.spec.train.total_updates == 2000);
  CHECK(sc.spec.train.batch_size == 5);
  CHECK(sc.spec.per_client == 120);
}

TEST_CASE("explicit keys override and unknown keys reject") {
  const std::string text =
      "task.kind = dnc\n"
      "task.n = 40        # comment\n"
      "model.alpha = 0.9\n"
      "train.I = 20\n"
      "train.seeds = 5, 6, 7\n"
      "baseline = fedmlp\n"
      "io.out_dir = /tmp/x\n";
  auto cfg = parse_run_config_text(text);
  CHECK(cfg.spec.csbm.n == 40);
  CHECK(cfg.spec.train.alpha == 0.9);
  CHECK(cfg.spec.train.local_updates == 20);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{5, 6, 7});
  CHECK(cfg.spec.train.baseline == BaselineKind::fedmlp);
  CHECK(cfg.out_dir == "/tmp/x");

  CHECK_THROWS_AS(parse_run_config_text("task.kind = dnc\nbogus.key = 1\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config_text("task.kind = nope\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config_text("train.eta = fast\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config_text("task.split = 0.1,0.9\n"), ConfigError);
  CHECK_THROWS_AS(parse_run_config_text("no equals sign"), ConfigError);
  CHECK_THROWS_AS(parse_run_config_text("train.eta = 0\n"), ConfigError);
}

TEST_CASE("dp section") {
  auto cfg = parse_run_config_text(
      "task.kind = dnc\ndp.target = h_and_grad\ndp.sigma = 0.5\n");
  REQUIRE(cfg.spec.train.dp.has_value());
  CHECK(cfg.spec.train.dp->target == DpConfig::Target::hidden_and_grad);
  CHECK(cfg.spec.train.dp->sigma == 0.5);

  // sigma zero means no noise is configured at all
  auto off = parse_run_config_text("task.kind = dnc\ndp.sigma = 0\n");
  CHECK(!off.spec.train.dp.has_value());

  CHECK_THROWS_AS(parse_run_config_text("dp.target = loud\n"), ConfigError);
}

TEST_CASE("echo round trips through the parser") {
  const std::string text =
      "task.kind = sc\n"
      "task.n = 40\n"
      "task.d = 15\n"
      "train.seeds = 1,2,3\n"
      "dp.target = h\n"
      "dp.sigma = 0.25\n";
  auto cfg = parse_run_config_text(text);
  auto echoed = parse_run_config_text(echo_config(cfg));
  CHECK(echoed.spec.task == cfg.spec.task);
  CHECK(echoed.spec.csbm.n == cfg.spec.csbm.n);
  CHECK(echoed.spec.csbm.d == cfg.spec.csbm.d);
  CHECK(echoed.spec.split.train == cfg.spec.split.train);
  CHECK(echoed.seeds == cfg.seeds);
  CHECK(echoed.spec.train.dp->sigma == cfg.spec.train.dp->sigma);
  CHECK(echo_config(echoed) == echo_config(cfg));
}
