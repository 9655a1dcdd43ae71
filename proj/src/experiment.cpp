#include "gfl/experiment.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace gfl::labkit {

TrainingHistory run_seeded(const ExperimentSpec& spec,
                           const graphgen::TaskTopology& topology,
                           std::uint64_t seed) {
  auto feat_rng = RandomStream::from(seed, stream_tag::features);
  graphgen::ClientDataset data =
      graphgen::sample_dataset(topology, spec.csbm, spec.per_client, feat_rng);
  fedrt::TrainingConfig cfg = spec.train;
  cfg.seed = seed;
  if (cfg.baseline == fedrt::BaselineKind::none) {
    return fedrt::run_training(cfg, topology.graph, data);
  }
  return fedrt::run_baseline(cfg, data);
}

ExperimentSummary repeat_experiment(const ExperimentSpec& spec,
                                    const std::vector<std::uint64_t>& seeds,
                                    unsigned threads) {
  if (seeds.empty()) {
    throw std::invalid_argument("repeat_experiment: no seeds");
  }
  auto topo_rng = RandomStream::from(seeds.front(), stream_tag::topology);
  graphgen::TaskTopology topology =
      graphgen::build_topology(spec.task, spec.csbm, spec.split, topo_rng);

  std::vector<double> acc(seeds.size(), 0.0);
  if (threads <= 1 || seeds.size() == 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      acc[i] = run_seeded(spec, topology, seeds[i]).final_test_accuracy;
    }
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= seeds.size()) return;
        acc[i] = run_seeded(spec, topology, seeds[i]).final_test_accuracy;
      }
    };
    std::vector<std::thread> pool;
    const unsigned count =
        std::min<unsigned>(threads, static_cast<unsigned>(seeds.size()));
    pool.reserve(count);
    for (unsigned t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  ExperimentSummary summary = summarize(seeds, acc);
  summary.config_echo = spec.train.echo;
  if (spec.train.baseline != fedrt::BaselineKind::local_mlps &&
      topology.graph.is_connected()) {
    summary.connectivity = graphgen::connectivity_index(topology.graph);
  }
  return summary;
}

}  // namespace gfl::labkit
