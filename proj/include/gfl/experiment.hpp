#pragma once

#include <cstdint>
#include <vector>

#include "gfl/fedruntime.hpp"
#include "gfl/metrics.hpp"

namespace gfl::labkit {

// Everything needed to run one seeded experiment end to end.
struct ExperimentSpec {
  graphgen::TaskKind task = graphgen::TaskKind::dnc;
  graphgen::CsbmParams csbm;
  std::size_t per_client = 1;
  graphgen::SplitFractions split;
  fedrt::TrainingConfig train;
};

// One full run on a freshly sampled dataset over a fixed topology.
TrainingHistory run_seeded(const ExperimentSpec& spec,
                           const graphgen::TaskTopology& topology,
                           std::uint64_t seed);

// Repeats run_seeded over the seed list. The topology is built once from the
// first seed; every seed redraws the features (and, for supervised tasks, the
// labels). 95% CI = 1.96 * s / sqrt(n) with the sample standard deviation.
ExperimentSummary repeat_experiment(const ExperimentSpec& spec,
                                    const std::vector<std::uint64_t>& seeds,
                                    unsigned threads = 1);

}  // namespace gfl::labkit
