#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gfl/codec.hpp"
#include "gfl/encoder.hpp"
#include "gfl/graphgen.hpp"
#include "gfl/metrics.hpp"
#include "gfl/transport.hpp"

namespace gfl::fedrt {

struct DpConfig {
  enum class Target { hidden, hidden_and_grad };
  Target target = Target::hidden;
  double sigma = 0.0;
};

enum class BaselineKind { none, fedmlp, local_mlps };

struct TrainingConfig {
  double eta = 0.1;             // learning rate
  std::uint64_t total_updates = 0;  // T
  std::uint64_t local_updates = 1;  // I, per communication round
  std::uint64_t batch_size = 1;
  double alpha = 0.1;           // propagation damping
  std::uint64_t steps = 10;     // M
  std::uint64_t hidden = 64;
  graphgen::TaskKind task = graphgen::TaskKind::dnc;
  std::optional<DpConfig> dp;
  BaselineKind baseline = BaselineKind::none;
  // FedAvg scope: over the participating (labeled) clients only, or over all
  // clients. Unlabeled clients hold the last broadcast, so averaging over
  // everyone shrinks each round's aggregate step by the labeled fraction.
  bool avg_all_clients = false;
  std::uint64_t seed = 1;
  std::string echo;             // resolved config text, copied into histories

  void validate() const;
};

struct ClientState {
  std::uint32_t id = 0;
  bool labeled = false;
  encoder::ModelParams params;
  encoder::AggregatedContext ctx;
  std::uint32_t ctx_round = 0;
  std::vector<std::uint32_t> epoch_order;  // shuffled train-row ids
  std::size_t cursor = 0;
  RandomStream batch_rng{0};
  RandomStream noise_rng{0};
};

// Mean of the per-row forward values and Jacobians of a client's whole
// shard, evaluated at the broadcast model (the j != k compensation branch).
encoder::HiddenPacket client_hidden_estimate(const graphgen::ClientDataset& data,
                                             std::size_t client,
                                             const encoder::ModelParams& w_bar);

// C_k = sum_{j != k} A_kj h_j and its Jacobian, for every client. Each
// packet's h must be sized; an empty slot names the missing client.
std::vector<encoder::AggregatedContext> server_aggregate_hidden(
    const graphgen::PropagationMatrix& a_tilde,
    const std::vector<encoder::HiddenPacket>& packets);

struct RoundObserver {
  std::function<void(std::uint32_t client, std::uint64_t step,
                     const encoder::AggregatedContext& ctx)>
      on_local_step;
};

struct SimState {
  const graphgen::Graph* graph = nullptr;
  const graphgen::ClientDataset* data = nullptr;
  graphgen::PropagationMatrix prop;
  TrainingConfig cfg;
  std::vector<ClientState> clients;
  std::uint64_t updates_done = 0;
  std::uint32_t round = 0;
};

SimState make_state(const TrainingConfig& cfg, const graphgen::Graph& graph,
                    const graphgen::ClientDataset& data);

// One communication round: model upload, FedAvg broadcast, hidden upload
// (with optional DP noise), context broadcast, then I local SGD steps on
// every labeled client. Unlabeled clients stop after the broadcasts.
void run_round(SimState& state, Transport& transport,
               const RoundObserver* observer = nullptr);

// ceil(T/I) rounds totaling T updates; per-round train/valid metrics; the
// snapshot with the lowest validation loss decides the final test accuracy.
labkit::TrainingHistory run_training(const TrainingConfig& cfg,
                                     const graphgen::Graph& graph,
                                     const graphgen::ClientDataset& data,
                                     Transport* transport = nullptr,
                                     const RoundObserver* observer = nullptr);

// fedmlp: the same protocol without hidden sharing (prediction Softmax(h)).
// local_mlps: independent per-client SGD, no communication, metrics averaged
// across clients.
labkit::TrainingHistory run_baseline(const TrainingConfig& cfg,
                                     const graphgen::ClientDataset& data,
                                     Transport* transport = nullptr);

}  // namespace gfl::fedrt
