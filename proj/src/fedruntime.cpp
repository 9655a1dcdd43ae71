#include "gfl/fedruntime.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <stdexcept>

namespace gfl::fedrt {

using encoder::AggregatedContext;
using encoder::HiddenPacket;
using encoder::ModelParams;
using graphgen::Split;
using graphgen::SplitGranularity;
using numkit::DenseMatrix;

void TrainingConfig::validate() const {
  if (local_updates < 1) throw std::invalid_argument("config: I must be >= 1");
  if (eta <= 0.0) throw std::invalid_argument("config: eta must be positive");
  if (batch_size < 1) throw std::invalid_argument("config: batch_size >= 1");
  if (alpha < 0.0 || alpha > 1.0) {
    throw std::invalid_argument("config: alpha outside [0,1]");
  }
  if (steps < 1) throw std::invalid_argument("config: M must be >= 1");
  if (hidden < 1) throw std::invalid_argument("config: hidden must be >= 1");
  if (dp && dp->sigma < 0.0) {
    throw std::invalid_argument("config: dp.sigma must be >= 0");
  }
  if (dp && baseline != BaselineKind::none) {
    throw std::invalid_argument("config: dp applies to hidden sharing only");
  }
}

HiddenPacket client_hidden_estimate(const graphgen::ClientDataset& data,
                                    std::size_t client,
                                    const ModelParams& w_bar) {
  const std::size_t count = data.rows_of(client);
  if (count == 0) {
    throw std::invalid_argument("client_hidden_estimate: empty shard");
  }
  return encoder::mean_hidden_packet_rows(data.features,
                                          data.row_offset[client], count, w_bar);
}

namespace {

// Weighted sums of packets for the requested rows of A_tilde, diagonal
// excluded. Packets are stacked as [h | jac] rows so the whole aggregation
// is one matrix product.
std::vector<AggregatedContext> aggregate_rows(
    const graphgen::PropagationMatrix& a_tilde,
    const std::vector<HiddenPacket>& packets,
    const std::vector<std::uint32_t>& targets) {
  const std::size_t n = packets.size();
  if (a_tilde.matrix.rows != n) {
    throw std::invalid_argument("aggregate: propagation size != packet count");
  }
  std::size_t c = 0, flat = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (packets[j].h.empty()) {
      throw std::runtime_error("missing hidden packet for client " +
                               std::to_string(j));
    }
    if (j == 0) {
      c = packets[j].h.size();
      flat = packets[j].jac.cols;
    } else if (packets[j].h.size() != c || packets[j].jac.cols != flat ||
               packets[j].jac.rows != c) {
      throw std::invalid_argument("aggregate: packet shape mismatch");
    }
  }

  const std::size_t width = c + c * flat;
  DenseMatrix stacked(n, width);
  for (std::size_t j = 0; j < n; ++j) {
    double* row = stacked.data.data() + j * width;
    std::memcpy(row, packets[j].h.data(), c * sizeof(double));
    std::memcpy(row + c, packets[j].jac.data.data(),
                c * flat * sizeof(double));
  }

  DenseMatrix weights(targets.size(), n);
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const std::size_t k = targets[t];
    std::memcpy(weights.data.data() + t * n,
                a_tilde.matrix.data.data() + k * n, n * sizeof(double));
    weights.at(t, k) = 0.0;  // the j = k term stays local
  }
  DenseMatrix mixed = numkit::matmul(weights, stacked);

  std::vector<AggregatedContext> out(targets.size());
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const double* row = mixed.data.data() + t * width;
    out[t].c_vec.assign(row, row + c);
    out[t].c_jac = DenseMatrix(c, flat);
    std::memcpy(out[t].c_jac.data.data(), row + c, c * flat * sizeof(double));
  }
  return out;
}

}  // namespace

std::vector<AggregatedContext> server_aggregate_hidden(
    const graphgen::PropagationMatrix& a_tilde,
    const std::vector<HiddenPacket>& packets) {
  std::vector<std::uint32_t> all(packets.size());
  std::iota(all.begin(), all.end(), 0u);
  return aggregate_rows(a_tilde, packets, all);
}

SimState make_state(const TrainingConfig& cfg, const graphgen::Graph& graph,
                    const graphgen::ClientDataset& data) {
  cfg.validate();
  data.validate();
  if (graph.n != data.num_clients()) {
    throw std::invalid_argument("make_state: graph/dataset size mismatch");
  }

  SimState state;
  state.graph = &graph;
  state.data = &data;
  state.cfg = cfg;
  // fedmlp ignores the client network entirely
  const double alpha = cfg.baseline == BaselineKind::fedmlp ? 0.0 : cfg.alpha;
  state.prop = graphgen::propagation_matrix(graph, alpha, cfg.steps);

  auto init_rng = RandomStream::from(cfg.seed, stream_tag::init);
  ModelParams w0 = ModelParams::glorot(data.feature_dim, cfg.hidden,
                                       data.num_classes, init_rng);
  const std::size_t flat = w0.flat_size();

  state.clients.resize(data.num_clients());
  for (std::size_t k = 0; k < data.num_clients(); ++k) {
    ClientState& cs = state.clients[k];
    cs.id = static_cast<std::uint32_t>(k);
    cs.labeled = data.labeled[k];
    cs.params = w0;
    cs.ctx = AggregatedContext::zeros(data.num_classes, flat);
    cs.batch_rng = RandomStream::from(cfg.seed, stream_tag::batch, k);
    cs.noise_rng = RandomStream::from(cfg.seed, stream_tag::noise, k);
    if (!cs.labeled) continue;
    for (std::size_t r = data.row_offset[k]; r < data.row_offset[k + 1]; ++r) {
      if (data.granularity == SplitGranularity::per_client ||
          data.row_split[r] == Split::train) {
        cs.epoch_order.push_back(static_cast<std::uint32_t>(r));
      }
    }
    if (cs.epoch_order.empty()) {
      throw std::invalid_argument("make_state: labeled client has no train rows");
    }
    cs.batch_rng.shuffle(cs.epoch_order);
  }
  return state;
}

namespace {

std::vector<std::uint32_t> labeled_ids(const SimState& state) {
  std::vector<std::uint32_t> ids;
  for (const ClientState& cs : state.clients) {
    if (cs.labeled) ids.push_back(cs.id);
  }
  return ids;
}

// without-replacement batches, reshuffled at every epoch boundary
std::vector<std::uint32_t> next_batch(ClientState& cs, std::uint64_t batch) {
  if (cs.cursor >= cs.epoch_order.size()) {
    cs.batch_rng.shuffle(cs.epoch_order);
    cs.cursor = 0;
  }
  const std::size_t take =
      std::min<std::size_t>(batch, cs.epoch_order.size() - cs.cursor);
  std::vector<std::uint32_t> rows(cs.epoch_order.begin() + cs.cursor,
                                  cs.epoch_order.begin() + cs.cursor + take);
  cs.cursor += take;
  return rows;
}

ModelParams average_labeled(const SimState& state) {
  std::vector<ModelParams> params;
  for (const ClientState& cs : state.clients) {
    if (cs.labeled) params.push_back(cs.params);
  }
  return encoder::fedavg(params);
}

}  // namespace

void run_round(SimState& state, Transport& transport,
               const RoundObserver* observer) {
  const TrainingConfig& cfg = state.cfg;
  const graphgen::ClientDataset& data = *state.data;
  const std::size_t n = state.clients.size();
  const bool hidden_sharing = cfg.baseline == BaselineKind::none;
  const std::uint32_t round = state.round;
  const std::uint64_t todo =
      std::min<std::uint64_t>(cfg.local_updates,
                              cfg.total_updates - state.updates_done);
  auto ids = labeled_ids(state);

  // (1) participating clients upload their latest models
  std::vector<std::uint32_t> uploaders = ids;
  if (cfg.avg_all_clients) {
    uploaders.resize(n);
    std::iota(uploaders.begin(), uploaders.end(), 0u);
  }
  std::vector<RoundMessage> uploads;
  uploads.reserve(uploaders.size());
  for (std::uint32_t k : uploaders) {
    uploads.push_back({MessageKind::model_upload, round, k,
                       state.clients[k].params});
  }
  auto received = transport.collect(std::move(uploads));

  // (2) FedAvg over the participating clients, broadcast to everyone
  std::vector<ModelParams> collected;
  collected.reserve(received.size());
  for (RoundMessage& m : received) {
    collected.push_back(std::move(std::get<ModelParams>(m.payload)));
  }
  ModelParams w_bar = encoder::fedavg(collected);

  std::vector<std::pair<std::uint32_t, RoundMessage>> downloads;
  downloads.reserve(n);
  for (std::uint32_t k = 0; k < n; ++k) {
    downloads.push_back(
        {k, {MessageKind::model_broadcast, round, kBroadcastId, w_bar}});
  }
  auto broadcast = transport.deliver(std::move(downloads));
  for (std::uint32_t k = 0; k < n; ++k) {
    state.clients[k].params = std::move(std::get<ModelParams>(broadcast[k].payload));
  }

  if (hidden_sharing) {
    // (3) every client uploads its hidden estimate computed at w_bar; the
    // estimates share one activation product since everyone holds w_bar
    std::vector<HiddenPacket> fresh = encoder::mean_hidden_packets(
        data.features, data.row_offset, state.clients.front().params);
    std::vector<RoundMessage> hidden;
    hidden.reserve(n);
    for (std::uint32_t k = 0; k < n; ++k) {
      HiddenPacket pkt = std::move(fresh[k]);
      if (cfg.dp && cfg.dp->sigma > 0.0) {
        ClientState& cs = state.clients[k];
        encoder::gaussian_perturb(pkt.h, cfg.dp->sigma, cs.noise_rng);
        if (cfg.dp->target == DpConfig::Target::hidden_and_grad) {
          for (std::size_t i = 0; i < pkt.jac.rows; ++i) {
            encoder::gaussian_perturb(pkt.jac.row(i), cfg.dp->sigma,
                                      cs.noise_rng);
          }
        }
      }
      hidden.push_back({MessageKind::hidden_upload, round, k, std::move(pkt)});
    }
    auto arrived = transport.collect(std::move(hidden));
    std::vector<HiddenPacket> packets(n);
    for (RoundMessage& m : arrived) {
      packets[m.client_id] = std::move(std::get<HiddenPacket>(m.payload));
    }

    // (4) aggregated contexts go back to the clients that run local updates
    auto contexts = aggregate_rows(state.prop, packets, ids);
    std::vector<std::pair<std::uint32_t, RoundMessage>> ctx_down;
    ctx_down.reserve(ids.size());
    for (std::size_t t = 0; t < ids.size(); ++t) {
      ctx_down.push_back({ids[t],
                          {MessageKind::agg_broadcast, round, kBroadcastId,
                           std::move(contexts[t])}});
    }
    auto ctx_msgs = transport.deliver(std::move(ctx_down));
    for (std::size_t t = 0; t < ids.size(); ++t) {
      ClientState& cs = state.clients[ids[t]];
      cs.ctx = std::move(std::get<AggregatedContext>(ctx_msgs[t].payload));
      cs.ctx_round = round;
    }
  }

  // (5) I local SGD steps per labeled client; the context stays frozen
  const std::size_t p = data.feature_dim;
  const std::size_t c = data.num_classes;
  for (std::uint32_t k : ids) {
    ClientState& cs = state.clients[k];
    const double a_kk = state.prop.matrix.at(k, k);
    for (std::uint64_t step = 0; step < todo; ++step) {
      auto rows = next_batch(cs, cfg.batch_size);
      DenseMatrix bx(rows.size(), p);
      DenseMatrix by(rows.size(), c);
      for (std::size_t s = 0; s < rows.size(); ++s) {
        std::memcpy(bx.data.data() + s * p,
                    data.features.data.data() + rows[s] * p, p * sizeof(double));
        std::memcpy(by.data.data() + s * c,
                    data.labels.data.data() + rows[s] * c, c * sizeof(double));
      }
      if (observer && observer->on_local_step) {
        observer->on_local_step(k, step, cs.ctx);
      }
      auto g = encoder::local_gradient(bx, by, cs.params, cs.ctx, a_kk);
      cs.params.add_scaled_flat(g, -cfg.eta);
    }
  }

  state.updates_done += todo;
  state.round += 1;
}

labkit::TrainingHistory run_training(const TrainingConfig& cfg,
                                     const graphgen::Graph& graph,
                                     const graphgen::ClientDataset& data,
                                     Transport* transport,
                                     const RoundObserver* observer) {
  if (cfg.baseline == BaselineKind::local_mlps) {
    throw std::invalid_argument("run_training: use run_baseline for local_mlps");
  }
  SimState state = make_state(cfg, graph, data);
  InprocTransport fallback;
  Transport& chan = transport ? *transport : fallback;

  labkit::TrainingHistory history;
  history.config_echo = cfg.echo;
  history.best_params = state.clients.front().params;

  while (state.updates_done < cfg.total_updates) {
    run_round(state, chan, observer);
    ModelParams w_eval = average_labeled(state);
    labkit::EvalPass pass = labkit::make_eval_pass(w_eval, state.prop, data);
    labkit::Metrics train = labkit::evaluate(pass, state.prop, data, Split::train);
    labkit::Metrics valid = labkit::evaluate(pass, state.prop, data, Split::valid);
    history.records.push_back({state.updates_done, train.loss, valid.loss,
                               train.accuracy, valid.accuracy});
    if (valid.loss < history.best_valid_loss) {
      history.best_valid_loss = valid.loss;
      history.best_update = state.updates_done;
      history.best_params = std::move(w_eval);
    }
  }

  history.final_test_accuracy =
      labkit::evaluate(history.best_params, state.prop, data, Split::test)
          .accuracy;
  return history;
}

namespace {

labkit::TrainingHistory run_local_mlps(const TrainingConfig& cfg,
                                       const graphgen::ClientDataset& data) {
  if (data.granularity != SplitGranularity::per_row) {
    throw std::invalid_argument("local_mlps: per-row splits required");
  }
  const std::size_t n = data.num_clients();
  const std::size_t p = data.feature_dim;
  const std::size_t c = data.num_classes;

  auto init_rng = RandomStream::from(cfg.seed, stream_tag::init);
  ModelParams w0 = ModelParams::glorot(p, cfg.hidden, c, init_rng);

  struct Local {
    ModelParams params;
    ModelParams best;
    double best_valid = std::numeric_limits<double>::infinity();
    std::vector<std::uint32_t> order;
    std::size_t cursor = 0;
    RandomStream rng{0};
  };
  std::vector<Local> locals(n);
  for (std::size_t k = 0; k < n; ++k) {
    locals[k].params = w0;
    locals[k].best = w0;
    locals[k].rng = RandomStream::from(cfg.seed, stream_tag::batch, k);
    for (std::size_t r = data.row_offset[k]; r < data.row_offset[k + 1]; ++r) {
      if (data.row_split[r] == Split::train) {
        locals[k].order.push_back(static_cast<std::uint32_t>(r));
      }
    }
    if (locals[k].order.empty()) {
      throw std::invalid_argument("local_mlps: client has no train rows");
    }
    locals[k].rng.shuffle(locals[k].order);
  }

  const AggregatedContext zero_ctx =
      AggregatedContext::zeros(c, w0.flat_size());

  // mean cross-entropy and accuracy of one client's rows under Softmax(h)
  auto score = [&](const ModelParams& w, std::size_t k, Split split) {
    double loss = 0.0;
    std::size_t correct = 0, total = 0;
    for (std::size_t r = data.row_offset[k]; r < data.row_offset[k + 1]; ++r) {
      if (data.row_split[r] != split) continue;
      auto h = encoder::mlp_forward(data.features.row(r), w);
      numkit::softmax_inplace(h);
      auto y = data.labels.row(r);
      loss += numkit::cross_entropy(y, h);
      std::size_t ph = 0, py = 0;
      for (std::size_t i = 1; i < c; ++i) {
        if (h[i] > h[ph]) ph = i;
        if (y[i] > y[py]) py = i;
      }
      correct += ph == py ? 1 : 0;
      ++total;
    }
    return labkit::Metrics{total ? loss / static_cast<double>(total) : 0.0,
                           total ? static_cast<double>(correct) /
                                       static_cast<double>(total)
                                 : 0.0};
  };

  labkit::TrainingHistory history;
  history.config_echo = cfg.echo;
  history.best_params = w0;

  std::uint64_t done = 0;
  while (done < cfg.total_updates) {
    const std::uint64_t todo =
        std::min<std::uint64_t>(cfg.local_updates, cfg.total_updates - done);
    for (std::size_t k = 0; k < n; ++k) {
      Local& lc = locals[k];
      for (std::uint64_t step = 0; step < todo; ++step) {
        if (lc.cursor >= lc.order.size()) {
          lc.rng.shuffle(lc.order);
          lc.cursor = 0;
        }
        const std::size_t take = std::min<std::size_t>(
            cfg.batch_size, lc.order.size() - lc.cursor);
        DenseMatrix bx(take, p);
        DenseMatrix by(take, c);
        for (std::size_t s = 0; s < take; ++s) {
          const std::uint32_t r = lc.order[lc.cursor + s];
          std::memcpy(bx.data.data() + s * p,
                      data.features.data.data() + r * p, p * sizeof(double));
          std::memcpy(by.data.data() + s * c, data.labels.data.data() + r * c,
                      c * sizeof(double));
        }
        lc.cursor += take;
        auto g = encoder::local_gradient(bx, by, lc.params, zero_ctx, 1.0);
        lc.params.add_scaled_flat(g, -cfg.eta);
      }
    }
    done += todo;

    double train_loss = 0.0, valid_loss = 0.0, train_acc = 0.0, valid_acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      auto tr = score(locals[k].params, k, Split::train);
      auto va = score(locals[k].params, k, Split::valid);
      train_loss += tr.loss;
      train_acc += tr.accuracy;
      valid_loss += va.loss;
      valid_acc += va.accuracy;
      if (va.loss < locals[k].best_valid) {
        locals[k].best_valid = va.loss;
        locals[k].best = locals[k].params;
      }
    }
    const double inv = 1.0 / static_cast<double>(n);
    history.records.push_back({done, train_loss * inv, valid_loss * inv,
                               train_acc * inv, valid_acc * inv});
    if (valid_loss * inv < history.best_valid_loss) {
      history.best_valid_loss = valid_loss * inv;
      history.best_update = done;
    }
  }

  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    acc += score(locals[k].best, k, Split::test).accuracy;
  }
  history.final_test_accuracy = acc / static_cast<double>(n);
  history.best_params = locals.front().best;
  return history;
}

}  // namespace

labkit::TrainingHistory run_baseline(const TrainingConfig& cfg,
                                     const graphgen::ClientDataset& data,
                                     Transport* transport) {
  switch (cfg.baseline) {
    case BaselineKind::fedmlp: {
      // the protocol runs on an edgeless network; propagation is identity
      graphgen::Graph lone(data.num_clients(), {});
      return run_training(cfg, lone, data, transport);
    }
    case BaselineKind::local_mlps:
      return run_local_mlps(cfg, data);
    default:
      throw std::invalid_argument("run_baseline: baseline not set");
  }
}

}  // namespace gfl::fedrt
