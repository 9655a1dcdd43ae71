#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gfl/encoder.hpp"
#include "gfl/graphgen.hpp"

namespace gfl::labkit {

struct RoundRecord {
  std::uint64_t update = 0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
  double train_acc = 0.0;
  double valid_acc = 0.0;
};

struct TrainingHistory {
  std::vector<RoundRecord> records;
  encoder::ModelParams best_params;
  double best_valid_loss = std::numeric_limits<double>::infinity();
  std::uint64_t best_update = 0;
  double final_test_accuracy = 0.0;
  std::string config_echo;
};

struct Metrics {
  double loss = 0.0;
  double accuracy = 0.0;
};

// Oracle evaluation pass: recomputes every client's hidden mean at `params`,
// forms Z = A_tilde * H, and scores the requested split. Node-level splits
// score one prediction per client; row-level splits score
// Softmax(A_kk h(x) + C_k) per row. Argmax ties break toward the lower class.
Metrics evaluate(const encoder::ModelParams& params,
                 const graphgen::PropagationMatrix& prop,
                 const graphgen::ClientDataset& data, graphgen::Split split);

// Forward work shared between several split evaluations of one model.
struct EvalPass {
  numkit::DenseMatrix outputs;  // per-row hidden values, total_rows x c
  numkit::DenseMatrix h_mean;   // per-client means, n x c
  numkit::DenseMatrix z;        // A_tilde * h_mean
};
EvalPass make_eval_pass(const encoder::ModelParams& params,
                        const graphgen::PropagationMatrix& prop,
                        const graphgen::ClientDataset& data);
Metrics evaluate(const EvalPass& pass, const graphgen::PropagationMatrix& prop,
                 const graphgen::ClientDataset& data, graphgen::Split split);

struct HeterogeneityReport {
  double kappa_sq = 0.0;  // sum over edges of ||g_i - g_j||^2
  double lhs = 0.0;       // (1/N) sum_k ||g_k - mean||^2, the B_N quadratic form
  double bound = 0.0;     // kappa_sq * lambda_max(B_N L^dagger)
  bool within_bound = false;
};

// Gradient-dispersion diagnostic over the (connected) graph of participating
// clients; lhs <= bound holds for every input, with equality on K2.
HeterogeneityReport empirical_heterogeneity(
    const std::vector<std::vector<double>>& per_client_gradients,
    const graphgen::Graph& g);

struct ExperimentSummary {
  std::vector<std::uint64_t> seeds;
  std::vector<double> test_acc;  // aligned with seeds
  double mean = 0.0;
  std::optional<double> ci95_half_width;  // absent with a single seed
  std::optional<double> connectivity;     // lambda_max(B_N L^dagger), if defined
  std::string config_echo;
};

// Mean (exact fixed-order sum) and 1.96 * s / sqrt(n) half-width; the CI is
// absent with one sample and an empty sample set is an error.
ExperimentSummary summarize(const std::vector<std::uint64_t>& seeds,
                            const std::vector<double>& test_acc);

void write_metrics(const TrainingHistory& history, const std::string& path);
void write_metrics(const ExperimentSummary& summary, const std::string& path);

// Round-trips of the emitted CSVs.
std::vector<RoundRecord> read_history_csv(const std::string& path);
ExperimentSummary read_summary_csv(const std::string& path);

}  // namespace gfl::labkit
