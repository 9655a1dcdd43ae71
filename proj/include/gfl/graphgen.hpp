#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gfl/numkit.hpp"
#include "gfl/rng.hpp"

namespace gfl::graphgen {

using numkit::DenseMatrix;

// Undirected simple graph; each edge stored once with u < v.
struct Graph {
  std::size_t n = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;

  Graph() = default;
  Graph(std::size_t n, std::vector<std::pair<std::uint32_t, std::uint32_t>> e);

  std::vector<std::vector<std::uint32_t>> adjacency_lists() const;
  std::vector<std::size_t> degrees() const;
  DenseMatrix adjacency_matrix() const;
  bool is_connected() const;

  // Induced subgraph on `nodes`; vertex i of the result is nodes[i].
  Graph induced_subgraph(const std::vector<std::uint32_t>& nodes) const;
};

// L = D - A
DenseMatrix laplacian(const Graph& g);

struct PropagationMatrix {
  DenseMatrix matrix;  // n x n, symmetric
  double alpha = 0.0;
  std::size_t steps = 1;

  double self_weight(std::size_t k) const { return matrix.at(k, k); }
};

// A_tilde = sum_{i=0}^{M} c_i * S^i with S = Dhat^{-1/2} Ahat Dhat^{-1/2}
// (self-loop adjacency), c_i = (1-alpha)*alpha^i for i < M and c_M = alpha^M.
PropagationMatrix propagation_matrix(const Graph& g, double alpha,
                                     std::size_t steps);

// lambda_max(B_N L^dagger) computed as the largest eigenvalue of the
// symmetric matrix (L^{1/2})^dagger B_N (L^{1/2})^dagger,
// B_N = (1/N) I - (1/N^2) 11^T. Requires a connected graph.
double connectivity_index(const Graph& g);

struct CsbmParams {
  std::size_t n = 0;       // node count
  double d = 0.0;          // average degree
  double lambda = 0.0;     // degree separation
  double mu = 0.0;         // mean separation
  std::size_t p = 0;       // feature dimension

  double within_probability() const { return (d + lambda * std::sqrt(d)) / n; }
  double cross_probability() const { return (d - lambda * std::sqrt(d)) / n; }
  void validate() const;
};

// (2/pi) * arctan(lambda * sqrt(N/p) / mu)
double phi_index(const CsbmParams& params);

// Edge sampler: pair (i, j) joined with within_probability when labels agree
// and cross_probability otherwise.
Graph csbm_graph(const CsbmParams& params, const std::vector<int>& labels,
                 RandomStream& rng);

enum class TaskKind { dnc, snc, sc };

enum class Split : std::uint8_t { train = 0, valid = 1, test = 2 };

enum class SplitGranularity { per_client, per_row };

struct SplitFractions {
  double train = 0.1;
  double valid = 0.1;
  double test = 0.8;
};

// Per-client data, stored stacked for fast whole-dataset passes.
// Rows of client k are [row_offset[k], row_offset[k+1]).
struct ClientDataset {
  std::size_t feature_dim = 0;
  std::size_t num_classes = 0;
  SplitGranularity granularity = SplitGranularity::per_client;

  DenseMatrix features;             // total_rows x p
  DenseMatrix labels;               // total_rows x c, one-hot
  std::vector<std::size_t> row_offset;  // size n+1
  std::vector<Split> client_split;  // size n
  std::vector<Split> row_split;     // size total_rows (per_row granularity)
  std::vector<bool> labeled;        // size n

  std::size_t num_clients() const { return client_split.size(); }
  std::size_t rows_of(std::size_t k) const {
    return row_offset[k + 1] - row_offset[k];
  }
  std::size_t total_rows() const { return row_offset.back(); }
  void validate() const;
};

// Topology part of a task: fixed across repeated samplings of one experiment.
struct TaskTopology {
  TaskKind task;
  Graph graph;
  std::vector<int> node_sign;        // +1/-1 label (DNC/SNC) or tag (SC)
  std::vector<Split> client_split;   // per-client split (per-row tasks: all train)
  SplitFractions split;              // row-level fractions for per-row tasks
};

TaskTopology build_topology(TaskKind task, const CsbmParams& params,
                            const SplitFractions& split, RandomStream& rng);

// Feature (and, for SC, label) sampling on a fixed topology. The shared
// direction u ~ N(0, I_p / p) is drawn once per call.
ClientDataset sample_dataset(const TaskTopology& topo, const CsbmParams& params,
                             std::size_t per_client, RandomStream& rng);

std::pair<Graph, ClientDataset> generate_task(TaskKind task,
                                              const CsbmParams& params,
                                              std::size_t per_client,
                                              const SplitFractions& split,
                                              std::uint64_t seed);

// --- plain-text file formats ---------------------------------------------
// Edge list: whitespace-separated id pairs, one per line, '#' comments.
// Features/labels: comma-separated decimal text, row index = node id.

std::pair<Graph, ClientDataset> load_graph_files(const std::string& edge_path,
                                                 const std::string& feature_path,
                                                 const std::string& label_path);

void write_graph_files(const std::string& dir, const Graph& g,
                       const ClientDataset& ds);

// Applies a split file written by write_graph_files to a loaded dataset.
void load_split_file(const std::string& path, ClientDataset& ds);

// --- subCora-style split over a loaded citation graph ---------------------

struct SubgraphSplit {
  std::vector<std::uint32_t> nodes;  // 300 selected nodes, original ids
  std::vector<std::uint32_t> train;
  std::vector<std::uint32_t> valid;
  std::vector<std::uint32_t> test;
};

// One attempt of the subgraph-split procedure: samples 800 nodes, looks for a
// connected component usable as a training set (size in [30,50], all classes
// present, class-count std <= 2.5), picks an equal-size validation set from
// nodes reachable within BFS depth 2, and pads the subgraph to 300 nodes.
// Returns nullopt when the attempt yields no qualifying component ("seed
// rejected"); the caller retries with its next seed.
std::optional<SubgraphSplit> subcora_split(const Graph& g,
                                           const std::vector<int>& class_ids,
                                           RandomStream& rng);

}  // namespace gfl::graphgen
