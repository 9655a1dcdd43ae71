#pragma once

// Independent oracles for gradient, spectral, and protocol checks. Everything
// here recomputes results from first principles with plain loops; nothing
// reuses the library's gradient or aggregation code paths.

#include <cstdint>
#include <vector>

#include "gfl/encoder.hpp"
#include "gfl/graphgen.hpp"

namespace oracles {

using gfl::encoder::AggregatedContext;
using gfl::encoder::ModelParams;
using gfl::graphgen::Graph;
using gfl::numkit::DenseMatrix;

// Loss of one client under a context rebuilt at the evaluation point:
//   L(W) = mean_s CE(y_s, softmax(a_kk * h(x_s; W) + sum_j w_j * hbar_j(W)))
// where hbar_j is the mean hidden value of neighbor j's rows.
struct FrozenRoundLoss {
  const DenseMatrix* batch_x;
  const DenseMatrix* batch_y;
  double a_kk;
  std::vector<const DenseMatrix*> neighbor_rows;  // feature rows per neighbor
  std::vector<double> neighbor_weight;            // A_tilde row, j != k

  double value(const ModelParams& w) const;

  // context (c_vec, c_jac) of the neighbor sum evaluated at w, formed from
  // per-row forward/jacobian recomputation with plain loops
  AggregatedContext context_at(const ModelParams& w) const;

  // central finite differences of value() over the flat parameter vector
  std::vector<double> fd_gradient(const ModelParams& w, double step) const;

  // true when some preactivation of some involved row is within `margin`
  // of the ReLU kink
  bool near_kink(const ModelParams& w, double margin) const;
};

// Central finite differences of the network output h(x; W): rows = outputs,
// cols = flat parameters.
DenseMatrix fd_mlp_jacobian(const std::vector<double>& x, const ModelParams& w,
                            double step);

bool mlp_near_kink(const std::vector<double>& x, const ModelParams& w,
                   double margin);

// Full-batch gradient descent on the mean labeled loss of the propagation
// model: F(W) = (1/|L|) sum_{k in L} CE(y_k, softmax((A_tilde H(W))_k)).
// One feature row per client.
class CentralizedPropagationGd {
 public:
  CentralizedPropagationGd(DenseMatrix a_tilde, const DenseMatrix& features,
                           const DenseMatrix& labels,
                           std::vector<bool> labeled);

  void step(ModelParams& w, double eta) const;

 private:
  DenseMatrix a_tilde_;
  const DenseMatrix& features_;
  const DenseMatrix& labels_;
  std::vector<bool> labeled_;
};

// Full-batch gradient descent on the pooled per-client MLP loss
// F(W) = (1/|L|) sum_{k in L} (1/n_k) sum_s CE(y_{k,s}, softmax(h(x_{k,s}))).
class CentralizedMlpGd {
 public:
  CentralizedMlpGd(const gfl::graphgen::ClientDataset* data);
  void step(ModelParams& w, double eta) const;

 private:
  const gfl::graphgen::ClientDataset* data_;
};

// Random connected graphs for the fuzz suites: trees, Erdos-Renyi samples
// conditioned on connectivity, and complete graphs.
Graph random_connected_graph(std::size_t n, gfl::RandomStream& rng);

}  // namespace oracles
