#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gfl/numkit.hpp"
#include "gfl/rng.hpp"

namespace gfl::encoder {

using numkit::DenseMatrix;

// Two dense layers, no bias. Flat view: layer1 row-major, then layer2
// row-major; total length P = p*hidden + hidden*c.
struct ModelParams {
  DenseMatrix layer1;  // p x hidden
  DenseMatrix layer2;  // hidden x c

  std::size_t input_dim() const { return layer1.rows; }
  std::size_t hidden_dim() const { return layer1.cols; }
  std::size_t output_dim() const { return layer2.cols; }
  std::size_t flat_size() const {
    return layer1.data.size() + layer2.data.size();
  }

  std::vector<double> to_flat() const;
  static ModelParams from_flat(std::span<const double> flat, std::size_t p,
                               std::size_t hidden, std::size_t c);

  void add_scaled_flat(std::span<const double> flat, double s);
  double max_abs_diff(const ModelParams& o) const;

  static ModelParams zeros(std::size_t p, std::size_t hidden, std::size_t c);
  // Uniform(-sqrt(6/(fan_in+fan_out)), +...) per layer.
  static ModelParams glorot(std::size_t p, std::size_t hidden, std::size_t c,
                            RandomStream& rng);
};

// A client's uploaded pair: representation h in R^c and its Jacobian
// d h / d W, stored dense (c x P).
struct HiddenPacket {
  std::vector<double> h;
  DenseMatrix jac;
};

// Neighbor-aggregated context C_k and its Jacobian; linear in the
// contributing packets.
struct AggregatedContext {
  std::vector<double> c_vec;
  DenseMatrix c_jac;

  static AggregatedContext zeros(std::size_t c, std::size_t flat_size) {
    return {std::vector<double>(c, 0.0), DenseMatrix(c, flat_size)};
  }
};

// h = L2^T ReLU(L1^T x)
std::vector<double> mlp_forward(std::span<const double> x,
                                const ModelParams& w);

// Explicit d h / d W at x; ReLU subgradient at exactly 0 is 0.
HiddenPacket mlp_jacobian(std::span<const double> x, const ModelParams& w);

// Batched forward over stacked rows.
struct ForwardPass {
  DenseMatrix relu;     // n x hidden, post-activation
  DenseMatrix outputs;  // n x c
};
ForwardPass forward_rows(const DenseMatrix& xs, const ModelParams& w);

// Arithmetic mean of per-row forward values and Jacobians; equals the mean
// of mlp_jacobian over the rows.
HiddenPacket mean_hidden_packet(const DenseMatrix& xs, const ModelParams& w);

// Same over a contiguous row block [begin, begin+count) of a stacked matrix.
HiddenPacket mean_hidden_packet_rows(const DenseMatrix& stacked,
                                     std::size_t begin, std::size_t count,
                                     const ModelParams& w);

// One packet per row block of a stacked dataset; a single activation product
// covers every block.
std::vector<HiddenPacket> mean_hidden_packets(
    const DenseMatrix& stacked, const std::vector<std::size_t>& row_offset,
    const ModelParams& w);

// Softmax(a_kk * h + C_k)
std::vector<double> predict_local(std::span<const double> h,
                                  const AggregatedContext& ctx, double a_kk);

// Batch mean of (yhat_s - y_s)^T (a_kk * jac_s + ctx.c_jac) with h_s, jac_s
// recomputed at w and the context held fixed. -g is a descent direction for
// the cross-entropy of the local prediction.
std::vector<double> local_gradient(const DenseMatrix& batch_x,
                                   const DenseMatrix& batch_y,
                                   const ModelParams& w,
                                   const AggregatedContext& ctx, double a_kk);

// Elementwise mean, summed in client-index order.
ModelParams fedavg(const std::vector<ModelParams>& params);

// v += sigma * eps with standard normal eps per entry; sigma = 0 leaves v
// untouched and draws nothing.
void gaussian_perturb(std::span<double> v, double sigma, RandomStream& rng);

// Flat little-endian doubles preceded by (p, hidden, c) as 32-bit unsigned.
std::vector<std::uint8_t> serialize_params(const ModelParams& w);
ModelParams deserialize_params(std::span<const std::uint8_t> bytes);

}  // namespace gfl::encoder
