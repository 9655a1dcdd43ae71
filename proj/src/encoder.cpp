#include "gfl/encoder.hpp"

#include <Eigen/Dense>

#include <bit>
#include <cstring>
#include <stdexcept>

namespace gfl::encoder {

namespace {
using EigenRowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const EigenRowMajor>;
using Map = Eigen::Map<EigenRowMajor>;

ConstMap map_of(const DenseMatrix& m) {
  return ConstMap(m.data.data(), m.rows, m.cols);
}
}  // namespace

std::vector<double> ModelParams::to_flat() const {
  std::vector<double> flat;
  flat.reserve(flat_size());
  flat.insert(flat.end(), layer1.data.begin(), layer1.data.end());
  flat.insert(flat.end(), layer2.data.begin(), layer2.data.end());
  return flat;
}

ModelParams ModelParams::from_flat(std::span<const double> flat, std::size_t p,
                                   std::size_t hidden, std::size_t c) {
  if (flat.size() != p * hidden + hidden * c) {
    throw std::invalid_argument("from_flat: length mismatch");
  }
  ModelParams w = zeros(p, hidden, c);
  std::copy(flat.begin(), flat.begin() + p * hidden, w.layer1.data.begin());
  std::copy(flat.begin() + p * hidden, flat.end(), w.layer2.data.begin());
  return w;
}

void ModelParams::add_scaled_flat(std::span<const double> flat, double s) {
  if (flat.size() != flat_size()) {
    throw std::invalid_argument("add_scaled_flat: length mismatch");
  }
  const std::size_t n1 = layer1.data.size();
  for (std::size_t i = 0; i < n1; ++i) layer1.data[i] += s * flat[i];
  for (std::size_t i = 0; i < layer2.data.size(); ++i) {
    layer2.data[i] += s * flat[n1 + i];
  }
}

double ModelParams::max_abs_diff(const ModelParams& o) const {
  return std::max(layer1.max_abs_diff(o.layer1), layer2.max_abs_diff(o.layer2));
}

ModelParams ModelParams::zeros(std::size_t p, std::size_t hidden,
                               std::size_t c) {
  return {DenseMatrix(p, hidden), DenseMatrix(hidden, c)};
}

ModelParams ModelParams::glorot(std::size_t p, std::size_t hidden,
                                std::size_t c, RandomStream& rng) {
  ModelParams w = zeros(p, hidden, c);
  const double lim1 = std::sqrt(6.0 / static_cast<double>(p + hidden));
  for (double& v : w.layer1.data) v = (2.0 * rng.uniform() - 1.0) * lim1;
  const double lim2 = std::sqrt(6.0 / static_cast<double>(hidden + c));
  for (double& v : w.layer2.data) v = (2.0 * rng.uniform() - 1.0) * lim2;
  return w;
}

std::vector<double> mlp_forward(std::span<const double> x,
                                const ModelParams& w) {
  const std::size_t p = w.input_dim(), hid = w.hidden_dim(), c = w.output_dim();
  if (x.size() != p) throw std::invalid_argument("mlp_forward: bad input dim");
  std::vector<double> act(hid, 0.0);
  for (std::size_t q = 0; q < p; ++q) {
    const double xq = x[q];
    const double* row = w.layer1.data.data() + q * hid;
    for (std::size_t j = 0; j < hid; ++j) act[j] += xq * row[j];
  }
  for (double& a : act) a = a > 0.0 ? a : 0.0;
  std::vector<double> h(c, 0.0);
  for (std::size_t j = 0; j < hid; ++j) {
    const double rj = act[j];
    if (rj == 0.0) continue;
    const double* row = w.layer2.data.data() + j * c;
    for (std::size_t i = 0; i < c; ++i) h[i] += rj * row[i];
  }
  return h;
}

HiddenPacket mlp_jacobian(std::span<const double> x, const ModelParams& w) {
  const std::size_t p = w.input_dim(), hid = w.hidden_dim(), c = w.output_dim();
  if (x.size() != p) throw std::invalid_argument("mlp_jacobian: bad input dim");
  const std::size_t flat = w.flat_size();
  const std::size_t w2_base = p * hid;

  std::vector<double> act(hid, 0.0);
  for (std::size_t q = 0; q < p; ++q) {
    const double xq = x[q];
    const double* row = w.layer1.data.data() + q * hid;
    for (std::size_t j = 0; j < hid; ++j) act[j] += xq * row[j];
  }

  HiddenPacket pkt;
  pkt.h.assign(c, 0.0);
  pkt.jac = DenseMatrix(c, flat);
  for (std::size_t j = 0; j < hid; ++j) {
    const double r = act[j] > 0.0 ? act[j] : 0.0;
    const double* l2row = w.layer2.data.data() + j * c;
    for (std::size_t i = 0; i < c; ++i) pkt.h[i] += r * l2row[i];
    for (std::size_t i = 0; i < c; ++i) {
      // dh_i/dW2[j][i] = relu(a_j)
      pkt.jac.at(i, w2_base + j * c + i) = r;
    }
    if (act[j] > 0.0) {
      // dh_i/dW1[q][j] = x_q * L2[j][i]
      for (std::size_t i = 0; i < c; ++i) {
        const double l2 = l2row[i];
        double* jrow = pkt.jac.data.data() + i * flat;
        for (std::size_t q = 0; q < p; ++q) jrow[q * hid + j] = x[q] * l2;
      }
    }
  }
  return pkt;
}

ForwardPass forward_rows(const DenseMatrix& xs, const ModelParams& w) {
  if (xs.cols != w.input_dim()) {
    throw std::invalid_argument("forward_rows: bad input dim");
  }
  ForwardPass fp;
  fp.relu = DenseMatrix(xs.rows, w.hidden_dim());
  Map(fp.relu.data.data(), fp.relu.rows, fp.relu.cols) =
      (map_of(xs) * map_of(w.layer1)).cwiseMax(0.0);
  fp.outputs = DenseMatrix(xs.rows, w.output_dim());
  Map(fp.outputs.data.data(), fp.outputs.rows, fp.outputs.cols) =
      map_of(fp.relu) * map_of(w.layer2);
  return fp;
}

namespace {

// shared tail of the mean-packet construction once the preactivations of the
// shard are known; act points at count x hid rows
HiddenPacket packet_from_act(const DenseMatrix& stacked, std::size_t begin,
                             std::size_t count, const double* act,
                             const ModelParams& w) {
  const std::size_t p = w.input_dim(), hid = w.hidden_dim(), c = w.output_dim();
  const std::size_t flat = w.flat_size();
  const std::size_t w2_base = p * hid;
  const double inv_n = 1.0 / static_cast<double>(count);
  ConstMap xs(stacked.data.data() + begin * p, count, p);

  // mask entries hold 1/n so one product computes the mean
  DenseMatrix mask(count, hid);
  for (std::size_t i = 0; i < mask.data.size(); ++i) {
    mask.data[i] = act[i] > 0.0 ? inv_n : 0.0;
  }

  HiddenPacket pkt;
  pkt.h.assign(c, 0.0);
  pkt.jac = DenseMatrix(c, flat);

  // mean activations and mean outputs
  std::vector<double> rbar(hid, 0.0);
  for (std::size_t s = 0; s < count; ++s) {
    const double* arow = act + s * hid;
    for (std::size_t j = 0; j < hid; ++j) {
      if (arow[j] > 0.0) rbar[j] += arow[j];
    }
  }
  for (double& v : rbar) v *= inv_n;
  for (std::size_t j = 0; j < hid; ++j) {
    const double* l2row = w.layer2.data.data() + j * c;
    for (std::size_t i = 0; i < c; ++i) pkt.h[i] += rbar[j] * l2row[i];
  }

  // mean of the layer-1 Jacobian blocks factorizes through
  // K[q][j] = (1/n) sum_s x[s][q] * 1{a[s][j] > 0}
  DenseMatrix k(p, hid);
  Map(k.data.data(), p, hid) = xs.transpose() * map_of(mask);

  for (std::size_t i = 0; i < c; ++i) {
    double* jrow = pkt.jac.data.data() + i * flat;
    for (std::size_t q = 0; q < p; ++q) {
      const double* krow = k.data.data() + q * hid;
      double* dst = jrow + q * hid;
      for (std::size_t j = 0; j < hid; ++j) {
        dst[j] = krow[j] * w.layer2.at(j, i);
      }
    }
    for (std::size_t j = 0; j < hid; ++j) {
      jrow[w2_base + j * c + i] = rbar[j];
    }
  }
  return pkt;
}

}  // namespace

HiddenPacket mean_hidden_packet(const DenseMatrix& xs, const ModelParams& w) {
  return mean_hidden_packet_rows(xs, 0, xs.rows, w);
}

HiddenPacket mean_hidden_packet_rows(const DenseMatrix& stacked,
                                     std::size_t begin, std::size_t count,
                                     const ModelParams& w) {
  if (count == 0) throw std::invalid_argument("mean_hidden_packet: empty rows");
  if (begin + count > stacked.rows) {
    throw std::invalid_argument("mean_hidden_packet: rows out of range");
  }
  const std::size_t p = w.input_dim(), hid = w.hidden_dim();
  if (stacked.cols != p) {
    throw std::invalid_argument("mean_hidden_packet: bad input dim");
  }
  ConstMap xs(stacked.data.data() + begin * p, count, p);
  DenseMatrix act(count, hid);
  Map(act.data.data(), count, hid) = xs * map_of(w.layer1);
  return packet_from_act(stacked, begin, count, act.data.data(), w);
}

std::vector<HiddenPacket> mean_hidden_packets(
    const DenseMatrix& stacked, const std::vector<std::size_t>& row_offset,
    const ModelParams& w) {
  if (row_offset.empty() || row_offset.back() != stacked.rows) {
    throw std::invalid_argument("mean_hidden_packets: bad offsets");
  }
  const std::size_t hid = w.hidden_dim();
  DenseMatrix act(stacked.rows, hid);
  Map(act.data.data(), stacked.rows, hid) =
      map_of(stacked) * map_of(w.layer1);

  std::vector<HiddenPacket> out(row_offset.size() - 1);
  for (std::size_t k = 0; k + 1 < row_offset.size(); ++k) {
    const std::size_t begin = row_offset[k];
    const std::size_t count = row_offset[k + 1] - begin;
    if (count == 0) {
      throw std::invalid_argument("mean_hidden_packets: empty shard");
    }
    out[k] = packet_from_act(stacked, begin, count,
                             act.data.data() + begin * hid, w);
  }
  return out;
}

std::vector<double> predict_local(std::span<const double> h,
                                  const AggregatedContext& ctx, double a_kk) {
  if (h.size() != ctx.c_vec.size()) {
    throw std::invalid_argument("predict_local: dimension mismatch");
  }
  std::vector<double> z(h.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = a_kk * h[i] + ctx.c_vec[i];
  numkit::softmax_inplace(z);
  return z;
}

std::vector<double> local_gradient(const DenseMatrix& batch_x,
                                   const DenseMatrix& batch_y,
                                   const ModelParams& w,
                                   const AggregatedContext& ctx, double a_kk) {
  const std::size_t b = batch_x.rows;
  if (b == 0) throw std::invalid_argument("local_gradient: empty batch");
  const std::size_t p = w.input_dim(), hid = w.hidden_dim(), c = w.output_dim();
  const std::size_t flat = w.flat_size();
  if (batch_y.rows != b || batch_y.cols != c || batch_x.cols != p ||
      ctx.c_vec.size() != c || ctx.c_jac.rows != c || ctx.c_jac.cols != flat) {
    throw std::invalid_argument("local_gradient: dimension mismatch");
  }

  ForwardPass fp = forward_rows(batch_x, w);

  std::vector<double> g(flat, 0.0);
  double* g1 = g.data();               // p x hid block
  double* g2 = g.data() + p * hid;     // hid x c block
  std::vector<double> dsum(c, 0.0);    // sum over rows of (yhat - y)
  std::vector<double> d(c), e(hid);

  for (std::size_t s = 0; s < b; ++s) {
    const double* h = fp.outputs.data.data() + s * c;
    for (std::size_t i = 0; i < c; ++i) d[i] = a_kk * h[i] + ctx.c_vec[i];
    numkit::softmax_inplace(d);
    const double* y = batch_y.data.data() + s * c;
    for (std::size_t i = 0; i < c; ++i) {
      d[i] -= y[i];
      dsum[i] += d[i];
    }

    const double* r = fp.relu.data.data() + s * hid;
    for (std::size_t j = 0; j < hid; ++j) {
      const double rj = r[j];
      const double* l2row = w.layer2.data.data() + j * c;
      double acc = 0.0;
      for (std::size_t i = 0; i < c; ++i) {
        g2[j * c + i] += rj * d[i];
        acc += l2row[i] * d[i];
      }
      e[j] = rj > 0.0 ? acc : 0.0;
    }
    const double* x = batch_x.data.data() + s * p;
    for (std::size_t q = 0; q < p; ++q) {
      const double xq = x[q];
      if (xq == 0.0) continue;
      double* grow = g1 + q * hid;
      for (std::size_t j = 0; j < hid; ++j) grow[j] += xq * e[j];
    }
  }

  // self term carries the propagation weight; frozen context added once
  const double scale = a_kk / static_cast<double>(b);
  for (double& v : g) v *= scale;
  const double inv_b = 1.0 / static_cast<double>(b);
  for (std::size_t i = 0; i < c; ++i) {
    const double di = dsum[i] * inv_b;
    if (di == 0.0) continue;
    const double* jrow = ctx.c_jac.data.data() + i * flat;
    for (std::size_t q = 0; q < flat; ++q) g[q] += di * jrow[q];
  }
  return g;
}

ModelParams fedavg(const std::vector<ModelParams>& params) {
  if (params.empty()) throw std::invalid_argument("fedavg: empty list");
  ModelParams acc = params.front();
  for (std::size_t k = 1; k < params.size(); ++k) {
    const ModelParams& w = params[k];
    if (!acc.layer1.same_shape(w.layer1) || !acc.layer2.same_shape(w.layer2)) {
      throw std::invalid_argument("fedavg: shape mismatch");
    }
    acc.layer1.add_scaled(w.layer1, 1.0);
    acc.layer2.add_scaled(w.layer2, 1.0);
  }
  const double inv = 1.0 / static_cast<double>(params.size());
  acc.layer1.scale(inv);
  acc.layer2.scale(inv);
  return acc;
}

void gaussian_perturb(std::span<double> v, double sigma, RandomStream& rng) {
  if (sigma < 0.0) throw std::invalid_argument("gaussian_perturb: sigma < 0");
  if (sigma == 0.0) return;
  for (double& x : v) x += sigma * rng.normal();
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 24));
}

void put_f64(std::vector<std::uint8_t>& out, double d) {
  const auto bits = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t off) {
  return static_cast<std::uint32_t>(b[off]) |
         static_cast<std::uint32_t>(b[off + 1]) << 8 |
         static_cast<std::uint32_t>(b[off + 2]) << 16 |
         static_cast<std::uint32_t>(b[off + 3]) << 24;
}

double get_f64(std::span<const std::uint8_t> b, std::size_t off) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) {
    bits = (bits << 8) | b[off + static_cast<std::size_t>(i)];
  }
  return std::bit_cast<double>(bits);
}

}  // namespace

std::vector<std::uint8_t> serialize_params(const ModelParams& w) {
  std::vector<std::uint8_t> out;
  out.reserve(12 + 8 * w.flat_size());
  put_u32(out, static_cast<std::uint32_t>(w.input_dim()));
  put_u32(out, static_cast<std::uint32_t>(w.hidden_dim()));
  put_u32(out, static_cast<std::uint32_t>(w.output_dim()));
  for (double v : w.layer1.data) put_f64(out, v);
  for (double v : w.layer2.data) put_f64(out, v);
  return out;
}

ModelParams deserialize_params(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12) {
    throw std::runtime_error("deserialize_params: truncated header");
  }
  const std::size_t p = get_u32(bytes, 0);
  const std::size_t hid = get_u32(bytes, 4);
  const std::size_t c = get_u32(bytes, 8);
  const std::size_t count = p * hid + hid * c;
  if (bytes.size() != 12 + 8 * count) {
    throw std::runtime_error("deserialize_params: length mismatch");
  }
  ModelParams w = ModelParams::zeros(p, hid, c);
  std::size_t off = 12;
  for (double& v : w.layer1.data) {
    v = get_f64(bytes, off);
    off += 8;
  }
  for (double& v : w.layer2.data) {
    v = get_f64(bytes, off);
    off += 8;
  }
  return w;
}

}  // namespace gfl::encoder
