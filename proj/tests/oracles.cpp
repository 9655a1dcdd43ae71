#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oracles {

namespace {

// forward pass with plain loops; returns preactivations too
void plain_forward(const double* x, const ModelParams& w, std::vector<double>& act,
                   std::vector<double>& h) {
  const std::size_t p = w.input_dim(), hid = w.hidden_dim(), c = w.output_dim();
  act.assign(hid, 0.0);
  for (std::size_t q = 0; q < p; ++q) {
    for (std::size_t j = 0; j < hid; ++j) {
      act[j] += x[q] * w.layer1.at(q, j);
    }
  }
  h.assign(c, 0.0);
  for (std::size_t j = 0; j < hid; ++j) {
    const double r = act[j] > 0.0 ? act[j] : 0.0;
    for (std::size_t i = 0; i < c; ++i) h[i] += r * w.layer2.at(j, i);
  }
}

std::vector<double> softmax_copy(std::vector<double> z) {
  double mx = z[0];
  for (double v : z) mx = std::max(mx, v);
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return z;
}

double ce(const double* y, const std::vector<double>& prob) {
  double loss = 0.0;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    loss -= y[i] * std::log(std::max(prob[i], 1e-12));
  }
  return loss;
}

ModelParams perturbed(const ModelParams& w, std::size_t index, double delta) {
  ModelParams out = w;
  const std::size_t n1 = out.layer1.data.size();
  if (index < n1) {
    out.layer1.data[index] += delta;
  } else {
    out.layer2.data[index - n1] += delta;
  }
  return out;
}

}  // namespace

AggregatedContext FrozenRoundLoss::context_at(const ModelParams& w) const {
  const std::size_t c = w.output_dim();
  AggregatedContext ctx = AggregatedContext::zeros(c, w.flat_size());
  std::vector<double> act, h;
  const std::size_t p = w.input_dim(), hid = w.hidden_dim();
  const std::size_t w2_base = p * hid;
  for (std::size_t jn = 0; jn < neighbor_rows.size(); ++jn) {
    const DenseMatrix& rows = *neighbor_rows[jn];
    const double weight = neighbor_weight[jn] / static_cast<double>(rows.rows);
    for (std::size_t s = 0; s < rows.rows; ++s) {
      const double* x = rows.data.data() + s * p;
      plain_forward(x, w, act, h);
      for (std::size_t i = 0; i < c; ++i) ctx.c_vec[i] += weight * h[i];
      for (std::size_t j = 0; j < hid; ++j) {
        const double r = act[j] > 0.0 ? act[j] : 0.0;
        for (std::size_t i = 0; i < c; ++i) {
          ctx.c_jac.at(i, w2_base + j * c + i) += weight * r;
        }
        if (act[j] > 0.0) {
          for (std::size_t i = 0; i < c; ++i) {
            const double l2 = w.layer2.at(j, i);
            for (std::size_t q = 0; q < p; ++q) {
              ctx.c_jac.at(i, q * hid + j) += weight * x[q] * l2;
            }
          }
        }
      }
    }
  }
  return ctx;
}

double FrozenRoundLoss::value(const ModelParams& w) const {
  AggregatedContext ctx = context_at(w);
  const std::size_t c = w.output_dim();
  std::vector<double> act, h;
  double loss = 0.0;
  for (std::size_t s = 0; s < batch_x->rows; ++s) {
    plain_forward(batch_x->data.data() + s * batch_x->cols, w, act, h);
    std::vector<double> z(c);
    for (std::size_t i = 0; i < c; ++i) z[i] = a_kk * h[i] + ctx.c_vec[i];
    loss += ce(batch_y->data.data() + s * c, softmax_copy(z));
  }
  return loss / static_cast<double>(batch_x->rows);
}

std::vector<double> FrozenRoundLoss::fd_gradient(const ModelParams& w,
                                                 double step) const {
  std::vector<double> g(w.flat_size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double up = value(perturbed(w, i, step));
    const double down = value(perturbed(w, i, -step));
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

bool FrozenRoundLoss::near_kink(const ModelParams& w, double margin) const {
  std::vector<double> act, h;
  auto check_rows = [&](const DenseMatrix& rows) {
    for (std::size_t s = 0; s < rows.rows; ++s) {
      plain_forward(rows.data.data() + s * rows.cols, w, act, h);
      for (double a : act) {
        if (std::abs(a) < margin) return true;
      }
    }
    return false;
  };
  if (check_rows(*batch_x)) return true;
  for (const DenseMatrix* rows : neighbor_rows) {
    if (check_rows(*rows)) return true;
  }
  return false;
}

DenseMatrix fd_mlp_jacobian(const std::vector<double>& x, const ModelParams& w,
                            double step) {
  const std::size_t c = w.output_dim();
  DenseMatrix jac(c, w.flat_size());
  std::vector<double> act, up, down;
  for (std::size_t i = 0; i < w.flat_size(); ++i) {
    plain_forward(x.data(), perturbed(w, i, step), act, up);
    plain_forward(x.data(), perturbed(w, i, -step), act, down);
    for (std::size_t r = 0; r < c; ++r) {
      jac.at(r, i) = (up[r] - down[r]) / (2.0 * step);
    }
  }
  return jac;
}

bool mlp_near_kink(const std::vector<double>& x, const ModelParams& w,
                   double margin) {
  std::vector<double> act, h;
  plain_forward(x.data(), w, act, h);
  for (double a : act) {
    if (std::abs(a) < margin) return true;
  }
  return false;
}

CentralizedPropagationGd::CentralizedPropagationGd(DenseMatrix a_tilde,
                                                   const DenseMatrix& features,
                                                   const DenseMatrix& labels,
                                                   std::vector<bool> labeled)
    : a_tilde_(std::move(a_tilde)),
      features_(features),
      labels_(labels),
      labeled_(std::move(labeled)) {}

void CentralizedPropagationGd::step(ModelParams& w, double eta) const {
  const std::size_t n = a_tilde_.rows;
  const std::size_t p = w.input_dim(), hid = w.hidden_dim(), c = w.output_dim();
  std::size_t n_labeled = 0;
  for (bool b : labeled_) n_labeled += b ? 1 : 0;

  // forward every node, remember activations
  DenseMatrix act(n, hid), hidden(n, c);
  std::vector<double> a, h;
  for (std::size_t j = 0; j < n; ++j) {
    plain_forward(features_.data.data() + j * p, w, a, h);
    std::copy(a.begin(), a.end(), act.data.begin() + j * hid);
    std::copy(h.begin(), h.end(), hidden.data.begin() + j * c);
  }

  // dZ rows live on labeled nodes only
  DenseMatrix dz(n, c);
  for (std::size_t k = 0; k < n; ++k) {
    if (!labeled_[k]) continue;
    std::vector<double> z(c, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double akj = a_tilde_.at(k, j);
      for (std::size_t i = 0; i < c; ++i) z[i] += akj * hidden.at(j, i);
    }
    auto prob = softmax_copy(z);
    for (std::size_t i = 0; i < c; ++i) {
      dz.at(k, i) = (prob[i] - labels_.at(k, i)) / static_cast<double>(n_labeled);
    }
  }

  // dH = A_tilde^T dZ, then backprop per node
  DenseMatrix dh(n, c);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      const double akj = a_tilde_.at(k, j);
      if (akj == 0.0) continue;
      for (std::size_t i = 0; i < c; ++i) dh.at(j, i) += akj * dz.at(k, i);
    }
  }

  DenseMatrix g1(p, hid), g2(hid, c);
  for (std::size_t j = 0; j < n; ++j) {
    const double* x = features_.data.data() + j * p;
    for (std::size_t jj = 0; jj < hid; ++jj) {
      const double aj = act.at(j, jj);
      const double r = aj > 0.0 ? aj : 0.0;
      double back = 0.0;
      for (std::size_t i = 0; i < c; ++i) {
        g2.at(jj, i) += r * dh.at(j, i);
        back += w.layer2.at(jj, i) * dh.at(j, i);
      }
      if (aj > 0.0) {
        for (std::size_t q = 0; q < p; ++q) {
          g1.at(q, jj) += x[q] * back;
        }
      }
    }
  }

  w.layer1.add_scaled(g1, -eta);
  w.layer2.add_scaled(g2, -eta);
}

CentralizedMlpGd::CentralizedMlpGd(const gfl::graphgen::ClientDataset* data)
    : data_(data) {}

void CentralizedMlpGd::step(ModelParams& w, double eta) const {
  const auto& data = *data_;
  const std::size_t p = w.input_dim(), hid = w.hidden_dim(), c = w.output_dim();
  std::size_t n_labeled = 0;
  for (bool b : data.labeled) n_labeled += b ? 1 : 0;

  DenseMatrix g1(p, hid), g2(hid, c);
  std::vector<double> a, h;
  for (std::size_t k = 0; k < data.num_clients(); ++k) {
    if (!data.labeled[k]) continue;
    std::vector<std::size_t> rows;
    for (std::size_t r = data.row_offset[k]; r < data.row_offset[k + 1]; ++r) {
      if (data.granularity == gfl::graphgen::SplitGranularity::per_client ||
          data.row_split[r] == gfl::graphgen::Split::train) {
        rows.push_back(r);
      }
    }
    const double scale = 1.0 / (static_cast<double>(n_labeled) *
                                static_cast<double>(rows.size()));
    for (std::size_t r : rows) {
      const double* x = data.features.data.data() + r * p;
      plain_forward(x, w, a, h);
      auto prob = softmax_copy(h);
      std::vector<double> d(c);
      for (std::size_t i = 0; i < c; ++i) {
        d[i] = (prob[i] - data.labels.at(r, i)) * scale;
      }
      for (std::size_t j = 0; j < hid; ++j) {
        const double r_act = a[j] > 0.0 ? a[j] : 0.0;
        double back = 0.0;
        for (std::size_t i = 0; i < c; ++i) {
          g2.at(j, i) += r_act * d[i];
          back += w.layer2.at(j, i) * d[i];
        }
        if (a[j] > 0.0) {
          for (std::size_t q = 0; q < p; ++q) g1.at(q, j) += x[q] * back;
        }
      }
    }
  }
  w.layer1.add_scaled(g1, -eta);
  w.layer2.add_scaled(g2, -eta);
}

Graph random_connected_graph(std::size_t n, gfl::RandomStream& rng) {
  if (n == 1) return Graph(1, {});
  const std::uint64_t family = rng.uniform_int(3);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  if (family == 0) {
    // random tree: attach every node to an earlier one
    for (std::uint32_t v = 1; v < n; ++v) {
      edges.emplace_back(static_cast<std::uint32_t>(rng.uniform_int(v)), v);
    }
  } else if (family == 1) {
    for (std::uint32_t u = 0; u < n; ++u) {
      for (std::uint32_t v = u + 1; v < n; ++v) edges.emplace_back(u, v);
    }
  } else {
    // Erdos-Renyi on top of a random spanning tree, so every sample connects
    for (std::uint32_t v = 1; v < n; ++v) {
      edges.emplace_back(static_cast<std::uint32_t>(rng.uniform_int(v)), v);
    }
    const double p = 0.05 + 0.6 * rng.uniform();
    for (std::uint32_t u = 0; u < n; ++u) {
      for (std::uint32_t v = u + 1; v < n; ++v) {
        if (rng.bernoulli(p)) edges.emplace_back(u, v);
      }
    }
  }
  return Graph(n, std::move(edges));
}

}  // namespace oracles
