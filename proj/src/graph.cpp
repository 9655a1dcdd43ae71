#include "gfl/graphgen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gfl::graphgen {

Graph::Graph(std::size_t n_,
             std::vector<std::pair<std::uint32_t, std::uint32_t>> e)
    : n(n_), edges(std::move(e)) {
  for (auto& [u, v] : edges) {
    if (u == v) throw std::invalid_argument("Graph: self-loop");
    if (u > v) std::swap(u, v);
    if (v >= n) throw std::invalid_argument("Graph: node id out of range");
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

std::vector<std::vector<std::uint32_t>> Graph::adjacency_lists() const {
  std::vector<std::vector<std::uint32_t>> adj(n);
  for (auto [u, v] : edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  return adj;
}

std::vector<std::size_t> Graph::degrees() const {
  std::vector<std::size_t> deg(n, 0);
  for (auto [u, v] : edges) {
    ++deg[u];
    ++deg[v];
  }
  return deg;
}

DenseMatrix Graph::adjacency_matrix() const {
  DenseMatrix a(n, n);
  for (auto [u, v] : edges) {
    a.at(u, v) = 1.0;
    a.at(v, u) = 1.0;
  }
  return a;
}

bool Graph::is_connected() const {
  if (n == 0) return true;
  auto adj = adjacency_lists();
  std::vector<bool> seen(n, false);
  std::vector<std::uint32_t> stack{0};
  seen[0] = true;
  std::size_t count = 1;
  while (!stack.empty()) {
    std::uint32_t u = stack.back();
    stack.pop_back();
    for (std::uint32_t v : adj[u]) {
      if (!seen[v]) {
        seen[v] = true;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count == n;
}

Graph Graph::induced_subgraph(const std::vector<std::uint32_t>& nodes) const {
  std::vector<std::int64_t> index(n, -1);
  for (std::size_t i = 0; i < nodes.size(); ++i) index[nodes[i]] = static_cast<std::int64_t>(i);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> sub;
  for (auto [u, v] : edges) {
    if (index[u] >= 0 && index[v] >= 0) {
      sub.emplace_back(static_cast<std::uint32_t>(index[u]),
                       static_cast<std::uint32_t>(index[v]));
    }
  }
  return Graph(nodes.size(), std::move(sub));
}

DenseMatrix laplacian(const Graph& g) {
  DenseMatrix l(g.n, g.n);
  for (auto [u, v] : g.edges) {
    l.at(u, v) -= 1.0;
    l.at(v, u) -= 1.0;
    l.at(u, u) += 1.0;
    l.at(v, v) += 1.0;
  }
  return l;
}

PropagationMatrix propagation_matrix(const Graph& g, double alpha,
                                     std::size_t steps) {
  if (alpha < 0.0 || alpha > 1.0) {
    throw std::invalid_argument("propagation_matrix: alpha outside [0,1]");
  }
  if (steps < 1) throw std::invalid_argument("propagation_matrix: steps < 1");
  const std::size_t n = g.n;

  // coefficients (1-alpha)*alpha^i for i < M, alpha^M at i = M; they sum to 1
  std::vector<double> coeff(steps + 1);
  double pow_a = 1.0;
  for (std::size_t i = 0; i < steps; ++i) {
    coeff[i] = (1.0 - alpha) * pow_a;
    pow_a *= alpha;
  }
  coeff[steps] = pow_a;

  PropagationMatrix out;
  out.alpha = alpha;
  out.steps = steps;
  if (alpha == 0.0) {
    out.matrix = DenseMatrix::identity(n);
    return out;
  }

  // S = Dhat^{-1/2} (A + I) Dhat^{-1/2}
  DenseMatrix s = g.adjacency_matrix();
  auto deg = g.degrees();
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.at(i, i) += 1.0;
    inv_sqrt[i] = 1.0 / std::sqrt(static_cast<double>(deg[i]) + 1.0);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      s.at(i, j) *= inv_sqrt[i] * inv_sqrt[j];
    }
  }

  DenseMatrix acc(n, n);
  for (std::size_t i = 0; i < n; ++i) acc.at(i, i) = coeff[0];
  DenseMatrix power = DenseMatrix::identity(n);
  for (std::size_t i = 1; i <= steps; ++i) {
    power = numkit::matmul(power, s);
    if (coeff[i] != 0.0) acc.add_scaled(power, coeff[i]);
  }
  out.matrix = std::move(acc);
  return out;
}

double connectivity_index(const Graph& g) {
  if (!g.is_connected()) {
    throw std::invalid_argument("connectivity_index: graph is not connected");
  }
  const std::size_t n = g.n;
  if (n == 1) return 0.0;

  auto eig = numkit::sym_eig(laplacian(g));
  const double lambda_max_l = eig.eigenvalues.back();
  const double zero_cut = 1e-10 * lambda_max_l;

  // (L^{1/2})^dagger = sum over nonzero modes of lambda^{-1/2} v v^T
  DenseMatrix half_pinv(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double v = eig.eigenvalues[k];
    if (v <= zero_cut) continue;  // the single zero mode of a connected graph
    const double w = 1.0 / std::sqrt(v);
    for (std::size_t i = 0; i < n; ++i) {
      const double qi = eig.eigenvectors.at(i, k) * w;
      for (std::size_t j = 0; j < n; ++j) {
        half_pinv.at(i, j) += qi * eig.eigenvectors.at(j, k);
      }
    }
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  DenseMatrix b(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      b.at(i, j) = (i == j ? inv_n : 0.0) - inv_n * inv_n;
    }
  }

  DenseMatrix sym = numkit::matmul(half_pinv, numkit::matmul(b, half_pinv));
  // make exactly symmetric against rounding before the eigensolve
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double avg = 0.5 * (sym.at(i, j) + sym.at(j, i));
      sym.at(i, j) = avg;
      sym.at(j, i) = avg;
    }
  }
  auto eig_sym = numkit::sym_eig(sym);
  return std::max(0.0, eig_sym.eigenvalues.back());
}

}  // namespace gfl::graphgen
