#include "gfl/numkit.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gfl::numkit {

namespace {
using EigenRowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const EigenRowMajor>;
using Map = Eigen::Map<EigenRowMajor>;
}  // namespace

DenseMatrix::DenseMatrix(std::size_t r, std::size_t c, std::vector<double> d)
    : rows(r), cols(c), data(std::move(d)) {
  if (data.size() != rows * cols) {
    throw std::invalid_argument("DenseMatrix: data length != rows*cols");
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

bool DenseMatrix::all_finite() const {
  return std::all_of(data.begin(), data.end(),
                     [](double v) { return std::isfinite(v); });
}

bool DenseMatrix::is_symmetric(double tol) const {
  if (rows != cols) return false;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = i + 1; j < cols; ++j) {
      if (std::abs(at(i, j) - at(j, i)) > tol) return false;
    }
  }
  return true;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols, rows);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) t.at(j, i) = at(i, j);
  }
  return t;
}

void DenseMatrix::add_scaled(const DenseMatrix& o, double s) {
  if (!same_shape(o)) throw std::invalid_argument("add_scaled: shape mismatch");
  for (std::size_t i = 0; i < data.size(); ++i) data[i] += s * o.data[i];
}

void DenseMatrix::scale(double s) {
  for (double& v : data) v *= s;
}

double DenseMatrix::frobenius_norm() const {
  double acc = 0.0;
  for (double v : data) acc += v * v;
  return std::sqrt(acc);
}

double DenseMatrix::max_abs_diff(const DenseMatrix& o) const {
  if (!same_shape(o)) throw std::invalid_argument("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    m = std::max(m, std::abs(data[i] - o.data[i]));
  }
  return m;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols != b.rows) throw std::invalid_argument("matmul: inner dims differ");
  DenseMatrix c(a.rows, b.cols);
  Map(c.data.data(), c.rows, c.cols) =
      ConstMap(a.data.data(), a.rows, a.cols) *
      ConstMap(b.data.data(), b.rows, b.cols);
  return c;
}

std::vector<double> matvec(const DenseMatrix& a, std::span<const double> x) {
  if (a.cols != x.size()) throw std::invalid_argument("matvec: dims differ");
  std::vector<double> y(a.rows, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    double acc = 0.0;
    const double* row = a.data.data() + i * a.cols;
    for (std::size_t j = 0; j < a.cols; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
  return y;
}

void softmax_inplace(std::span<double> v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

DenseMatrix softmax_rows(const DenseMatrix& m) {
  DenseMatrix out = m;
  for (std::size_t i = 0; i < out.rows; ++i) softmax_inplace(out.row(i));
  return out;
}

double cross_entropy(std::span<const double> y, std::span<const double> p) {
  if (y.size() != p.size()) {
    throw std::invalid_argument("cross_entropy: dimension mismatch");
  }
  constexpr double eps = 1e-12;
  double loss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    loss -= y[i] * std::log(std::max(p[i], eps));
  }
  return loss;
}

namespace {

double offdiag_frobenius(const DenseMatrix& m) {
  double acc = 0.0;
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) {
      if (i != j) acc += m.at(i, j) * m.at(i, j);
    }
  }
  return std::sqrt(acc);
}

}  // namespace

EigenDecomposition sym_eig(const DenseMatrix& m) {
  if (m.rows != m.cols) throw std::invalid_argument("sym_eig: matrix not square");
  if (!m.is_symmetric(1e-10)) {
    throw std::invalid_argument("sym_eig: matrix not symmetric within 1e-10");
  }
  const std::size_t n = m.rows;
  DenseMatrix a = m;
  DenseMatrix q = DenseMatrix::identity(n);

  const double norm = std::max(a.frobenius_norm(), 1e-300);
  const double threshold = 1e-12 * norm;
  const int max_sweeps = 64;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    if (offdiag_frobenius(a) < threshold) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t r = p + 1; r < n; ++r) {
        const double apq = a.at(p, r);
        if (apq == 0.0) continue;
        const double app = a.at(p, p);
        const double aqq = a.at(r, r);
        const double theta = 0.5 * (aqq - app) / apq;
        double t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        if (theta < 0.0) t = -t;
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a.at(k, p);
          const double akq = a.at(k, r);
          a.at(k, p) = c * akp - s * akq;
          a.at(k, r) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a.at(p, k);
          const double aqk = a.at(r, k);
          a.at(p, k) = c * apk - s * aqk;
          a.at(r, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double qkp = q.at(k, p);
          const double qkq = q.at(k, r);
          q.at(k, p) = c * qkp - s * qkq;
          q.at(k, r) = s * qkp + c * qkq;
        }
      }
    }
  }

  // sort ascending by eigenvalue, permuting eigenvector columns to match
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return a.at(i, i) < a.at(j, j);
  });

  EigenDecomposition out;
  out.eigenvalues.resize(n);
  out.eigenvectors = DenseMatrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    out.eigenvalues[j] = a.at(order[j], order[j]);
    for (std::size_t i = 0; i < n; ++i) {
      out.eigenvectors.at(i, j) = q.at(i, order[j]);
    }
  }
  return out;
}

DenseMatrix pinv_psd(const DenseMatrix& m, double tol) {
  EigenDecomposition eig = sym_eig(m);
  const std::size_t n = m.rows;
  double lambda_max = 0.0;
  for (double v : eig.eigenvalues) {
    if (v < -tol) {
      throw std::invalid_argument("pinv_psd: negative eigenvalue below -tol");
    }
    lambda_max = std::max(lambda_max, v);
  }
  const double cut = tol * lambda_max;
  DenseMatrix out(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double v = eig.eigenvalues[k];
    if (v <= cut) continue;
    const double inv = 1.0 / v;
    for (std::size_t i = 0; i < n; ++i) {
      const double qi = eig.eigenvectors.at(i, k) * inv;
      for (std::size_t j = 0; j < n; ++j) {
        out.at(i, j) += qi * eig.eigenvectors.at(j, k);
      }
    }
  }
  return out;
}

}  // namespace gfl::numkit
