#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace gfl::numkit {

// Dense row-major matrix of 64-bit floats.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // rows*cols, row-major

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  DenseMatrix(std::size_t r, std::size_t c, std::vector<double> d);

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }

  static DenseMatrix identity(std::size_t n);

  bool same_shape(const DenseMatrix& o) const {
    return rows == o.rows && cols == o.cols;
  }
  bool all_finite() const;
  bool is_symmetric(double tol) const;

  DenseMatrix transposed() const;
  void add_scaled(const DenseMatrix& o, double s);  // *this += s*o
  void scale(double s);

  double frobenius_norm() const;
  double max_abs_diff(const DenseMatrix& o) const;
};

// C = A * B (delegated to Eigen; deterministic single-threaded)
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

// y = A * x
std::vector<double> matvec(const DenseMatrix& a, std::span<const double> x);

// Row-wise softmax with max-subtraction; total on finite input.
DenseMatrix softmax_rows(const DenseMatrix& m);
void softmax_inplace(std::span<double> v);

// -sum_i y_i * ln(max(p_i, 1e-12)); y one-hot, p a probability vector.
double cross_entropy(std::span<const double> y, std::span<const double> p);

struct EigenDecomposition {
  std::vector<double> eigenvalues;  // ascending
  DenseMatrix eigenvectors;         // orthonormal columns, column i <-> value i
};

// Symmetric eigendecomposition by cyclic Jacobi rotations. Convergence:
// off-diagonal Frobenius norm < 1e-12 * ||M||_F. Input must be symmetric
// within 1e-10.
EigenDecomposition sym_eig(const DenseMatrix& m);

// Moore-Penrose pseudoinverse of a symmetric PSD matrix. Eigenvalues below
// tol * lambda_max are treated as zero; an eigenvalue below -tol is an error.
DenseMatrix pinv_psd(const DenseMatrix& m, double tol);

}  // namespace gfl::numkit
