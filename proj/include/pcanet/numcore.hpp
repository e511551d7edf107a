#pragma once

// Dense real-matrix primitives used by every stage of the pipeline.
//
// Conventions fixed here and relied on elsewhere:
//  * Matrix storage is row-major.
//  * Patch extraction scans pixels row-major: the patch centred at pixel
//    (r, c) becomes column r * n + c.
//  * Inside a k1 x k2 window the entries are vectorized column-major:
//    window element (dr, dc) lands at index dc * k1 + dr. Filters are
//    reshaped from eigenvectors with the same rule (see reshape_filter).
//  * Out-of-image window entries are zero (zero padding of (k-1)/2).

#include <cstddef>
#include <span>
#include <vector>

namespace pcanet {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  /// Row-by-row initializer, convenient in tests: from_rows({{1, 2}, {3, 4}}).
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols_, cols_);
  }

  Matrix transposed() const;
  std::vector<double> column(std::size_t c) const;
  double max_abs() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

struct EigenDecomposition {
  std::vector<double> eigenvalues;  // non-increasing
  Matrix eigenvectors;              // column i pairs with eigenvalues[i]
};

/// im2col with zero padding: (k1*k2) x (m*n), ordering as documented above.
Matrix extract_patches(const Matrix& image, std::size_t k1, std::size_t k2);

/// Subtracts the mean column from every column (each row ends up zero-sum).
Matrix remove_patch_mean(const Matrix& patches);

/// Same-size sliding inner product (no kernel flip) with zero padding.
Matrix correlate_same(const Matrix& image, const Matrix& filter);

/// Vectorizes a k1 x k2 window column-major, the inverse of reshape_filter.
std::vector<double> vectorize_window(const Matrix& window);

/// Reshapes a length k1*k2 vector into a k1 x k2 filter (column-major fill).
Matrix reshape_filter(std::span<const double> vec, std::size_t k1, std::size_t k2);

/// Cyclic Jacobi eigensolver for small symmetric matrices.
///
/// Sweeps until off(A) < 1e-12 * ||A||_F or 100 sweeps have run. Eigenpairs
/// are returned sorted by descending eigenvalue; each eigenvector is signed
/// so that its largest-magnitude component is positive, which makes filter
/// banks reproducible across runs.
EigenDecomposition eigh_symmetric(const Matrix& sym);

/// Ordinary least squares through the normal equations, solved by Gaussian
/// elimination with partial pivoting. Throws SingularSystemError when a pivot
/// falls below 1e-12 of the largest diagonal entry of the normal matrix.
std::vector<double> least_squares(const Matrix& design, std::span<const double> targets);

}  // namespace pcanet
