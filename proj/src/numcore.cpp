#include "pcanet/numcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pcanet/errors.hpp"

namespace pcanet {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw PreconditionError("Matrix: data length " + std::to_string(data_.size()) +
                            " does not equal rows*cols = " + std::to_string(rows * cols));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.front().size();
  Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    if (rows[i].size() != c) throw PreconditionError("Matrix::from_rows: ragged rows");
    std::copy(rows[i].begin(), rows[i].end(), m.data_.begin() + static_cast<std::ptrdiff_t>(i * c));
  }
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

std::vector<double> Matrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

double Matrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw PreconditionError("matrix product: inner dimensions differ");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw PreconditionError("matrix difference: shapes differ");
  Matrix out = a;
  auto o = out.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
  return out;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix out = a;
  for (double& v : out.values()) v *= s;
  return out;
}

namespace {

// Windows larger than the image are fine: everything outside is padding.
void require_odd_window(std::size_t k1, std::size_t k2, const char* what) {
  if (k1 == 0 || k1 % 2 == 0)
    throw PreconditionError(std::string(what) + ": k1 must be odd and >= 1, got " +
                            std::to_string(k1));
  if (k2 == 0 || k2 % 2 == 0)
    throw PreconditionError(std::string(what) + ": k2 must be odd and >= 1, got " +
                            std::to_string(k2));
}

}  // namespace

Matrix extract_patches(const Matrix& image, std::size_t k1, std::size_t k2) {
  const std::size_t m = image.rows();
  const std::size_t n = image.cols();
  if (m == 0 || n == 0) throw PreconditionError("extract_patches: empty image");
  require_odd_window(k1, k2, "extract_patches");
  const auto p1 = static_cast<std::ptrdiff_t>((k1 - 1) / 2);
  const auto p2 = static_cast<std::ptrdiff_t>((k2 - 1) / 2);

  Matrix out(k1 * k2, m * n);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const std::size_t col = r * n + c;
      for (std::size_t dc = 0; dc < k2; ++dc) {
        const auto cc = static_cast<std::ptrdiff_t>(c + dc) - p2;
        if (cc < 0 || cc >= static_cast<std::ptrdiff_t>(n)) continue;
        for (std::size_t dr = 0; dr < k1; ++dr) {
          const auto rr = static_cast<std::ptrdiff_t>(r + dr) - p1;
          if (rr < 0 || rr >= static_cast<std::ptrdiff_t>(m)) continue;
          out(dc * k1 + dr, col) = image(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc));
        }
      }
    }
  }
  return out;
}

Matrix remove_patch_mean(const Matrix& patches) {
  if (patches.empty()) throw PreconditionError("remove_patch_mean: empty patch matrix");
  Matrix out = patches;
  const double inv = 1.0 / static_cast<double>(patches.cols());
  for (std::size_t r = 0; r < patches.rows(); ++r) {
    const auto row = patches.row(r);
    const double mean = std::accumulate(row.begin(), row.end(), 0.0) * inv;
    for (std::size_t c = 0; c < patches.cols(); ++c) out(r, c) -= mean;
  }
  return out;
}

Matrix correlate_same(const Matrix& image, const Matrix& filter) {
  const std::size_t m = image.rows();
  const std::size_t n = image.cols();
  const std::size_t k1 = filter.rows();
  const std::size_t k2 = filter.cols();
  if (m == 0 || n == 0) throw PreconditionError("correlate_same: empty image");
  require_odd_window(k1, k2, "correlate_same");
  const auto p1 = static_cast<std::ptrdiff_t>((k1 - 1) / 2);
  const auto p2 = static_cast<std::ptrdiff_t>((k2 - 1) / 2);

  // Accumulation order matches dot(extract_patches column, vectorize_window):
  // dc outer, dr inner, skipping padded entries (which contribute exact zeros).
  Matrix out(m, n);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      double acc = 0.0;
      for (std::size_t dc = 0; dc < k2; ++dc) {
        const auto cc = static_cast<std::ptrdiff_t>(c + dc) - p2;
        if (cc < 0 || cc >= static_cast<std::ptrdiff_t>(n)) continue;
        for (std::size_t dr = 0; dr < k1; ++dr) {
          const auto rr = static_cast<std::ptrdiff_t>(r + dr) - p1;
          if (rr < 0 || rr >= static_cast<std::ptrdiff_t>(m)) continue;
          acc += image(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc)) * filter(dr, dc);
        }
      }
      out(r, c) = acc;
    }
  }
  return out;
}

std::vector<double> vectorize_window(const Matrix& window) {
  std::vector<double> v(window.size());
  for (std::size_t dc = 0; dc < window.cols(); ++dc)
    for (std::size_t dr = 0; dr < window.rows(); ++dr) v[dc * window.rows() + dr] = window(dr, dc);
  return v;
}

Matrix reshape_filter(std::span<const double> vec, std::size_t k1, std::size_t k2) {
  if (vec.size() != k1 * k2)
    throw PreconditionError("reshape_filter: vector length " + std::to_string(vec.size()) +
                            " != k1*k2 = " + std::to_string(k1 * k2));
  Matrix w(k1, k2);
  for (std::size_t dc = 0; dc < k2; ++dc)
    for (std::size_t dr = 0; dr < k1; ++dr) w(dr, dc) = vec[dc * k1 + dr];
  return w;
}

EigenDecomposition eigh_symmetric(const Matrix& sym) {
  const std::size_t n = sym.rows();
  if (sym.cols() != n)
    throw PreconditionError("eigh_symmetric: matrix is " + std::to_string(n) + "x" +
                            std::to_string(sym.cols()) + ", not square");
  for (double v : sym.values())
    if (!std::isfinite(v)) throw PreconditionError("eigh_symmetric: non-finite entry");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(sym(i, j) - sym(j, i)) > 1e-10)
        throw PreconditionError("eigh_symmetric: matrix is not symmetric at (" + std::to_string(i) +
                                "," + std::to_string(j) + ")");

  Matrix a = sym;
  // Symmetrize exactly so rotations see one value per off-diagonal pair.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (sym(i, j) + sym(j, i));
  Matrix v = Matrix::identity(n);

  double frob2 = 0.0;
  for (double x : a.values()) frob2 += x * x;
  const double tol = 1e-12 * std::sqrt(frob2);

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  for (int sweep = 0; sweep < 100; ++sweep) {
    const double off = off_norm();
    if (off == 0.0 || off < tol) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        // Rutishauser's stable form: t = sgn(theta) / (|theta| + sqrt(theta^2 + 1)).
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::hypot(theta, 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  EigenDecomposition out;
  out.eigenvalues.resize(n);
  out.eigenvectors = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t src = order[k];
    out.eigenvalues[k] = a(src, src);
    std::size_t pivot = 0;
    for (std::size_t r = 1; r < n; ++r)
      if (std::abs(v(r, src)) > std::abs(v(pivot, src)) * (1.0 + 1e-12)) pivot = r;
    const double sign = v(pivot, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t r = 0; r < n; ++r) out.eigenvectors(r, k) = sign * v(r, src);
  }
  return out;
}

std::vector<double> least_squares(const Matrix& design, std::span<const double> targets) {
  const std::size_t rows = design.rows();
  const std::size_t cols = design.cols();
  if (cols == 0) throw PreconditionError("least_squares: design has no columns");
  if (targets.size() != rows)
    throw PreconditionError("least_squares: " + std::to_string(targets.size()) + " targets for " +
                            std::to_string(rows) + " design rows");
  if (rows < cols)
    throw PreconditionError("least_squares: underdetermined system (" + std::to_string(rows) +
                            " rows < " + std::to_string(cols) + " cols)");

  // Augmented normal system [D^T D | D^T t].
  Matrix aug(cols, cols + 1);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto x = design.row(r);
    for (std::size_t i = 0; i < cols; ++i) {
      for (std::size_t j = 0; j < cols; ++j) aug(i, j) += x[i] * x[j];
      aug(i, cols) += x[i] * targets[r];
    }
  }
  double scale = 0.0;
  for (std::size_t i = 0; i < cols; ++i) scale = std::max(scale, std::abs(aug(i, i)));
  const double pivot_floor = 1e-12 * scale;

  for (std::size_t k = 0; k < cols; ++k) {
    std::size_t best = k;
    for (std::size_t r = k + 1; r < cols; ++r)
      if (std::abs(aug(r, k)) > std::abs(aug(best, k))) best = r;
    if (!(std::abs(aug(best, k)) > pivot_floor))
      throw SingularSystemError("least_squares: rank-deficient normal matrix (pivot " +
                                std::to_string(k) + " below 1e-12 relative)");
    if (best != k)
      for (std::size_t j = 0; j <= cols; ++j) std::swap(aug(k, j), aug(best, j));
    for (std::size_t r = k + 1; r < cols; ++r) {
      const double f = aug(r, k) / aug(k, k);
      if (f == 0.0) continue;
      for (std::size_t j = k; j <= cols; ++j) aug(r, j) -= f * aug(k, j);
    }
  }
  std::vector<double> beta(cols);
  for (std::size_t k = cols; k-- > 0;) {
    double acc = aug(k, cols);
    for (std::size_t j = k + 1; j < cols; ++j) acc -= aug(k, j) * beta[j];
    beta[k] = acc / aug(k, k);
  }
  return beta;
}

}  // namespace pcanet
