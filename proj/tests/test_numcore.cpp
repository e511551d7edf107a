#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "pcanet/errors.hpp"
#include "pcanet/numcore.hpp"

using namespace pcanet;

TEST(ExtractPatches, OneByOne) {
  const Matrix x = extract_patches(Matrix::from_rows({{5}}), 1, 1);
  EXPECT_EQ(x, Matrix::from_rows({{5}}));
}

TEST(ExtractPatches, TwoByTwoWithPadding) {
  const Matrix img = Matrix::from_rows({{1, 2}, {3, 4}});
  const Matrix x = extract_patches(img, 3, 3);
  ASSERT_EQ(x.rows(), 9u);
  ASSERT_EQ(x.cols(), 4u);
  // Column-major inside the window: (dr, dc) -> dc * 3 + dr.
  const std::vector<double> expect = {0, 0, 0, 0, 1, 3, 0, 2, 4};
  EXPECT_EQ(x.column(0), expect);
  // Same multiset as the row-major listing (0,0,0,0,1,2,0,3,4).
  auto a = x.column(0), b = std::vector<double>{0, 0, 0, 0, 1, 2, 0, 3, 4};
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  EXPECT_EQ(a, b);
}

TEST(ExtractPatches, MatchesBruteForceEnumeration) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 1 + rng.below(9), n = 1 + rng.below(9);
    const std::size_t k1 = 1 + 2 * rng.below((m + 1) / 2), k2 = 1 + 2 * rng.below((n + 1) / 2);
    const Matrix img = oracle::random_matrix(rng, m, n, 0, 255);
    const Matrix x = extract_patches(img, k1, k2);
    ASSERT_EQ(x.cols(), m * n);
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c = 0; c < n; ++c)
        EXPECT_EQ(x.column(r * n + c), oracle::patch_at(img, k1, k2, r, c));
  }
}

TEST(ExtractPatches, Preconditions) {
  const Matrix img(4, 4, 1.0);
  EXPECT_THROW(extract_patches(img, 2, 3), PreconditionError);
  // A window wider than the image only sees padding beyond the border.
  const Matrix wide = extract_patches(img, 5, 3);
  for (std::size_t col = 0; col < 16; ++col)
    EXPECT_EQ(wide.column(col), oracle::patch_at(img, 5, 3, col / 4, col % 4));
  EXPECT_THROW(extract_patches(Matrix(), 1, 1), PreconditionError);
}

TEST(RemovePatchMean, Example) {
  const Matrix r = remove_patch_mean(Matrix::from_rows({{1, 3}, {2, 2}}));
  EXPECT_EQ(r, Matrix::from_rows({{-1, 1}, {0, 0}}));
}

TEST(RemovePatchMean, Idempotent) {
  Rng rng(3);
  const Matrix once = remove_patch_mean(oracle::random_matrix(rng, 9, 50));
  EXPECT_LT(oracle::max_abs_diff(once, remove_patch_mean(once)), 1e-12);
}

TEST(RemovePatchMean, RowsSumToZero) {
  Rng rng(5);
  const Matrix x = oracle::random_matrix(rng, 9, 100, 0, 255);
  const Matrix r = remove_patch_mean(x);
  for (std::size_t i = 0; i < r.rows(); ++i) {
    double s = 0.0, a = 0.0;
    for (double v : r.row(i)) {
      s += v;
      a += std::abs(v);
    }
    EXPECT_LT(std::abs(s), 1e-9 * a);
  }
  EXPECT_THROW(remove_patch_mean(Matrix()), PreconditionError);
}

TEST(CorrelateSame, DeltaFilterIsIdentity) {
  Rng rng(8);
  const Matrix img = oracle::random_matrix(rng, 7, 5);
  Matrix delta(3, 3, 0.0);
  delta(1, 1) = 1.0;
  EXPECT_EQ(correlate_same(img, delta), img);
}

TEST(CorrelateSame, Scalar) {
  EXPECT_EQ(correlate_same(Matrix::from_rows({{3}}), Matrix::from_rows({{2}})),
            Matrix::from_rows({{6}}));
}

TEST(CorrelateSame, NoFlip) {
  // A filter with a single tap at (0, 0) reads the up-left neighbour.
  const Matrix img = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}});
  Matrix f(3, 3, 0.0);
  f(0, 0) = 1.0;
  const Matrix out = correlate_same(img, f);
  EXPECT_EQ(out(1, 1), 1.0);
  EXPECT_EQ(out(2, 2), 5.0);
  EXPECT_EQ(out(0, 0), 0.0);
}

TEST(CorrelateSame, EqualsPatchDotProducts) {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix img = oracle::random_matrix(rng, 8, 6, 0, 255);
    const Matrix f = oracle::random_matrix(rng, 3, 3);
    const Matrix x = extract_patches(img, 3, 3);
    const auto w = vectorize_window(f);
    const Matrix out = correlate_same(img, f);
    for (std::size_t p = 0; p < x.cols(); ++p) {
      double s = 0.0;
      for (std::size_t k = 0; k < 9; ++k) s += w[k] * x(k, p);
      EXPECT_EQ(out.values()[p], s);
    }
  }
  EXPECT_THROW(correlate_same(Matrix(4, 4), Matrix(2, 3)), PreconditionError);
}

TEST(ReshapeFilter, InverseOfVectorize) {
  Rng rng(4);
  const Matrix f = oracle::random_matrix(rng, 3, 5);
  const auto v = vectorize_window(f);
  EXPECT_EQ(reshape_filter(v, 3, 5), f);
  EXPECT_EQ(v[1], f(1, 0));  // column-major
}

TEST(Eigh, TwoByTwo) {
  const auto e = eigh_symmetric(Matrix::from_rows({{2, 1}, {1, 2}}));
  EXPECT_NEAR(e.eigenvalues[0], 3.0, 1e-12);
  EXPECT_NEAR(e.eigenvalues[1], 1.0, 1e-12);
  const double s = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(std::abs(e.eigenvectors(0, 0)), s, 1e-12);
  EXPECT_NEAR(e.eigenvectors(0, 0), e.eigenvectors(1, 0), 1e-12);
  EXPECT_NEAR(e.eigenvectors(0, 1), -e.eigenvectors(1, 1), 1e-12);
}

TEST(Eigh, Identity) {
  const Matrix I = Matrix::identity(9);
  const auto e = eigh_symmetric(I);
  for (double v : e.eigenvalues) EXPECT_NEAR(v, 1.0, 1e-14);
  const Matrix V = e.eigenvectors;
  EXPECT_LT(oracle::max_abs_diff(V.transposed() * V, I), 1e-10);
}

TEST(Eigh, MatchesBisectionOracle) {
  Rng rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 2 + trial % 8;
    const Matrix a = oracle::random_symmetric(rng, n, 10.0);
    const auto e = eigh_symmetric(a);
    const auto ref = oracle::bisection_eigenvalues(a);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(e.eigenvalues[i], ref[i], 1e-8);
    // A V = V Lambda and orthonormality.
    const Matrix& V = e.eigenvectors;
    Matrix VL = V;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) VL(r, c) *= e.eigenvalues[c];
    double fro = 0.0;
    for (double v : a.values()) fro += v * v;
    EXPECT_LT(oracle::max_abs_diff(a * V, VL), 1e-8 * std::sqrt(fro));
    EXPECT_LT(oracle::max_abs_diff(V.transposed() * V, Matrix::identity(n)), 1e-10);
    for (std::size_t i = 1; i < n; ++i) EXPECT_GE(e.eigenvalues[i - 1], e.eigenvalues[i]);
  }
}

TEST(Eigh, CharacteristicPolynomialThreeByThree) {
  // Eigenvalues of a 3x3 are roots of det(A - x I); check each root.
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = oracle::random_symmetric(rng, 3);
    for (double x : eigh_symmetric(a).eigenvalues) {
      const double a00 = a(0, 0) - x, a11 = a(1, 1) - x, a22 = a(2, 2) - x;
      const double det = a00 * (a11 * a22 - a(1, 2) * a(2, 1)) -
                         a(0, 1) * (a(1, 0) * a22 - a(1, 2) * a(2, 0)) +
                         a(0, 2) * (a(1, 0) * a(2, 1) - a11 * a(2, 0));
      EXPECT_NEAR(det, 0.0, 1e-10);
    }
  }
}

TEST(Eigh, SignConvention) {
  Rng rng(9);
  const auto e = eigh_symmetric(oracle::random_symmetric(rng, 6));
  for (std::size_t c = 0; c < 6; ++c) {
    const auto v = e.eigenvectors.column(c);
    const auto it = std::max_element(v.begin(), v.end(),
                                     [](double a, double b) { return std::abs(a) < std::abs(b); });
    EXPECT_GT(*it, 0.0);
  }
}

TEST(Eigh, Preconditions) {
  EXPECT_THROW(eigh_symmetric(Matrix(2, 3)), PreconditionError);
  EXPECT_THROW(eigh_symmetric(Matrix::from_rows({{1, 2}, {0, 1}})), PreconditionError);
}

TEST(LeastSquares, IdentityDesign) {
  const std::vector<double> t = {1.5, -2, 3};
  const auto x = least_squares(Matrix::identity(3), t);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(x[i], t[i], 1e-15);
}

TEST(LeastSquares, ConsistentSystem) {
  Rng rng(12);
  const Matrix a = oracle::random_matrix(rng, 20, 4);
  const std::vector<double> truth = {1, -2, 0.5, 4};
  std::vector<double> t(20, 0.0);
  for (std::size_t i = 0; i < 20; ++i)
    for (std::size_t j = 0; j < 4; ++j) t[i] += a(i, j) * truth[j];
  const auto x = least_squares(a, t);
  double res = 0.0;
  for (std::size_t i = 0; i < 20; ++i) {
    double p = 0.0;
    for (std::size_t j = 0; j < 4; ++j) p += a(i, j) * x[j];
    res += (p - t[i]) * (p - t[i]);
  }
  EXPECT_LT(std::sqrt(res), 1e-9);
}

TEST(LeastSquares, ResidualOrthogonalToColumns) {
  Rng rng(13);
  const Matrix a = oracle::random_matrix(rng, 100, 4);
  std::vector<double> t(100);
  for (double& v : t) v = rng.normal();
  const auto x = least_squares(a, t);
  for (std::size_t j = 0; j < 4; ++j) {
    double dot = 0.0;
    for (std::size_t i = 0; i < 100; ++i) {
      double p = 0.0;
      for (std::size_t k = 0; k < 4; ++k) p += a(i, k) * x[k];
      dot += a(i, j) * (t[i] - p);
    }
    EXPECT_LT(std::abs(dot), 1e-8);
  }
}

TEST(LeastSquares, RankDeficient) {
  const Matrix a = Matrix::from_rows({{1, 2}, {2, 4}, {3, 6}});
  const std::vector<double> t = {1, 2, 3};
  EXPECT_THROW(least_squares(a, t), SingularSystemError);
}
