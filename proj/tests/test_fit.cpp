#include <gtest/gtest.h>

#include <cmath>

#include "pcanet/dataio.hpp"
#include "pcanet/errors.hpp"
#include "pcanet/fit.hpp"

using namespace pcanet;

namespace {

// Block energies whose natural-log reciprocals are the given g values.
std::vector<FitPoint> cubic_points(const std::vector<double>& gs, double a, double b, double c,
                                   double d, LogBase base = LogBase::Natural) {
  std::vector<FitPoint> pts;
  for (double g : gs) {
    const double E = base == LogBase::Natural ? std::exp(1.0 / g) : std::pow(10.0, 1.0 / g);
    const double gg = log_transform(E, base);
    pts.push_back({E, ((a * gg + b) * gg + c) * gg + d});
  }
  return pts;
}

}  // namespace

TEST(Poly3, ExactCubicRecovery) {
  std::vector<double> gs;
  for (int i = 0; i < 30; ++i) gs.push_back(0.05 + 0.025 * i);  // keeps e in [0, 1]
  const auto pts = cubic_points(gs, 2.0, 0.0, -1.0, 0.5);
  const FitResult f = fit_poly3(pts);
  EXPECT_NEAR(f.p1, 2.0, 1e-9);
  EXPECT_NEAR(f.p2, 0.0, 1e-9);
  EXPECT_NEAR(f.p3, -1.0, 1e-9);
  EXPECT_NEAR(f.p4, 0.5, 1e-9);
  EXPECT_NEAR(f.r_square, 1.0, 1e-9);
  EXPECT_EQ(f.status, FitStatus::Ok);
  EXPECT_EQ(f.n_points, 30u);
  for (const auto& p : pts) EXPECT_NEAR(evaluate(f, p.block_energy), p.e, 1e-9);
}

TEST(Poly3, ExactCubicOnSweepLikeRange) {
  // g = 1/ln(E) for block energies between 1e5 and 1e9.
  std::vector<double> gs;
  for (int i = 0; i < 40; ++i) gs.push_back(1.0 / std::log(1e5 * std::pow(1e4, i / 39.0)));
  const auto pts = cubic_points(gs, -231.2, 123.3, -17.33, 0.9932);
  const FitResult f = fit_poly3(pts);
  EXPECT_NEAR(f.r_square, 1.0, 1e-9);
  for (const auto& p : pts) EXPECT_NEAR(evaluate(f, p.block_energy), p.e, 1e-9);
}

TEST(Poly3, Log10Base) {
  std::vector<double> gs;
  for (int i = 0; i < 12; ++i) gs.push_back(0.1 + 0.05 * i);
  const auto pts = cubic_points(gs, 1.0, -0.5, 0.25, 0.1, LogBase::Ten);
  const FitResult f = fit_poly3(pts, LogBase::Ten);
  EXPECT_NEAR(f.p1, 1.0, 1e-9);
  EXPECT_NEAR(f.p4, 0.1, 1e-9);
  EXPECT_EQ(f.base, LogBase::Ten);
}

TEST(Poly3, SumOfSquaresDecomposition) {
  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<FitPoint> pts;
    for (int i = 0; i < 50; ++i) {
      const double E = std::exp(5.0 + 15.0 * rng.uniform());
      const double g = 1.0 / std::log(E);
      double e = 0.3 + 2.0 * g - 3.0 * g * g + 0.05 * rng.normal();
      e = std::clamp(e, 0.0, 1.0);
      pts.push_back({E, e});
    }
    const FitResult f = fit_poly3(pts);
    EXPECT_NEAR(f.sst, f.sse + f.ssr, 1e-6 * f.sst);
    EXPECT_NEAR(f.rmse, std::sqrt(f.sse / 50.0), 1e-15);
    EXPECT_GE(f.r_square, 0.0);
    EXPECT_LE(f.r_square, 1.0);
  }
}

TEST(Poly3, ConstantTargetIsDegenerate) {
  std::vector<FitPoint> pts;
  for (int i = 1; i <= 6; ++i) pts.push_back({std::exp(5.0 * i), 0.25});
  const FitResult f = fit_poly3(pts);
  EXPECT_EQ(f.status, FitStatus::Degenerate);
  EXPECT_TRUE(std::isnan(f.r_square));
  EXPECT_NEAR(f.p1, 0.0, 1e-9);
  EXPECT_NEAR(f.p2, 0.0, 1e-9);
  EXPECT_NEAR(f.p3, 0.0, 1e-9);
  EXPECT_NEAR(f.p4, 0.25, 1e-12);
  EXPECT_NEAR(f.sse, 0.0, 1e-20);
  EXPECT_EQ(f.sst, 0.0);
  EXPECT_TRUE(to_json(f)["R_square"].is_null());
}

TEST(Poly3, Errors) {
  const std::vector<FitPoint> three = {{10, 0.1}, {100, 0.2}, {1000, 0.3}};
  EXPECT_THROW(fit_poly3(three), SingularSystemError);
  const std::vector<FitPoint> same_g = {{50, 0.1}, {50, 0.2}, {50, 0.3}, {50, 0.4}};
  EXPECT_THROW(fit_poly3(same_g), SingularSystemError);
  const std::vector<FitPoint> bad_e = {{10, 0.1}, {100, 0.2}, {1000, 0.3}, {1.0, 0.4}};
  try {
    fit_poly3(bad_e);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("point 3"), std::string::npos);
  }
  const std::vector<FitPoint> e_out = {{10, 0.1}, {100, 0.2}, {1000, 1.3}, {1e4, 0.4}};
  EXPECT_THROW(fit_poly3(e_out), PreconditionError);
}

TEST(Evaluate, PublishedCoefficientsAtGHalfTenth) {
  FitResult f;
  f.p1 = -231.2;
  f.p2 = 123.3;
  f.p3 = -17.33;
  f.p4 = 0.9932;
  // g = 0.05 at E = e^20. Recomputed value, not the rounded figure.
  EXPECT_NEAR(evaluate(f, std::exp(20.0)), 0.40605, 1e-9);
  FitResult k;
  k.p4 = 0.37;
  EXPECT_EQ(evaluate(k, 1e3), 0.37);
  EXPECT_EQ(evaluate(k, 1e8), 0.37);
  EXPECT_THROW(evaluate(k, 0.5), DomainError);
}

TEST(FitTable, MentionsEveryCriterion) {
  std::vector<double> gs;
  for (int i = 0; i < 10; ++i) gs.push_back(0.05 + 0.01 * i);
  const auto txt = format_fit_table(fit_poly3(cubic_points(gs, 1, 1, 1, 0.1)), "synthetic");
  for (const char* key : {"Poly3", "SSE", "SSR", "SST", "R-square", "RMSE", "synthetic"})
    EXPECT_NE(txt.find(key), std::string::npos) << key;
}
