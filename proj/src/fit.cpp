#include "pcanet/fit.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "pcanet/errors.hpp"
#include "pcanet/numcore.hpp"

namespace pcanet {

double log_transform(double block_energy, LogBase base) {
  if (!(block_energy > 1.0) || !std::isfinite(block_energy)) {
    std::ostringstream os;
    os << "block energy " << block_energy << " must be finite and > 1 for g = 1/log(E)";
    throw DomainError(os.str());
  }
  const double lg = base == LogBase::Natural ? std::log(block_energy) : std::log10(block_energy);
  return 1.0 / lg;
}

FitResult fit_poly3(std::span<const FitPoint> points, LogBase base) {
  const std::size_t n = points.size();
  if (n < 4)
    throw SingularSystemError("fit_poly3: need at least 4 points, got " + std::to_string(n));

  std::vector<double> g(n), e(n);
  for (std::size_t i = 0; i < n; ++i) {
    const FitPoint& p = points[i];
    if (!(p.block_energy > 1.0) || !std::isfinite(p.block_energy)) {
      std::ostringstream os;
      os << "fit_poly3: point " << i << " has block_energy " << p.block_energy
         << "; log(E) must be positive";
      throw DomainError(os.str());
    }
    if (!(p.e >= 0.0 && p.e <= 1.0))
      throw PreconditionError("fit_poly3: point " + std::to_string(i) + " has e outside [0, 1]");
    g[i] = log_transform(p.block_energy, base);
    e[i] = p.e;
  }

  // Solve in a centred, scaled variable t = (g - c) / s for conditioning, then
  // expand back to the monomial basis in g.
  const auto [gmin, gmax] = std::minmax_element(g.begin(), g.end());
  const double c = 0.5 * (*gmin + *gmax);
  const double s = 0.5 * (*gmax - *gmin);
  if (!(s > 0.0)) throw SingularSystemError("fit_poly3: degenerate design, all g values are equal");

  Matrix design(n, 4);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (g[i] - c) / s;
    design(i, 0) = t * t * t;
    design(i, 1) = t * t;
    design(i, 2) = t;
    design(i, 3) = 1.0;
  }
  const std::vector<double> q = least_squares(design, e);  // q[0] t^3 + q[1] t^2 + q[2] t + q[3]

  // t = a g + b; t^k = sum_j C(k, j) a^j b^(k-j) g^j.
  const double a = 1.0 / s;
  const double b = -c / s;
  const double q3 = q[0], q2 = q[1], q1 = q[2], q0 = q[3];
  FitResult r;
  r.p1 = q3 * a * a * a;
  r.p2 = 3.0 * q3 * a * a * b + q2 * a * a;
  r.p3 = 3.0 * q3 * a * b * b + 2.0 * q2 * a * b + q1 * a;
  r.p4 = q3 * b * b * b + q2 * b * b + q1 * b + q0;
  r.base = base;
  r.n_points = n;

  double sum = 0.0;
  for (double v : e) sum += v;
  r.mean_e = sum / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (g[i] - c) / s;
    const double f = ((q3 * t + q2) * t + q1) * t + q0;
    r.sse += (e[i] - f) * (e[i] - f);
    r.ssr += (f - r.mean_e) * (f - r.mean_e);
    r.sst += (e[i] - r.mean_e) * (e[i] - r.mean_e);
  }
  r.rmse = std::sqrt(r.sse / static_cast<double>(n));
  double scale = 0.0;
  for (double v : e) scale += v * v;
  if (r.sst <= 1e-24 * std::max(1.0, scale)) {
    r.status = FitStatus::Degenerate;
    r.r_square = std::numeric_limits<double>::quiet_NaN();
  } else {
    r.r_square = 1.0 - r.sse / r.sst;
  }
  return r;
}

double evaluate(const FitResult& fit, double block_energy) {
  const double g = log_transform(block_energy, fit.base);
  return ((fit.p1 * g + fit.p2) * g + fit.p3) * g + fit.p4;
}

nlohmann::json to_json(const FitResult& fit) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  return {{"model", "e = p1*g^3 + p2*g^2 + p3*g + p4, g = 1/log(BlockEnergy)"},
          {"log_base", fit.base == LogBase::Natural ? "e" : "10"},
          {"p1", fit.p1},
          {"p2", fit.p2},
          {"p3", fit.p3},
          {"p4", fit.p4},
          {"SSE", fit.sse},
          {"SSR", fit.ssr},
          {"SST", fit.sst},
          {"R_square", num(fit.r_square)},
          {"RMSE", fit.rmse},
          {"mean_e", fit.mean_e},
          {"N", fit.n_points},
          {"status", fit.status == FitStatus::Ok ? "ok" : "degenerate"}};
}

std::string format_fit_table(const FitResult& fit, const std::string& dataset_name) {
  std::ostringstream os;
  os << std::setprecision(4);
  os << "Poly3 fit of e = f(g), g = 1/log" << (fit.base == LogBase::Ten ? "10" : "")
     << "(BlockEnergy)  [" << dataset_name << "]\n";
  os << "  Linear model Poly3     e = " << fit.p1 << "*g^3 + " << fit.p2 << "*g^2 + " << fit.p3
     << "*g + " << fit.p4 << "\n";
  os << "  Error sum of squares   (SSE)  " << fit.sse << "\n";
  os << "  Regression sum of sq.  (SSR)  " << fit.ssr << "\n";
  os << "  Total sum of squares   (SST)  " << fit.sst << "\n";
  os << "  R-square                      ";
  if (fit.status == FitStatus::Ok)
    os << fit.r_square << "\n";
  else
    os << "undefined (degenerate: SST = 0)\n";
  os << "  Root mean squared error (RMSE) " << fit.rmse << "\n";
  os << "  Points                 (N)    " << fit.n_points << "\n";
  return os.str();
}

}  // namespace pcanet
