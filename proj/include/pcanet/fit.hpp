#pragma once

// Cubic regression of error rate on g = 1 / log(BlockEnergy):
//   e = p1 g^3 + p2 g^2 + p3 g + p4
// with SSE, SSR, SST, R^2 and RMSE (RMSE divides by N, not N - 4).

#include <cstddef>
#include <span>
#include <string>

#include "json.hpp"

namespace pcanet {

enum class LogBase { Natural, Ten };

struct FitPoint {
  double block_energy = 0.0;
  double e = 0.0;
};

enum class FitStatus { Ok, Degenerate };

struct FitResult {
  double p1 = 0.0, p2 = 0.0, p3 = 0.0, p4 = 0.0;
  double sse = 0.0, ssr = 0.0, sst = 0.0;
  double r_square = 0.0;  // NaN when status is Degenerate (SST == 0)
  double rmse = 0.0;
  double mean_e = 0.0;
  std::size_t n_points = 0;
  LogBase base = LogBase::Natural;
  FitStatus status = FitStatus::Ok;
};

double log_transform(double block_energy, LogBase base);

FitResult fit_poly3(std::span<const FitPoint> points, LogBase base = LogBase::Natural);

double evaluate(const FitResult& fit, double block_energy);

nlohmann::json to_json(const FitResult& fit);

/// Text table with one row per criterion (model, SSE, SSR, SST, R-square, RMSE, N).
std::string format_fit_table(const FitResult& fit, const std::string& dataset_name);

}  // namespace pcanet
