#pragma once

// Hyperparameter grid sweep over (L1, L2, h1, h2, R) with resumable
// checkpoints, plus the least-error and fixed-block error-grid analyses.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pcanet/dataio.hpp"
#include "pcanet/pcanet.hpp"

namespace pcanet {

enum class H2Mode { Explicit, Diagonal };

struct SweepGrid {
  std::vector<std::size_t> L1_range;
  std::vector<std::size_t> L2_range;
  std::vector<std::size_t> h1_range;
  std::vector<std::size_t> h2_range;  // Explicit mode only
  H2Mode h2_mode = H2Mode::Diagonal;
  std::vector<OverlapRatio> R_range;
  std::size_t k = 3;
  std::uint64_t seed = 0;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
  bool stratified = true;

  void validate() const;
  /// Every grid point in canonical (L1, L2, h1, h2, R) order. In diagonal mode
  /// h2 = floor(n * h1 / m).
  std::vector<NetConfig> points(std::size_t m, std::size_t n) const;

  /// The full diagonal grid L1, L2 in 1..9, h1 in 1..32, all ten R values.
  static SweepGrid paper_diagonal();
};

SweepGrid grid_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SweepGrid& g);

enum class RecordStatus { Ok, Infeasible };

struct SweepRecord {
  NetConfig config;
  double e = 1.0;
  std::optional<double> block_energy;  // absent when infeasible
  RecordStatus status = RecordStatus::Ok;
  double wall_time = 0.0;
};

/// Canonical ordering key.
bool record_less(const SweepRecord& a, const SweepRecord& b);

struct SweepOptions {
  std::size_t workers = 1;
  /// Train once per (L1, L2) and reuse across block parameters.
  bool cache_filters = true;
  /// Final CSV path. Progress is appended to "<path>.partial" and the grid
  /// identity is written to "<path>.grid.json".
  std::optional<std::filesystem::path> output;
  bool resume = false;
  std::size_t checkpoint_every = 100;
  /// Stop after computing this many new points (simulates an interruption).
  std::optional<std::size_t> max_new_points;
  /// Wall times make outputs run-dependent; off writes 0.
  bool record_wall_time = false;
  /// Identity string stored in the grid sidecar (dataset name and hash).
  std::string dataset_identity;
};

struct SweepOutcome {
  std::vector<SweepRecord> records;  // canonical order
  bool complete = false;
  std::size_t computed = 0;  // points evaluated in this run
  std::size_t resumed = 0;   // points loaded from a checkpoint
};

SweepOutcome run_sweep(const Dataset& train, const Dataset& test, const SweepGrid& grid,
                       const SweepOptions& options = {});

inline constexpr const char* kRecordCsvHeader = "L1,L2,h1,h2,R,e,block_energy,status,wall_time";
void write_records_csv(std::ostream& out, const std::vector<SweepRecord>& records,
                       bool header = true);
std::vector<SweepRecord> read_records_csv(std::istream& in);
std::vector<SweepRecord> read_records_csv(const std::filesystem::path& path);

struct ArgminEntry {
  std::size_t L1 = 0, L2 = 0;
  std::optional<OverlapRatio> R;  // empty when minimized over all R
  std::size_t h2 = 0;
  std::size_t h1 = 0;
  OverlapRatio best_R;
  double e = 1.0;
};

struct LeastErrorCell {
  std::size_t L1 = 0, L2 = 0;
  OverlapRatio R;
  double e_l = 1.0;   // least error over the whole (h1, h2) rectangle
  double e_la = 1.0;  // least error on the diagonal h2 = floor(n h1 / m)
  double difference = 0.0;  // e_la - e_l
};

struct LeastErrorAnalysis {
  std::vector<ArgminEntry> argmin_per_R;    // per (L1, L2, R, h2)
  std::vector<ArgminEntry> argmin_over_R;   // per (L1, L2, h2)
  std::vector<LeastErrorCell> cells;        // per (L1, L2, R)
  double mean_difference = 0.0;
  double min_difference = 0.0;
};

/// Needs full-rectangle coverage: every (L1, L2, R) cell must hold every
/// (h1, h2) pair seen anywhere in the records. Ties go to the smallest h1,
/// then the smallest R.
LeastErrorAnalysis least_error_analysis(const std::vector<SweepRecord>& records, std::size_t m,
                                        std::size_t n);

struct ErrorGrid {
  std::size_t h1 = 0, h2 = 0;
  OverlapRatio R;
  std::vector<std::size_t> L1_values, L2_values;
  std::vector<std::vector<double>> e;  // [L1 index][L2 index]
};

ErrorGrid error_grid(const std::vector<SweepRecord>& records, std::size_t h1, std::size_t h2,
                     OverlapRatio R, const std::vector<std::size_t>& L1_values = {1, 2, 3, 4, 5, 6, 7, 8, 9},
                     const std::vector<std::size_t>& L2_values = {1, 2, 3, 4, 5, 6, 7, 8, 9});

nlohmann::json to_json(const LeastErrorAnalysis& a);
nlohmann::json to_json(const ErrorGrid& g);

}  // namespace pcanet
