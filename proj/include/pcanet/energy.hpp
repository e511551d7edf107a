#pragma once

// Energy bookkeeping for the pipeline: E(M) = sum of squared entries, the
// ten-entry ledger recorded after each step, the expected sign pattern of the
// step-to-step changes, and the per-overlap-ratio block energy decomposition.

#include <array>
#include <string>
#include <vector>

#include "pcanet/pcanet.hpp"
#include "json.hpp"

namespace pcanet {

double energy(const Matrix& m);

struct EnergyLedger {
  double train_energy = 0.0;
  double patch_energy_1 = 0.0;
  double patch_energy_red_1 = 0.0;
  double pca_energy_1 = 0.0;
  double patch_energy_2 = 0.0;
  double patch_energy_red_2 = 0.0;
  double pca_energy_2 = 0.0;
  double binary_energy = 0.0;
  double weight_sum_energy = 0.0;
  double block_energy = 0.0;

  /// Values in pipeline order, TrainEnergy first.
  std::array<double, 10> values() const;
  static const std::array<const char*, 10>& labels();

  friend bool operator==(const EnergyLedger&, const EnergyLedger&) = default;
};

/// Runs every image through the whole pipeline and sums the energy at each
/// of the ten checkpoints. Per-image contributions are summed in image order.
EnergyLedger record_ledger(const TrainedNet& net, const std::vector<ImageMatrix>& images,
                           std::size_t workers = 1);

enum class EnergyChange { Increase, Decrease, Equal };

char change_symbol(EnergyChange c);

struct StepSignature {
  int step = 0;  // 1..8
  std::string from;
  std::string to;
  double delta = 0.0;
  double relative = 0.0;      // delta / energy_before (0 when both are 0)
  EnergyChange strict;        // sign of delta, Equal only when delta == 0
  EnergyChange observed;      // Equal when |relative| < tolerance
  std::string expected;       // "+", "-", "0", or "+/-"
  bool matches = false;
};

struct SignatureReport {
  double tolerance = 0.05;
  std::vector<StepSignature> steps;
  bool all_match() const;
};

/// Classifies the eight step transitions; |delta|/E_before below `tolerance`
/// counts as unchanged. Expected pattern: + - +/- + 0 - - +.
SignatureReport check_signature(const EnergyLedger& ledger, double tolerance = 0.05);

struct OverlapDecomposition {
  std::size_t h1 = 0;
  std::size_t h2 = 0;
  std::array<double, 10> per_R_block_energy{};  // BlockEnergy at R = 0.0 ... 0.9
  std::array<double, 10> per_R_increment{};     // energy of positions first seen at that R
  std::array<int, 10> increment_source{};       // R (tenths) behind each sorted increment
  std::array<double, 10> increments{};          // per_R_increment sorted descending
  std::array<double, 10> cumulative{};
  std::array<double, 10> cumulative_ratio{};
  double union_energy = 0.0;  // sum of increments

  static constexpr const char* kAttributionRule =
      "each block position (top-left row, col) is attributed to the smallest R at which it "
      "appears; increments are sorted descending and accumulated";
};

/// Block energy of the decimal maps for every R on the grid, with the
/// position-set increment attribution described by kAttributionRule. The
/// cumulative ratio is taken against the sum of all increments, which equals
/// the R = 0.9 block energy whenever the R = 0.9 stride is 1.
OverlapDecomposition overlap_decomposition(const TrainedNet& net,
                                           const std::vector<ImageMatrix>& images, std::size_t h1,
                                           std::size_t h2, std::size_t workers = 1);

/// Per-filter cumulative energies and eigenvalue shares for one stage.
struct FilterRatioRow {
  std::size_t count = 0;  // filters used: 1..L
  double energy_sum = 0.0;
  double energy_ratio = 0.0;  // against the full-width (Parseval) patch energy
  double eigenvalue = 0.0;
  double eigenvalue_sum = 0.0;
  double eigenvalue_ratio = 0.0;
};

struct FilterRatioTable {
  std::vector<FilterRatioRow> stage1;
  std::vector<FilterRatioRow> stage2;
};

/// Energy-ratio and eigenvalue-ratio diagnostics for both filter banks.
/// Stage-1 energy of filter l is sum_i E(I_i * W1_l); stage-2 energy of filter
/// ell is sum_{i,l} E(I1_{i,l} * W2_ell). Ratios use PatchEnergy1 and
/// PatchEnergy2 as the full-width totals.
FilterRatioTable filter_ratios(const TrainedNet& net, const std::vector<ImageMatrix>& images);

nlohmann::json to_json(const EnergyLedger& ledger);
EnergyLedger ledger_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SignatureReport& report);
nlohmann::json to_json(const OverlapDecomposition& d);
nlohmann::json to_json(const FilterRatioTable& t);

}  // namespace pcanet
