#pragma once

// Two-stage PCA network with binary hashing and block-wise histograms.
//
// Stage 1 and stage 2 each learn a bank of k1 x k2 filters from the leading
// eigenvectors of a patch covariance. The output stage binarizes the stage-2
// responses, packs each group of L2 bits into an integer map per stage-1
// channel, and histograms those maps over sliding h1 x h2 blocks.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "pcanet/numcore.hpp"

namespace pcanet {

using ImageMatrix = Matrix;

/// Block overlap ratio restricted to {0.0, 0.1, ..., 0.9}, stored in tenths so
/// stride arithmetic stays exact.
class OverlapRatio {
 public:
  constexpr OverlapRatio() = default;
  static OverlapRatio from_tenths(int tenths);
  /// Accepts values within 1e-9 of a grid point.
  static OverlapRatio from_value(double r);
  static std::vector<OverlapRatio> grid();

  constexpr int tenths() const { return tenths_; }
  constexpr double value() const { return tenths_ / 10.0; }
  std::string str() const;  // "0.5"

  friend constexpr auto operator<=>(OverlapRatio, OverlapRatio) = default;

 private:
  constexpr explicit OverlapRatio(int tenths) : tenths_(tenths) {}
  int tenths_ = 0;
};

struct NetConfig {
  std::size_t k1 = 3;
  std::size_t k2 = 3;
  std::size_t L1 = 8;
  std::size_t L2 = 8;
  std::size_t h1 = 8;
  std::size_t h2 = 8;
  OverlapRatio R = OverlapRatio::from_tenths(5);
  bool skip_second_mean_removal = false;

  /// Checks the bounds that do not depend on image size (odd k, 1 <= L <= k1*k2).
  void validate() const;
  /// Additionally checks 1 <= h1 <= m and 1 <= h2 <= n; throws InfeasibleConfigError.
  void validate_blocks(std::size_t m, std::size_t n) const;

  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

struct FilterBank {
  std::vector<Matrix> filters;      // each k1 x k2, vectorization has unit norm
  std::vector<double> eigenvalues;  // one per filter, non-increasing
  double eigenvalue_total = 0.0;    // trace of the full covariance

  /// Cumulative eigenvalue share of the first `count` filters.
  double eigenvalue_ratio(std::size_t count) const;

  friend bool operator==(const FilterBank&, const FilterBank&) = default;
};

struct TrainedNet {
  NetConfig config;
  std::size_t rows = 0;  // training image size m x n
  std::size_t cols = 0;
  FilterBank stage1;
  FilterBank stage2;
  /// Non-fatal training diagnostics (for example a zero covariance). Not serialized.
  std::vector<std::string> warnings;

  void require_image(const ImageMatrix& image) const;
};

struct TrainOptions {
  std::size_t workers = 1;
};

/// Learns both filter banks. The stage-2 covariance is averaged over all
/// N*L1*m*n stage-2 patch columns.
TrainedNet train(const std::vector<ImageMatrix>& images, const NetConfig& config,
                 const TrainOptions& options = {});

struct StageOutputs {
  std::vector<Matrix> stage1;  // L1 maps
  std::vector<Matrix> stage2;  // L1*L2 maps, index l * L2 + ell
};

StageOutputs forward_stage_outputs(const TrainedNet& net, const ImageMatrix& image);

/// Heaviside with H(0) = 0.
Matrix binarize(const Matrix& stage2_output);

/// T = sum_ell 2^(ell-1) * P_ell.
Matrix weight_and_sum(const std::vector<Matrix>& binary_maps);

/// Decimal (hashed) maps T_l for every stage-1 channel, l ascending.
std::vector<Matrix> decimal_maps(const TrainedNet& net, const ImageMatrix& image);

struct BlockPosition {
  std::size_t row = 0;
  std::size_t col = 0;
  friend auto operator<=>(const BlockPosition&, const BlockPosition&) = default;
};

/// max(1, round_half_up((1 - R) * h)).
std::size_t block_stride(std::size_t h, OverlapRatio R);

/// Top-left block corners, row-major scan. Throws InfeasibleConfigError when
/// the block does not fit in the map.
std::vector<BlockPosition> block_positions(std::size_t m, std::size_t n, std::size_t h1,
                                           std::size_t h2, OverlapRatio R);

/// (h1*h2) x B matrix, block j vectorized column-major into column j.
Matrix block_slide(const Matrix& map, std::size_t h1, std::size_t h2, OverlapRatio R);

struct FeatureVector {
  std::vector<double> values;
  std::size_t block_count = 0;
  std::size_t bins = 0;
};

/// Concatenated block histograms: channel-major, then block, then bin.
FeatureVector extract_feature(const TrainedNet& net, const ImageMatrix& image);

/// Histogram features from precomputed decimal maps with explicit block
/// parameters; extract_feature is this applied to decimal_maps(net, image).
FeatureVector histogram_feature(const std::vector<Matrix>& maps, std::size_t L2, std::size_t h1,
                                std::size_t h2, OverlapRatio R);

// Binary model file, little-endian:
//   "PCN1", u32 k1, k2, L1, L2, m, n,
//   stage-1 filters (L1 * k1*k2 f64, each filter row-major), L1 f64 eigenvalues,
//   stage-2 filters (L2 * k1*k2 f64), L2 f64 eigenvalues,
//   trailer: f64 stage-1 eigenvalue total, f64 stage-2 eigenvalue total,
//            u32 h1, u32 h2, u32 R in tenths, u32 skip-second-mean-removal flag.
void save_net(const TrainedNet& net, const std::filesystem::path& path);
TrainedNet load_net(const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_net(const TrainedNet& net);
TrainedNet deserialize_net(const std::vector<std::uint8_t>& bytes);

}  // namespace pcanet
