#pragma once

// Dataset container, seeded splitting and the synthetic texture generator.
//
// Container layout (".pcn"):
//   line 1: JSON header {"name": str, "m": int, "n": int, "count": int,
//                        "dtype": "u8" | "f64"} terminated by '\n'
//   then count*m*n pixels, image-major, row-major, little-endian
//   then count int32 little-endian labels
// CSV fallback: one image per line, "label,p(0,0),p(0,1),...,p(m-1,n-1)".

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "pcanet/pcanet.hpp"

namespace pcanet {

struct Dataset {
  std::string name;
  std::size_t m = 0;
  std::size_t n = 0;
  std::vector<ImageMatrix> images;
  std::vector<int> labels;

  std::size_t size() const { return images.size(); }
  std::size_t class_count() const;
  /// Checks the container invariants (matching lengths, uniform image size).
  void validate() const;
  Dataset subset(const std::vector<std::size_t>& indices, const std::string& suffix) const;
};

enum class PixelType { U8, F64 };

Dataset load_dataset(const std::filesystem::path& path,
                     std::optional<std::pair<std::size_t, std::size_t>> csv_dims = std::nullopt);
void save_dataset(const Dataset& d, const std::filesystem::path& path, PixelType dtype);

std::vector<std::uint8_t> encode_dataset(const Dataset& d, PixelType dtype);
Dataset decode_dataset(const std::vector<std::uint8_t>& bytes);
Dataset parse_csv_dataset(const std::string& text, const std::string& name,
                          std::optional<std::pair<std::size_t, std::size_t>> dims = std::nullopt);

/// FNV-1a 64-bit over the encoded f64 container; used in run manifests.
std::uint64_t content_hash(const Dataset& d);

struct SplitSpec {
  std::size_t train_count = 0;
  std::size_t test_count = 0;
  std::uint64_t seed = 0;
  bool stratified = true;
};

struct Split {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

/// Seeded, platform-independent shuffle. Stratified mode allocates per-class
/// counts proportionally (largest remainder) and samples inside each class.
Split split_dataset(const Dataset& d, const SplitSpec& spec);

struct SynthOptions {
  /// Ratio of grating RMS to per-pixel noise RMS. Infinity disables noise.
  double snr = 1.0;
  /// Maximum random translation of the layout, in pixels, per axis.
  std::size_t max_shift = 2;
  /// Per-image contrast gain is drawn from [1 - gain_jitter, 1 + gain_jitter].
  double gain_jitter = 0.2;
  /// Fresh grating phase per image and cell; off makes every image of a class
  /// identical up to shift, gain and noise.
  bool random_phase = true;
  std::size_t cells = 4;  // layout is cells x cells
  double min_period = 2.2;
  double max_period = 3.5;
  double background = 0.0;
  double amplitude = 60.0;
};

/// Class-separable synthetic images with zero-centred intensities. Each class
/// owns a cells x cells layout of oriented gratings (orientation and period
/// drawn per cell). Each image renders that layout with a random translation,
/// a fresh phase per cell, a gain jitter and additive Gaussian noise.
/// Deterministic for fixed arguments.
Dataset synth(std::size_t classes, std::size_t per_class, std::size_t m, std::size_t n,
              std::uint64_t seed, const SynthOptions& options = {});

/// Deterministic integer/normal draws on top of std::mt19937_64 (whose output
/// sequence is fixed by the standard, unlike the std distributions).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, bound) by rejection.
  std::uint64_t below(std::uint64_t bound);
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace pcanet
