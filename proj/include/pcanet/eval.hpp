#pragma once

// Nearest-neighbour classification on feature vectors, error rates, and the
// second-mean-removal ablation.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pcanet/dataio.hpp"
#include "pcanet/pcanet.hpp"

namespace pcanet {

enum class SplitTag { Train, Test };

struct LabeledFeatures {
  std::vector<std::vector<double>> features;
  std::vector<int> labels;
  SplitTag split_tag = SplitTag::Train;

  void validate() const;
};

/// Cosine distance 1 - <a,b> / (|a||b|) from a dot product and squared norms.
/// A zero query falls back to Euclidean distance against every candidate; a
/// zero candidate against a non-zero query sits at distance 1.
double cosine_distance(double dot, double query_norm2, double candidate_norm2);

/// Nearest neighbour under cosine distance; ties go to the lowest training
/// index. Test vectors are processed in parallel against a read-only train set.
std::vector<int> classify_nn(const LabeledFeatures& train, const LabeledFeatures& test,
                             std::size_t workers = 1);

/// Nearest neighbour from precomputed Gram entries: dots[q][t] = <test q, train t>.
std::vector<int> classify_from_gram(const std::vector<std::vector<double>>& dots,
                                    const std::vector<double>& test_norm2,
                                    const std::vector<double>& train_norm2,
                                    const std::vector<int>& train_labels);

/// Histogram inner products computed straight from decimal maps, without
/// materializing feature vectors. maps[i] holds the L1 decimal maps of image i.
/// Entries are exact integers, so the result equals the dense computation bit
/// for bit.
struct HistogramGram {
  std::vector<std::vector<double>> dots;  // [test][train]
  std::vector<double> test_norm2;
  std::vector<double> train_norm2;
};

HistogramGram histogram_gram(const std::vector<std::vector<Matrix>>& train_maps,
                             const std::vector<std::vector<Matrix>>& test_maps, std::size_t L2,
                             std::size_t h1, std::size_t h2, OverlapRatio R,
                             std::size_t workers = 1);

/// Slot for alternative classifiers (an SVM, for instance).
using Classifier =
    std::function<std::vector<int>(const LabeledFeatures& train, const LabeledFeatures& test)>;

double error_rate(const std::vector<int>& predicted, const std::vector<int>& truth);

LabeledFeatures extract_features(const TrainedNet& net, const Dataset& data, SplitTag tag,
                                 std::size_t workers = 1);

LabeledFeatures raw_pixel_features(const Dataset& data, SplitTag tag);

/// Trains on `train`, extracts features for both sets, classifies `test` and
/// returns its error rate.
double evaluate_config(const Dataset& train, const Dataset& test, const NetConfig& config,
                       std::size_t workers = 1, const Classifier& classifier = {});

struct AblationEntry {
  NetConfig config;
  bool feasible = true;
  std::string note;      // reason when skipped
  double e_r = 0.0;      // with second mean removal
  double e_wr = 0.0;     // without
  double delta = 0.0;    // e_r - e_wr
};

struct AblationReport {
  std::vector<AblationEntry> entries;
  double mean_delta = 0.0;  // over feasible entries
  std::size_t feasible_count() const;
};

/// The default config family: L1 = L2 = 6, R = 0.5, h1 = h2 in 1..32.
std::vector<NetConfig> default_ablation_configs(std::size_t max_h = 32);

AblationReport ablate_second_mean_removal(const Dataset& train, const Dataset& test,
                                          const std::vector<NetConfig>& configs,
                                          std::size_t workers = 1);

nlohmann::json to_json(const AblationReport& report);

}  // namespace pcanet
