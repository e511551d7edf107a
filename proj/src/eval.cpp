#include "pcanet/eval.hpp"

#include <cmath>
#include <cstdint>

#include "pcanet/errors.hpp"
#include "pcanet/parallel.hpp"

namespace pcanet {

void LabeledFeatures::validate() const {
  if (features.size() != labels.size())
    throw PreconditionError("labeled features: " + std::to_string(features.size()) +
                            " vectors but " + std::to_string(labels.size()) + " labels");
  for (const auto& f : features)
    if (f.size() != features.front().size())
      throw PreconditionError("labeled features: vectors differ in length");
}

double cosine_distance(double dot, double query_norm2, double candidate_norm2) {
  if (query_norm2 == 0.0) return std::sqrt(std::max(0.0, candidate_norm2));  // Euclidean to 0
  if (candidate_norm2 == 0.0) return 1.0;
  return 1.0 - dot / (std::sqrt(query_norm2) * std::sqrt(candidate_norm2));
}

std::vector<int> classify_from_gram(const std::vector<std::vector<double>>& dots,
                                    const std::vector<double>& test_norm2,
                                    const std::vector<double>& train_norm2,
                                    const std::vector<int>& train_labels) {
  if (train_labels.empty()) throw PreconditionError("classify: empty training set");
  std::vector<int> out(dots.size());
  for (std::size_t q = 0; q < dots.size(); ++q) {
    std::size_t best = 0;
    double best_d = cosine_distance(dots[q][0], test_norm2[q], train_norm2[0]);
    for (std::size_t t = 1; t < train_labels.size(); ++t) {
      const double d = cosine_distance(dots[q][t], test_norm2[q], train_norm2[t]);
      if (d < best_d) {
        best_d = d;
        best = t;
      }
    }
    out[q] = train_labels[best];
  }
  return out;
}

std::vector<int> classify_nn(const LabeledFeatures& train, const LabeledFeatures& test,
                             std::size_t workers) {
  train.validate();
  test.validate();
  if (train.features.empty()) throw PreconditionError("classify_nn: empty training set");
  const std::size_t dim = train.features.front().size();
  for (const auto& f : test.features)
    if (f.size() != dim)
      throw PreconditionError("classify_nn: test feature length " + std::to_string(f.size()) +
                              " != train feature length " + std::to_string(dim));

  auto norm2 = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
  };
  std::vector<double> train_n2(train.features.size());
  for (std::size_t t = 0; t < train_n2.size(); ++t) train_n2[t] = norm2(train.features[t]);
  std::vector<double> test_n2(test.features.size());
  std::vector<std::vector<double>> dots(test.features.size());
  parallel_for(test.features.size(), workers, [&](std::size_t q) {
    const auto& a = test.features[q];
    test_n2[q] = norm2(a);
    dots[q].resize(train.features.size());
    for (std::size_t t = 0; t < train.features.size(); ++t) {
      const auto& b = train.features[t];
      double s = 0.0;
      for (std::size_t k = 0; k < dim; ++k) s += a[k] * b[k];
      dots[q][t] = s;
    }
  });
  return classify_from_gram(dots, test_n2, train_n2, train.labels);
}

HistogramGram histogram_gram(const std::vector<std::vector<Matrix>>& train_maps,
                             const std::vector<std::vector<Matrix>>& test_maps, std::size_t L2,
                             std::size_t h1, std::size_t h2, OverlapRatio R, std::size_t workers) {
  if (train_maps.empty()) throw PreconditionError("histogram_gram: empty training set");
  const std::size_t L1 = train_maps.front().size();
  const std::size_t m = train_maps.front().front().rows();
  const std::size_t n = train_maps.front().front().cols();
  const std::size_t bins = std::size_t{1} << L2;
  const auto pos = block_positions(m, n, h1, h2, R);
  const std::size_t nt = train_maps.size();
  const std::size_t nq = test_maps.size();

  // Histogram of one block, as (bin, count) pairs in ascending bin order.
  auto block_hist = [&](const Matrix& t, const BlockPosition& p, std::vector<std::uint32_t>& dense,
                        std::vector<std::pair<std::uint32_t, std::uint32_t>>& sparse) {
    sparse.clear();
    for (std::size_t dr = 0; dr < h1; ++dr)
      for (std::size_t dc = 0; dc < h2; ++dc) {
        const auto v = static_cast<std::size_t>(t(p.row + dr, p.col + dc));
        if (v >= bins) throw PreconditionError("histogram_gram: decimal value outside 0..2^L2-1");
        ++dense[v];
      }
    for (std::size_t b = 0; b < bins; ++b)
      if (dense[b] != 0) {
        sparse.emplace_back(static_cast<std::uint32_t>(b), dense[b]);
        dense[b] = 0;
      }
  };

  // Training histograms for every (channel, block), stored sparsely.
  using Sparse = std::vector<std::pair<std::uint32_t, std::uint32_t>>;
  const std::size_t cells = L1 * pos.size();
  std::vector<std::vector<Sparse>> train_hist(nt, std::vector<Sparse>(cells));
  std::vector<std::uint64_t> train_n2(nt, 0);
  parallel_for(nt, workers, [&](std::size_t t) {
    std::vector<std::uint32_t> dense(bins, 0);
    for (std::size_t l = 0; l < L1; ++l)
      for (std::size_t j = 0; j < pos.size(); ++j) {
        Sparse& s = train_hist[t][l * pos.size() + j];
        block_hist(train_maps[t][l], pos[j], dense, s);
        for (const auto& [b, c] : s) train_n2[t] += std::uint64_t{c} * c;
      }
  });

  HistogramGram g;
  g.dots.assign(nq, std::vector<double>(nt, 0.0));
  g.test_norm2.assign(nq, 0.0);
  g.train_norm2.resize(nt);
  for (std::size_t t = 0; t < nt; ++t) g.train_norm2[t] = static_cast<double>(train_n2[t]);

  parallel_for(nq, workers, [&](std::size_t q) {
    std::vector<std::uint32_t> dense(bins, 0);
    std::vector<std::uint32_t> lookup(bins, 0);
    Sparse s;
    std::vector<std::uint64_t> acc(nt, 0);
    std::uint64_t qn2 = 0;
    for (std::size_t l = 0; l < L1; ++l)
      for (std::size_t j = 0; j < pos.size(); ++j) {
        block_hist(test_maps[q][l], pos[j], dense, s);
        for (const auto& [b, c] : s) {
          lookup[b] = c;
          qn2 += std::uint64_t{c} * c;
        }
        const std::size_t cell = l * pos.size() + j;
        for (std::size_t t = 0; t < nt; ++t) {
          std::uint64_t d = 0;
          for (const auto& [b, c] : train_hist[t][cell]) d += std::uint64_t{c} * lookup[b];
          acc[t] += d;
        }
        for (const auto& [b, c] : s) lookup[b] = 0;
      }
    for (std::size_t t = 0; t < nt; ++t) g.dots[q][t] = static_cast<double>(acc[t]);
    g.test_norm2[q] = static_cast<double>(qn2);
  });
  return g;
}

double error_rate(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size())
    throw PreconditionError("error_rate: " + std::to_string(predicted.size()) +
                            " predictions for " + std::to_string(truth.size()) + " labels");
  if (truth.empty()) throw PreconditionError("error_rate: no labels");
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) wrong += predicted[i] != truth[i] ? 1 : 0;
  return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

LabeledFeatures extract_features(const TrainedNet& net, const Dataset& data, SplitTag tag,
                                 std::size_t workers) {
  LabeledFeatures lf;
  lf.split_tag = tag;
  lf.labels = data.labels;
  lf.features.resize(data.size());
  parallel_for(data.size(), workers, [&](std::size_t i) {
    lf.features[i] = extract_feature(net, data.images[i]).values;
  });
  return lf;
}

LabeledFeatures raw_pixel_features(const Dataset& data, SplitTag tag) {
  LabeledFeatures lf;
  lf.split_tag = tag;
  lf.labels = data.labels;
  for (const auto& img : data.images) lf.features.emplace_back(img.values().begin(), img.values().end());
  return lf;
}

namespace {

std::vector<std::vector<Matrix>> all_decimal_maps(const TrainedNet& net, const Dataset& d,
                                                  std::size_t workers) {
  std::vector<std::vector<Matrix>> maps(d.size());
  parallel_for(d.size(), workers, [&](std::size_t i) { maps[i] = decimal_maps(net, d.images[i]); });
  return maps;
}

}  // namespace

double evaluate_config(const Dataset& train, const Dataset& test, const NetConfig& config,
                       std::size_t workers, const Classifier& classifier) {
  config.validate_blocks(train.m, train.n);
  const TrainedNet net = pcanet::train(train.images, config, {workers});
  if (classifier) {
    const auto tr = extract_features(net, train, SplitTag::Train, workers);
    const auto te = extract_features(net, test, SplitTag::Test, workers);
    return error_rate(classifier(tr, te), test.labels);
  }
  const auto g = histogram_gram(all_decimal_maps(net, train, workers),
                                all_decimal_maps(net, test, workers), config.L2, config.h1,
                                config.h2, config.R, workers);
  return error_rate(classify_from_gram(g.dots, g.test_norm2, g.train_norm2, train.labels),
                    test.labels);
}

std::size_t AblationReport::feasible_count() const {
  std::size_t c = 0;
  for (const auto& e : entries) c += e.feasible ? 1 : 0;
  return c;
}

std::vector<NetConfig> default_ablation_configs(std::size_t max_h) {
  std::vector<NetConfig> out;
  for (std::size_t h = 1; h <= max_h; ++h) {
    NetConfig c;
    c.L1 = c.L2 = 6;
    c.h1 = c.h2 = h;
    c.R = OverlapRatio::from_tenths(5);
    out.push_back(c);
  }
  return out;
}

AblationReport ablate_second_mean_removal(const Dataset& train, const Dataset& test,
                                          const std::vector<NetConfig>& configs,
                                          std::size_t workers) {
  AblationReport report;
  double sum = 0.0;
  for (NetConfig cfg : configs) {
    AblationEntry entry;
    cfg.skip_second_mean_removal = false;
    entry.config = cfg;
    try {
      cfg.validate_blocks(train.m, train.n);
      entry.e_r = evaluate_config(train, test, cfg, workers);
      cfg.skip_second_mean_removal = true;
      entry.e_wr = evaluate_config(train, test, cfg, workers);
      entry.delta = entry.e_r - entry.e_wr;
      sum += entry.delta;
    } catch (const InfeasibleConfigError& e) {
      entry.feasible = false;
      entry.note = e.what();
    }
    report.entries.push_back(entry);
  }
  const std::size_t k = report.feasible_count();
  report.mean_delta = k > 0 ? sum / static_cast<double>(k) : 0.0;
  return report;
}

nlohmann::json to_json(const AblationReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : report.entries) {
    nlohmann::json r = {{"L1", e.config.L1},
                        {"L2", e.config.L2},
                        {"h1", e.config.h1},
                        {"h2", e.config.h2},
                        {"R", e.config.R.value()},
                        {"status", e.feasible ? "ok" : "infeasible"}};
    if (e.feasible) {
      r["e_r"] = e.e_r;
      r["e_wr"] = e.e_wr;
      r["delta"] = e.delta;
    } else {
      r["note"] = e.note;
    }
    rows.push_back(r);
  }
  return {{"entries", rows},
          {"mean_delta", report.mean_delta},
          {"feasible_configs", report.feasible_count()},
          {"classifier", "1-NN, cosine distance"}};
}

}  // namespace pcanet
