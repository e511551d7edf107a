#include "pcanet/energy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "pcanet/errors.hpp"
#include "pcanet/parallel.hpp"

namespace pcanet {

double energy(const Matrix& m) {
  double s = 0.0;
  for (double v : m.values()) s += v * v;
  return s;
}

std::array<double, 10> EnergyLedger::values() const {
  return {train_energy,   patch_energy_1, patch_energy_red_1, pca_energy_1,      patch_energy_2,
          patch_energy_red_2, pca_energy_2, binary_energy,    weight_sum_energy, block_energy};
}

const std::array<const char*, 10>& EnergyLedger::labels() {
  static const std::array<const char*, 10> kLabels = {
      "TrainEnergy",  "PatchEnergy1", "PatchEnergyRed1", "PCAEnergy1",      "PatchEnergy2",
      "PatchEnergyRed2", "PCAEnergy2", "BinaryEnergy",   "WeightSumEnergy", "BlockEnergy"};
  return kLabels;
}

EnergyLedger record_ledger(const TrainedNet& net, const std::vector<ImageMatrix>& images,
                           std::size_t workers) {
  if (images.empty()) throw PreconditionError("record_ledger: no images");
  const NetConfig& cfg = net.config;
  cfg.validate_blocks(net.rows, net.cols);
  for (const auto& img : images) net.require_image(img);

  const std::size_t L2 = net.stage2.filters.size();
  std::vector<EnergyLedger> parts(images.size());
  parallel_for(images.size(), workers, [&](std::size_t i) {
    EnergyLedger& e = parts[i];
    const ImageMatrix& img = images[i];
    e.train_energy = energy(img);
    const Matrix x = extract_patches(img, cfg.k1, cfg.k2);
    e.patch_energy_1 = energy(x);
    e.patch_energy_red_1 = energy(remove_patch_mean(x));

    const StageOutputs outs = forward_stage_outputs(net, img);
    for (std::size_t l = 0; l < outs.stage1.size(); ++l) {
      const Matrix& s1 = outs.stage1[l];
      e.pca_energy_1 += energy(s1);
      const Matrix y = extract_patches(s1, cfg.k1, cfg.k2);
      const double ey = energy(y);
      e.patch_energy_2 += ey;
      e.patch_energy_red_2 += cfg.skip_second_mean_removal ? ey : energy(remove_patch_mean(y));

      std::vector<Matrix> bits;
      bits.reserve(L2);
      for (std::size_t k = 0; k < L2; ++k) {
        const Matrix& s2 = outs.stage2[l * L2 + k];
        e.pca_energy_2 += energy(s2);
        bits.push_back(binarize(s2));
        e.binary_energy += energy(bits.back());
      }
      const Matrix t = weight_and_sum(bits);
      e.weight_sum_energy += energy(t);
      e.block_energy += energy(block_slide(t, cfg.h1, cfg.h2, cfg.R));
    }
  });

  EnergyLedger total;
  for (const EnergyLedger& p : parts) {
    total.train_energy += p.train_energy;
    total.patch_energy_1 += p.patch_energy_1;
    total.patch_energy_red_1 += p.patch_energy_red_1;
    total.pca_energy_1 += p.pca_energy_1;
    total.patch_energy_2 += p.patch_energy_2;
    total.patch_energy_red_2 += p.patch_energy_red_2;
    total.pca_energy_2 += p.pca_energy_2;
    total.binary_energy += p.binary_energy;
    total.weight_sum_energy += p.weight_sum_energy;
    total.block_energy += p.block_energy;
  }
  return total;
}

char change_symbol(EnergyChange c) {
  switch (c) {
    case EnergyChange::Increase: return '+';
    case EnergyChange::Decrease: return '-';
    case EnergyChange::Equal: return '0';
  }
  return '?';
}

bool SignatureReport::all_match() const {
  return std::all_of(steps.begin(), steps.end(), [](const StepSignature& s) { return s.matches; });
}

SignatureReport check_signature(const EnergyLedger& ledger, double tolerance) {
  static constexpr std::array<const char*, 8> kExpected = {"+", "-", "+/-", "+", "0", "-", "-", "+"};
  const auto v = ledger.values();
  const auto& names = EnergyLedger::labels();
  SignatureReport report;
  report.tolerance = tolerance;
  for (int s = 0; s < 8; ++s) {
    StepSignature st;
    st.step = s + 1;
    st.from = names[s];
    st.to = names[s + 1];
    const double before = v[s];
    const double after = v[s + 1];
    st.delta = after - before;
    if (before != 0.0)
      st.relative = st.delta / before;
    else
      st.relative = st.delta == 0.0 ? 0.0 : std::copysign(INFINITY, st.delta);
    st.strict = st.delta > 0.0   ? EnergyChange::Increase
                : st.delta < 0.0 ? EnergyChange::Decrease
                                 : EnergyChange::Equal;
    st.observed = std::abs(st.relative) < tolerance ? EnergyChange::Equal : st.strict;
    st.expected = kExpected[s];
    if (st.expected == "+/-")
      st.matches = true;
    else
      st.matches = st.expected[0] == change_symbol(st.observed);
    report.steps.push_back(st);
  }
  return report;
}

namespace {

// Summed-area table over a map; window sums are exact for integer inputs.
class IntegralImage {
 public:
  explicit IntegralImage(const Matrix& m) : rows_(m.rows()), cols_(m.cols()),
                                            s_((m.rows() + 1) * (m.cols() + 1), 0.0) {
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c)
        at(r + 1, c + 1) = m(r, c) + at(r, c + 1) + at(r + 1, c) - at(r, c);
  }
  double window(std::size_t r, std::size_t c, std::size_t h1, std::size_t h2) const {
    return at(r + h1, c + h2) - at(r, c + h2) - at(r + h1, c) + at(r, c);
  }

 private:
  double& at(std::size_t r, std::size_t c) { return s_[r * (cols_ + 1) + c]; }
  double at(std::size_t r, std::size_t c) const { return s_[r * (cols_ + 1) + c]; }
  std::size_t rows_, cols_;
  std::vector<double> s_;
};

}  // namespace

OverlapDecomposition overlap_decomposition(const TrainedNet& net,
                                           const std::vector<ImageMatrix>& images, std::size_t h1,
                                           std::size_t h2, std::size_t workers) {
  if (images.empty()) throw PreconditionError("overlap_decomposition: no images");
  // Feasibility first so the error names the block, not a pipeline stage.
  (void)block_positions(net.rows, net.cols, h1, h2, OverlapRatio::from_tenths(0));

  // Squared decimal maps summed over images and channels; every block energy
  // is a window sum of this map. Entries are integers, so sums are exact.
  std::vector<Matrix> per_image(images.size());
  parallel_for(images.size(), workers, [&](std::size_t i) {
    Matrix acc(net.rows, net.cols);
    for (const Matrix& t : decimal_maps(net, images[i])) {
      auto a = acc.values();
      auto tv = t.values();
      for (std::size_t k = 0; k < a.size(); ++k) a[k] += tv[k] * tv[k];
    }
    per_image[i] = std::move(acc);
  });
  Matrix squared(net.rows, net.cols);
  for (const Matrix& m : per_image) {
    auto a = squared.values();
    auto b = m.values();
    for (std::size_t k = 0; k < a.size(); ++k) a[k] += b[k];
  }
  const IntegralImage sat(squared);

  OverlapDecomposition d;
  d.h1 = h1;
  d.h2 = h2;
  std::set<BlockPosition> seen;
  for (const OverlapRatio R : OverlapRatio::grid()) {
    const int t = R.tenths();
    for (const BlockPosition& p : block_positions(net.rows, net.cols, h1, h2, R)) {
      const double w = sat.window(p.row, p.col, h1, h2);
      d.per_R_block_energy[t] += w;
      if (seen.insert(p).second) d.per_R_increment[t] += w;
    }
  }

  std::array<int, 10> order{};
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return d.per_R_increment[a] > d.per_R_increment[b]; });
  double running = 0.0;
  for (std::size_t k = 0; k < 10; ++k) {
    d.increment_source[k] = order[k];
    d.increments[k] = d.per_R_increment[order[k]];
    running += d.increments[k];
    d.cumulative[k] = running;
  }
  d.union_energy = running;
  for (std::size_t k = 0; k < 10; ++k)
    d.cumulative_ratio[k] = running > 0.0 ? d.cumulative[k] / running : 1.0;
  return d;
}

FilterRatioTable filter_ratios(const TrainedNet& net, const std::vector<ImageMatrix>& images) {
  if (images.empty()) throw PreconditionError("filter_ratios: no images");
  const NetConfig& cfg = net.config;
  const std::size_t L1 = net.stage1.filters.size();
  const std::size_t L2 = net.stage2.filters.size();
  std::vector<double> e1(L1, 0.0), e2(L2, 0.0);
  double patch1 = 0.0, patch2 = 0.0;
  for (const ImageMatrix& img : images) {
    patch1 += energy(extract_patches(img, cfg.k1, cfg.k2));
    const StageOutputs outs = forward_stage_outputs(net, img);
    for (std::size_t l = 0; l < L1; ++l) {
      e1[l] += energy(outs.stage1[l]);
      patch2 += energy(extract_patches(outs.stage1[l], cfg.k1, cfg.k2));
      for (std::size_t k = 0; k < L2; ++k) e2[k] += energy(outs.stage2[l * L2 + k]);
    }
  }
  auto build = [](const std::vector<double>& e, double full, const FilterBank& bank) {
    std::vector<FilterRatioRow> rows;
    double es = 0.0, ls = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      es += e[i];
      ls += bank.eigenvalues[i];
      FilterRatioRow r;
      r.count = i + 1;
      r.energy_sum = es;
      r.energy_ratio = full > 0.0 ? es / full : 0.0;
      r.eigenvalue = bank.eigenvalues[i];
      r.eigenvalue_sum = ls;
      r.eigenvalue_ratio = bank.eigenvalue_total > 0.0 ? ls / bank.eigenvalue_total : 0.0;
      rows.push_back(r);
    }
    return rows;
  };
  return {build(e1, patch1, net.stage1), build(e2, patch2, net.stage2)};
}

nlohmann::json to_json(const EnergyLedger& ledger) {
  nlohmann::json j = nlohmann::json::object();
  const auto v = ledger.values();
  for (std::size_t i = 0; i < v.size(); ++i) j[EnergyLedger::labels()[i]] = v[i];
  return j;
}

EnergyLedger ledger_from_json(const nlohmann::json& j) {
  EnergyLedger l;
  std::array<double*, 10> slots = {&l.train_energy,      &l.patch_energy_1, &l.patch_energy_red_1,
                                   &l.pca_energy_1,      &l.patch_energy_2, &l.patch_energy_red_2,
                                   &l.pca_energy_2,      &l.binary_energy,  &l.weight_sum_energy,
                                   &l.block_energy};
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const char* key = EnergyLedger::labels()[i];
    if (!j.contains(key)) throw ParseError(std::string("ledger JSON is missing ") + key);
    *slots[i] = j.at(key).get<double>();
  }
  return l;
}

nlohmann::json to_json(const SignatureReport& report) {
  nlohmann::json steps = nlohmann::json::array();
  for (const StepSignature& s : report.steps) {
    steps.push_back({{"step", s.step},
                     {"from", s.from},
                     {"to", s.to},
                     {"delta", s.delta},
                     {"relative_change", std::isfinite(s.relative) ? nlohmann::json(s.relative)
                                                                   : nlohmann::json(nullptr)},
                     {"strict_sign", std::string(1, change_symbol(s.strict))},
                     {"observed", std::string(1, change_symbol(s.observed))},
                     {"expected", s.expected},
                     {"matches", s.matches}});
  }
  return {{"tolerance", report.tolerance}, {"all_match", report.all_match()}, {"steps", steps}};
}

nlohmann::json to_json(const OverlapDecomposition& d) {
  nlohmann::json per_r = nlohmann::json::array();
  for (int t = 0; t < 10; ++t)
    per_r.push_back({{"R", t / 10.0},
                     {"BlockEnergy", d.per_R_block_energy[t]},
                     {"increment", d.per_R_increment[t]}});
  nlohmann::json ranked = nlohmann::json::array();
  for (std::size_t k = 0; k < 10; ++k)
    ranked.push_back({{"rank", k + 1},
                      {"R", d.increment_source[k] / 10.0},
                      {"increment", d.increments[k]},
                      {"cumulative", d.cumulative[k]},
                      {"ratio", d.cumulative_ratio[k]}});
  return {{"h1", d.h1},
          {"h2", d.h2},
          {"attribution_rule", OverlapDecomposition::kAttributionRule},
          {"per_R", per_r},
          {"ranked", ranked},
          {"union_energy", d.union_energy}};
}

nlohmann::json to_json(const FilterRatioTable& t) {
  auto rows = [](const std::vector<FilterRatioRow>& rs) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& r : rs)
      a.push_back({{"filters", r.count},
                   {"energy_sum", r.energy_sum},
                   {"energy_ratio", r.energy_ratio},
                   {"eigenvalue", r.eigenvalue},
                   {"eigenvalue_sum", r.eigenvalue_sum},
                   {"eigenvalue_ratio", r.eigenvalue_ratio}});
    return a;
  };
  return {{"stage1", rows(t.stage1)}, {"stage2", rows(t.stage2)}};
}

}  // namespace pcanet
