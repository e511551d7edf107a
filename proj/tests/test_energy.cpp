#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "pcanet/dataio.hpp"
#include "pcanet/energy.hpp"
#include "pcanet/errors.hpp"

using namespace pcanet;

namespace {

NetConfig cfg(std::size_t L1, std::size_t L2, std::size_t h = 8, int tenths = 5) {
  NetConfig c;
  c.L1 = L1;
  c.L2 = L2;
  c.h1 = c.h2 = h;
  c.R = OverlapRatio::from_tenths(tenths);
  return c;
}

const Dataset& data() {
  static const Dataset d = synth(5, 6, 32, 32, 17);
  return d;
}

}  // namespace

TEST(Energy, Examples) {
  EXPECT_EQ(energy(Matrix::from_rows({{1, 2}, {3, 4}})), 30.0);
  EXPECT_EQ(energy(Matrix(3, 2, 0.0)), 0.0);
}

TEST(Ledger, ZeroImage) {
  const TrainedNet net = train({Matrix(16, 16, 0.0)}, cfg(2, 2, 4));
  const EnergyLedger l = record_ledger(net, {Matrix(16, 16, 0.0)});
  for (double v : l.values()) EXPECT_EQ(v, 0.0);
}

TEST(Ledger, ParsevalAtFullWidth) {
  const TrainedNet net = train(data().images, cfg(9, 2));
  const EnergyLedger l = record_ledger(net, data().images);
  // A full orthonormal bank is a change of basis of the raw patches.
  EXPECT_NEAR(l.pca_energy_1, l.patch_energy_1, 1e-9 * l.patch_energy_1);
}

TEST(Ledger, StructuralIdentities) {
  const TrainedNet net = train(data().images, cfg(4, 4));
  const EnergyLedger l = record_ledger(net, data().images);
  EXPECT_LE(l.patch_energy_red_1, l.patch_energy_1);
  EXPECT_LE(l.patch_energy_red_2, l.patch_energy_2);
  EXPECT_LE(l.pca_energy_1, l.patch_energy_1 * (1 + 1e-12));
  EXPECT_LE(l.pca_energy_2, l.patch_energy_2 * (1 + 1e-12));
  EXPECT_LE(l.binary_energy, l.weight_sum_energy);
  // Binary energy is the count of positive stage-2 responses.
  double positives = 0.0;
  for (const auto& img : data().images) {
    const auto outs = forward_stage_outputs(net, img);
    for (const auto& s2 : outs.stage2)
      for (double v : s2.values()) positives += v > 0.0 ? 1.0 : 0.0;
  }
  EXPECT_EQ(l.binary_energy, positives);
}

TEST(Ledger, SkipSecondMeanRemoval) {
  NetConfig c = cfg(3, 3);
  c.skip_second_mean_removal = true;
  const EnergyLedger l = record_ledger(train(data().images, c), data().images);
  EXPECT_EQ(l.patch_energy_red_2, l.patch_energy_2);
  const auto sig = check_signature(l);
  EXPECT_EQ(sig.steps[4].observed, EnergyChange::Equal);
  EXPECT_EQ(sig.steps[4].strict, EnergyChange::Equal);
}

TEST(Ledger, DeterministicAcrossWorkers) {
  const TrainedNet net = train(data().images, cfg(3, 3));
  EXPECT_EQ(record_ledger(net, data().images, 1), record_ledger(net, data().images, 4));
}

TEST(Ledger, JsonRoundTrip) {
  const EnergyLedger l = record_ledger(train(data().images, cfg(2, 2)), data().images);
  const auto j = to_json(l);
  for (const char* label : EnergyLedger::labels()) EXPECT_TRUE(j.contains(label)) << label;
  EXPECT_EQ(ledger_from_json(j), l);
  auto broken = j;
  broken.erase("BlockEnergy");
  EXPECT_THROW(ledger_from_json(broken), ParseError);
}

TEST(Signature, HandBuiltLedger) {
  EnergyLedger l;
  l.train_energy = 100;
  l.patch_energy_1 = 900;
  l.patch_energy_red_1 = 500;
  l.pca_energy_1 = 450;
  l.patch_energy_2 = 4000;
  l.patch_energy_red_2 = 3990;
  l.pca_energy_2 = 3000;
  l.binary_energy = 100;
  l.weight_sum_energy = 2000;
  l.block_energy = 5000;
  const auto s = check_signature(l);
  ASSERT_EQ(s.steps.size(), 8u);
  EXPECT_TRUE(s.all_match());
  EXPECT_EQ(s.steps[4].observed, EnergyChange::Equal);
  EXPECT_EQ(s.steps[4].strict, EnergyChange::Decrease);

  l.patch_energy_red_1 = 899.9;  // 1e-4 relative: inside the tolerance band
  const auto t = check_signature(l);
  EXPECT_FALSE(t.steps[1].matches);
  EXPECT_EQ(t.steps[1].strict, EnergyChange::Decrease);
}

TEST(Signature, StepThreeAcceptsEitherDirection) {
  EnergyLedger l;
  l.train_energy = 1;
  l.patch_energy_1 = 9;
  l.patch_energy_red_1 = 5;
  l.pca_energy_1 = 8;
  l.patch_energy_2 = 70;
  l.patch_energy_red_2 = 70;
  l.pca_energy_2 = 40;
  l.binary_energy = 3;
  l.weight_sum_energy = 30;
  EXPECT_TRUE(check_signature(l).steps[2].matches);
  l.pca_energy_1 = 2;
  EXPECT_TRUE(check_signature(l).steps[2].matches);
}

TEST(Overlap, CumulativeRatioStructure) {
  const TrainedNet net = train(data().images, cfg(3, 3));
  const auto d = overlap_decomposition(net, data().images, 8, 8);
  for (int i = 1; i < 10; ++i) {
    EXPECT_GE(d.cumulative_ratio[i], d.cumulative_ratio[i - 1]);
    EXPECT_GE(d.increments[i - 1], d.increments[i]);
  }
  EXPECT_NEAR(d.cumulative_ratio[9], 1.0, 1e-12);
  EXPECT_EQ(d.union_energy, d.per_R_block_energy[9]);  // stride 1 at R = 0.9, h = 8
  // R = 0 positions are new by definition.
  EXPECT_EQ(d.per_R_increment[0], d.per_R_block_energy[0]);
  // Per-R block energy agrees with the ledger at that R.
  for (int t : {0, 5, 9}) {
    NetConfig c = net.config;
    c.R = OverlapRatio::from_tenths(t);
    TrainedNet n2 = net;
    n2.config = c;
    EXPECT_EQ(record_ledger(n2, data().images).block_energy, d.per_R_block_energy[t]);
  }
  EXPECT_THROW(overlap_decomposition(net, data().images, 40, 8), InfeasibleConfigError);
}

TEST(FilterRatios, FullWidthReachesOne) {
  const TrainedNet net = train(data().images, cfg(9, 9));
  const auto t = filter_ratios(net, data().images);
  ASSERT_EQ(t.stage1.size(), 9u);
  EXPECT_NEAR(t.stage1.back().energy_ratio, 1.0, 1e-9);
  EXPECT_NEAR(t.stage1.back().eigenvalue_ratio, 1.0, 1e-9);
  for (std::size_t i = 1; i < 9; ++i) {
    EXPECT_GE(t.stage1[i].energy_sum, t.stage1[i - 1].energy_sum);
    EXPECT_GE(t.stage2[i].eigenvalue_ratio, t.stage2[i - 1].eigenvalue_ratio);
  }
}
