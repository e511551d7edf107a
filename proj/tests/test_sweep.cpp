#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pcanet/dataio.hpp"
#include "pcanet/energy.hpp"
#include "pcanet/errors.hpp"
#include "pcanet/sweep.hpp"

using namespace pcanet;
namespace fs = std::filesystem;

namespace {

const Split& data() {
  static const Split s = split_dataset(synth(4, 6, 16, 16, 21), {12, 12, 2, true});
  return s;
}

SweepGrid grid(std::vector<std::size_t> L1, std::vector<std::size_t> L2,
               std::vector<std::size_t> h1, std::vector<int> R) {
  SweepGrid g;
  g.L1_range = std::move(L1);
  g.L2_range = std::move(L2);
  g.h1_range = std::move(h1);
  for (int t : R) g.R_range.push_back(OverlapRatio::from_tenths(t));
  return g;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("pcanet_sweep_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

SweepRecord rec(std::size_t L1, std::size_t L2, std::size_t h1, std::size_t h2, int t, double e) {
  SweepRecord r;
  r.config.L1 = L1;
  r.config.L2 = L2;
  r.config.h1 = h1;
  r.config.h2 = h2;
  r.config.R = OverlapRatio::from_tenths(t);
  r.e = e;
  r.block_energy = 1000.0;
  return r;
}

}  // namespace

TEST(Grid, Validation) {
  EXPECT_NO_THROW(grid({1}, {1}, {1}, {0}).validate());
  EXPECT_THROW(grid({}, {1}, {1}, {0}).validate(), PreconditionError);
  EXPECT_THROW(grid({10}, {1}, {1}, {0}).validate(), PreconditionError);
  EXPECT_THROW(grid({1}, {1}, {33}, {0}).validate(), PreconditionError);
  EXPECT_THROW(grid({1}, {1}, {1}, {}).validate(), PreconditionError);
  auto g = grid({1}, {1}, {1}, {0});
  g.h2_range = {2};
  EXPECT_THROW(g.validate(), PreconditionError);  // diagonal forbids explicit h2
}

TEST(Grid, PaperDiagonalSize) {
  EXPECT_EQ(SweepGrid::paper_diagonal().points(32, 32).size(), 25920u);
}

TEST(Grid, DiagonalConstraintAndOrder) {
  auto g = grid({2, 1}, {1}, {3, 5, 9}, {5, 0});
  const auto pts = g.points(12, 20);
  for (const auto& c : pts) EXPECT_EQ(c.h2, 20 * c.h1 / 12);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    SweepRecord a, b;
    a.config = pts[i - 1];
    b.config = pts[i];
    EXPECT_TRUE(record_less(a, b));
  }
}

TEST(Grid, JsonRoundTrip) {
  const auto j = nlohmann::json::parse(
      R"({"L1": {"from": 1, "to": 3}, "L2": [2], "h1": [4, 8], "h2": [4, 6], "R": [0.0, 0.5],
          "seed": 9, "train_count": 12, "test_count": 12})");
  const SweepGrid g = grid_from_json(j);
  EXPECT_EQ(g.L1_range, (std::vector<std::size_t>{1, 2, 3}));
  EXPECT_EQ(g.h2_mode, H2Mode::Explicit);
  EXPECT_EQ(g.R_range[1].tenths(), 5);
  EXPECT_EQ(to_json(grid_from_json(to_json(g))), to_json(g));
  EXPECT_THROW(grid_from_json(nlohmann::json::parse(R"({"L1": [1]})")), PreconditionError);
}

TEST(Sweep, SinglePointAndInfeasible) {
  const auto one = run_sweep(data().train, data().test, grid({2}, {2}, {4}, {5}));
  ASSERT_EQ(one.records.size(), 1u);
  EXPECT_EQ(one.records[0].status, RecordStatus::Ok);
  EXPECT_TRUE(one.records[0].block_energy.has_value());
  EXPECT_TRUE(one.complete);

  const auto big = run_sweep(data().train, data().test, grid({1}, {1}, {20}, {5}));
  ASSERT_EQ(big.records.size(), 1u);
  EXPECT_EQ(big.records[0].status, RecordStatus::Infeasible);
  EXPECT_EQ(big.records[0].e, 1.0);
  EXPECT_FALSE(big.records[0].block_energy.has_value());
}

TEST(Sweep, BlockEnergyMatchesLedger) {
  const auto res = run_sweep(data().train, data().test, grid({2}, {3}, {4, 8}, {0, 9}));
  for (const auto& r : res.records) {
    NetConfig c = r.config;
    const TrainedNet net = train(data().train.images, c);
    EXPECT_EQ(*r.block_energy, record_ledger(net, data().train.images).block_energy);
  }
}

TEST(Sweep, CachingIsSound) {
  const auto g = grid({1, 3}, {2, 4}, {4, 8}, {5});
  SweepOptions cached, fresh;
  fresh.cache_filters = false;
  fresh.workers = 3;
  const auto a = run_sweep(data().train, data().test, g, cached);
  const auto b = run_sweep(data().train, data().test, g, fresh);
  std::ostringstream sa, sb;
  write_records_csv(sa, a.records);
  write_records_csv(sb, b.records);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(Sweep, ResumeMatchesUninterrupted) {
  const auto g = grid({1, 2}, {2}, {4, 8, 16}, {0, 5});
  const auto dir = fresh_dir("resume");
  SweepOptions full;
  full.output = dir / "full.csv";
  ASSERT_TRUE(run_sweep(data().train, data().test, g, full).complete);

  SweepOptions part;
  part.output = dir / "part.csv";
  part.checkpoint_every = 2;
  part.max_new_points = 5;
  const auto first = run_sweep(data().train, data().test, g, part);
  EXPECT_FALSE(first.complete);
  EXPECT_FALSE(fs::exists(dir / "part.csv"));
  EXPECT_TRUE(fs::exists(dir / "part.csv.partial"));
  part.max_new_points.reset();
  part.resume = true;
  const auto second = run_sweep(data().train, data().test, g, part);
  EXPECT_TRUE(second.complete);
  EXPECT_EQ(second.resumed, 5u);
  EXPECT_EQ(second.computed, 7u);
  EXPECT_EQ(slurp(dir / "full.csv"), slurp(dir / "part.csv"));
  EXPECT_FALSE(fs::exists(dir / "part.csv.partial"));
}

TEST(Sweep, ResumeRefusesChangedGrid) {
  const auto dir = fresh_dir("mismatch");
  SweepOptions o;
  o.output = dir / "r.csv";
  o.max_new_points = 1;
  run_sweep(data().train, data().test, grid({1}, {2}, {4, 8}, {5}), o);
  o.resume = true;
  EXPECT_THROW(run_sweep(data().train, data().test, grid({1}, {3}, {4, 8}, {5}), o), DataError);
}

TEST(RecordsCsv, RoundTrip) {
  std::vector<SweepRecord> rs = {rec(1, 2, 3, 4, 5, 0.123456789012345), rec(9, 9, 32, 32, 9, 1.0)};
  rs[1].status = RecordStatus::Infeasible;
  rs[1].block_energy.reset();
  rs[0].wall_time = 0.25;
  std::ostringstream out;
  write_records_csv(out, rs);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), kRecordCsvHeader);
  std::istringstream in(out.str());
  const auto back = read_records_csv(in);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].e, rs[0].e);
  EXPECT_EQ(back[0].wall_time, 0.25);
  EXPECT_FALSE(back[1].block_energy.has_value());
  EXPECT_EQ(back[1].status, RecordStatus::Infeasible);
  std::istringstream bad("1,2,3\n");
  EXPECT_THROW(read_records_csv(bad), ParseError);
}

TEST(LeastError, UniqueArgminAndTies) {
  std::vector<SweepRecord> rs;
  for (std::size_t h1 : {2, 4, 6})
    for (std::size_t h2 : {2, 4, 6})
      for (int t : {0, 5}) rs.push_back(rec(1, 1, h1, h2, t, 0.5));
  // One perfect config.
  for (auto& r : rs)
    if (r.config.h1 == 4 && r.config.h2 == 6 && r.config.R.tenths() == 5) r.e = 0.0;
  const auto a = least_error_analysis(rs, 8, 8);
  ASSERT_EQ(a.cells.size(), 2u);
  for (const auto& e : a.argmin_over_R)
    if (e.h2 == 6) {
      EXPECT_EQ(e.h1, 4u);
      EXPECT_EQ(e.best_R.tenths(), 5);
      EXPECT_EQ(e.e, 0.0);
    } else {
      EXPECT_EQ(e.h1, 2u);  // tie: smallest h1
      EXPECT_EQ(e.best_R.tenths(), 0);  // then smallest R
    }
  // Cell R = 0.5: e_l = 0 off the diagonal, e_la = 0.5 on it (m = n).
  EXPECT_EQ(a.cells[1].e_l, 0.0);
  EXPECT_EQ(a.cells[1].e_la, 0.5);
  EXPECT_EQ(a.cells[1].difference, 0.5);
  EXPECT_EQ(a.cells[0].difference, 0.0);
  EXPECT_DOUBLE_EQ(a.mean_difference, 0.25);
  EXPECT_EQ(a.min_difference, 0.0);
}

TEST(LeastError, MissingCoverage) {
  std::vector<SweepRecord> rs = {rec(1, 1, 2, 2, 0, 0.1), rec(1, 1, 4, 4, 0, 0.2),
                                 rec(1, 1, 2, 4, 0, 0.3)};
  try {
    least_error_analysis(rs, 8, 8);
    FAIL();
  } catch (const IncompleteGridError& e) {
    EXPECT_NE(std::string(e.what()).find("h1=4, h2=2"), std::string::npos) << e.what();
  }
}

TEST(ErrorGrid, ConstantOrderedAndMissing) {
  std::vector<SweepRecord> rs;
  for (std::size_t L1 = 1; L1 <= 9; ++L1)
    for (std::size_t L2 = 1; L2 <= 9; ++L2) rs.push_back(rec(L1, L2, 8, 8, 5, 0.3));
  const auto g = error_grid(rs, 8, 8, OverlapRatio::from_tenths(5));
  ASSERT_EQ(g.e.size(), 9u);
  for (const auto& row : g.e)
    for (double v : row) EXPECT_EQ(v, 0.3);
  rs[10].e = 0.7;  // L1 = 2, L2 = 2
  EXPECT_EQ(error_grid(rs, 8, 8, OverlapRatio::from_tenths(5)).e[1][1], 0.7);
  rs.erase(rs.begin() + 10);
  EXPECT_THROW(error_grid(rs, 8, 8, OverlapRatio::from_tenths(5)), IncompleteGridError);
}
