#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "pcanet/sweep.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    auto p = fs::temp_directory_path() / "pcanet_cli_test";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = "cd '" + workdir().string() + "' && '" + PCANET_CLI + "' " + args +
                          " > last.out 2> last.err";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ensure_data() {
  if (!fs::exists(workdir() / "d.pcn"))
    ASSERT_EQ(run("synth --out d.pcn --classes 4 --per-class 6 --m 16 --n 16 --seed 2"), 0);
}

}  // namespace

TEST(Cli, TrainWritesModelAndLedger) {
  ensure_data();
  ASSERT_EQ(run("train --data d.pcn --l1 4 --l2 4 --h1 8 --h2 8 --r 0.5 --seed 7 --out tr"), 0);
  EXPECT_TRUE(fs::exists(workdir() / "tr/model.pcn"));
  const auto j = nlohmann::json::parse(slurp(workdir() / "tr/ledger.json"));
  ASSERT_EQ(j["ledger"].size(), 10u);
  for (auto& [k, v] : j["ledger"].items()) EXPECT_TRUE(std::isfinite(v.get<double>())) << k;
  EXPECT_EQ(j["manifest"], "manifest.json");
  const auto m = nlohmann::json::parse(slurp(workdir() / "tr/manifest.json"));
  EXPECT_EQ(m["command"], "train");
  EXPECT_TRUE(m["dataset"].contains("content_hash"));
  EXPECT_NE(slurp(workdir() / "last.out").find("Energy signature"), std::string::npos);
}

TEST(Cli, SkipMean2Ledger) {
  ensure_data();
  ASSERT_EQ(run("train --data d.pcn --l1 3 --l2 3 --h1 4 --h2 4 --skip-mean2 --out tr2"), 0);
  const auto l = nlohmann::json::parse(slurp(workdir() / "tr2/ledger.json"))["ledger"];
  EXPECT_EQ(l["PatchEnergyRed2"].get<double>(), l["PatchEnergy2"].get<double>());
}

TEST(Cli, UsageErrors) {
  ensure_data();
  EXPECT_EQ(run("train --data d.pcn --l1 10"), 2);
  EXPECT_NE(slurp(workdir() / "last.err").find("--l1"), std::string::npos);
  EXPECT_NE(slurp(workdir() / "last.err").find("k1*k2"), std::string::npos);
  EXPECT_EQ(run("train --data d.pcn --r 0.55"), 2);
  EXPECT_EQ(run("train --data d.pcn --bogus"), 2);
  EXPECT_EQ(run("train --data missing.pcn"), 3);
  EXPECT_EQ(run(""), 2);
}

TEST(Cli, ExtractFeatureLength) {
  ensure_data();
  ASSERT_EQ(run("train --data d.pcn --l1 2 --l2 3 --h1 8 --h2 8 --r 0.5 --out tx"), 0);
  ASSERT_EQ(run("extract --model tx/model.pcn --data d.pcn --out fx"), 0);
  std::ifstream in(workdir() / "fx/features.csv");
  std::string comment, header, row;
  std::getline(in, comment);
  std::getline(in, header);
  std::getline(in, row);
  const auto fields = std::count(row.begin(), row.end(), ',');
  EXPECT_EQ(fields, 8 * 2 * 9);  // 2^3 bins, L1 = 2, 3x3 blocks
}

TEST(Cli, TinySweepSortedAndDiagonal) {
  ensure_data();
  std::ofstream(workdir() / "g.json")
      << R"({"L1": [2, 1], "L2": [1, 2], "h1": [8, 4], "R": [0.5], "train_count": 12, "test_count": 12})";
  ASSERT_EQ(run("sweep --data d.pcn --grid g.json --out sw"), 0);
  std::ifstream in(workdir() / "sw/records.csv");
  const auto rs = pcanet::read_records_csv(in);
  ASSERT_EQ(rs.size(), 8u);
  for (std::size_t i = 1; i < rs.size(); ++i) EXPECT_TRUE(pcanet::record_less(rs[i - 1], rs[i]));
  for (const auto& r : rs) EXPECT_EQ(r.config.h2, r.config.h1);  // 16x16 images

  ASSERT_EQ(run("sweep --data d.pcn --grid g.json --out sw2 --max-points 3"), 0);
  EXPECT_FALSE(fs::exists(workdir() / "sw2/records.csv"));
  ASSERT_EQ(run("sweep --data d.pcn --grid g.json --out sw2 --resume"), 0);
  EXPECT_EQ(slurp(workdir() / "sw/records.csv"), slurp(workdir() / "sw2/records.csv"));

  ASSERT_EQ(run("sweep --data d.pcn --grid g.json --out sw3 --max-points 3"), 0);
  ASSERT_EQ(run("sweep --data d.pcn --grid g.json --out sw3 --resume --seed 99"), 3);
  EXPECT_NE(slurp(workdir() / "last.err").find("different grid"), std::string::npos);
}

TEST(Cli, FitExcludesInfeasible) {
  std::ofstream(workdir() / "cubic.csv") << pcanet::kRecordCsvHeader << "\n";
  {
    std::ofstream out(workdir() / "cubic.csv", std::ios::app);
    out.precision(17);
    for (int i = 0; i < 12; ++i) {
      const double g = 0.05 + 0.02 * i;
      const double e = 2 * g * g * g - g + 0.5;
      out << "1,1," << i + 1 << "," << i + 1 << ",0.5," << e << "," << std::exp(1.0 / g)
          << ",ok,0\n";
    }
    out << "9,9,32,32,0.5,1,,infeasible,0\n";
  }
  ASSERT_EQ(run("fit --data cubic.csv --out ft"), 0);
  const auto j = nlohmann::json::parse(slurp(workdir() / "ft/fit.json"));
  EXPECT_NEAR(j["R_square"].get<double>(), 1.0, 1e-9);
  EXPECT_EQ(j["excluded_infeasible"], 1);
  EXPECT_EQ(j["N"], 12);
  EXPECT_TRUE(fs::exists(workdir() / "ft/fit_table.txt"));

  std::ofstream(workdir() / "bad.csv") << pcanet::kRecordCsvHeader << "\n"
                                       << "9,9,32,32,0.5,1,,infeasible,0\n";
  EXPECT_EQ(run("fit --data bad.csv --out fb"), 3);
  EXPECT_NE(slurp(workdir() / "last.err").find("no fittable points"), std::string::npos);
}

TEST(Cli, AblateSingleConfig) {
  ensure_data();
  ASSERT_EQ(run("ablate --data d.pcn --split 12:12 --l1 3 --l2 3 --h1 4 --h2 4 --out ab"), 0);
  const auto j = nlohmann::json::parse(slurp(workdir() / "ab/ablation.json"));
  EXPECT_EQ(j["entries"].size(), 1u);
}

TEST(Cli, EnergyOutputs) {
  ensure_data();
  ASSERT_EQ(run("energy --data d.pcn --l1 3 --l2 3 --h1 8 --h2 8 --out en"), 0);
  for (const char* f : {"energy.json", "ledger.csv", "signature.csv", "overlap_per_R.csv",
                        "overlap_cumulative.csv", "filter_ratios.csv", "manifest.json"})
    EXPECT_TRUE(fs::exists(workdir() / "en" / f)) << f;
}

TEST(Cli, Reproducible) {
  ensure_data();
  ASSERT_EQ(run("train --data d.pcn --l1 2 --l2 2 --h1 4 --h2 4 --out r1"), 0);
  ASSERT_EQ(run("train --data d.pcn --l1 2 --l2 2 --h1 4 --h2 4 --out r2"), 0);
  for (const char* f : {"model.pcn", "ledger.json", "ledger.csv", "signature.csv"})
    EXPECT_EQ(slurp(workdir() / "r1" / f), slurp(workdir() / "r2" / f)) << f;
}

TEST(Cli, ConvertCsv) {
  std::ofstream(workdir() / "in.csv") << "0,1,2,3,4,5,6\n1,6,5,4,3,2,1\n";
  ASSERT_EQ(run("convert --data in.csv --dims 2x3 --dtype u8 --out c.pcn"), 0);
  EXPECT_TRUE(fs::exists(workdir() / "c.pcn"));
  EXPECT_EQ(run("convert --data in.csv --out c2.pcn"), 3);  // 6 pixels is not square
}
