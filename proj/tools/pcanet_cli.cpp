// pcanet: train, extract, sweep, fit, ablate, energy, synth, convert.
//
// Exit codes: 0 ok, 2 usage, 3 data, 4 numerical, 1 anything unexpected.

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pcanet/dataio.hpp"
#include "pcanet/energy.hpp"
#include "pcanet/errors.hpp"
#include "pcanet/eval.hpp"
#include "pcanet/fit.hpp"
#include "pcanet/parallel.hpp"
#include "pcanet/pcanet.hpp"
#include "pcanet/sweep.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pcanet;

namespace {

constexpr const char* kVersion = "1.0.0";

struct Flags {
  std::string data;
  std::string out;
  std::size_t k = 3, l1 = 8, l2 = 8, h1 = 8, h2 = 8;
  double r = 0.5;
  std::uint64_t seed = 0;
  bool skip_mean2 = false;
  std::string split;
  std::string stratified = "on";
  std::size_t workers = default_workers();
};

std::string now_utc() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::uint64_t file_hash(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::uint64_t h = 1469598103934665603ULL;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

std::string num(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

class Manifest {
 public:
  Manifest(std::string command, const std::vector<std::string>& argv)
      : j_({{"command", std::move(command)},
            {"version", kVersion},
            {"argv", argv},
            {"started", now_utc()}}) {}
  json& operator[](const char* k) { return j_[k]; }
  void dataset(const Dataset& d, const std::string& path) {
    j_["dataset"] = {{"name", d.name},
                     {"path", path},
                     {"content_hash", hex64(content_hash(d))},
                     {"images", d.size()},
                     {"m", d.m},
                     {"n", d.n}};
  }
  void write(const fs::path& path) {
    j_["finished"] = now_utc();
    std::ofstream(path) << j_.dump(2) << '\n';
  }

 private:
  json j_;
};

void add_net_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--k", f.k, "Filter size k1 = k2 (odd)");
  sub->add_option("--l1", f.l1, "Stage-1 filter count, 1 <= L1 <= k*k");
  sub->add_option("--l2", f.l2, "Stage-2 filter count, 1 <= L2 <= k*k");
  sub->add_option("--h1", f.h1, "Block height");
  sub->add_option("--h2", f.h2, "Block width");
  sub->add_option("--r", f.r, "Block overlap ratio in {0.0, 0.1, ..., 0.9}");
  sub->add_flag("--skip-mean2", f.skip_mean2, "Skip the second patch-mean removal");
}

void add_data_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--data", f.data, "Dataset (.pcn container or CSV)")->required();
  sub->add_option("--seed", f.seed, "Split seed");
  sub->add_option("--split", f.split, "Split sizes train:test");
  sub->add_option("--stratified", f.stratified, "Stratified split")
      ->check(CLI::IsMember({"on", "off"}));
  sub->add_option("--workers", f.workers, "Worker threads");
}

NetConfig net_config(const Flags& f) {
  auto bad = [](const std::string& flag, const std::string& why) {
    throw PreconditionError(flag + ": " + why);
  };
  if (f.k == 0 || f.k % 2 == 0) bad("--k", "filter size must be odd, got " + std::to_string(f.k));
  const std::size_t kk = f.k * f.k;
  if (f.l1 < 1 || f.l1 > kk)
    bad("--l1", "L1 = " + std::to_string(f.l1) + " violates 1 <= L1 <= k1*k2 = " +
                    std::to_string(kk));
  if (f.l2 < 1 || f.l2 > kk)
    bad("--l2", "L2 = " + std::to_string(f.l2) + " violates 1 <= L2 <= k1*k2 = " +
                    std::to_string(kk));
  if (f.h1 < 1) bad("--h1", "block height must be >= 1");
  if (f.h2 < 1) bad("--h2", "block width must be >= 1");
  NetConfig c;
  c.k1 = c.k2 = f.k;
  c.L1 = f.l1;
  c.L2 = f.l2;
  c.h1 = f.h1;
  c.h2 = f.h2;
  try {
    c.R = OverlapRatio::from_value(f.r);
  } catch (const PreconditionError& e) {
    bad("--r", e.what());
  }
  c.skip_second_mean_removal = f.skip_mean2;
  return c;
}

json config_json(const NetConfig& c) {
  return {{"k1", c.k1}, {"k2", c.k2}, {"L1", c.L1}, {"L2", c.L2}, {"h1", c.h1},
          {"h2", c.h2}, {"R", c.R.value()}, {"skip_second_mean_removal", c.skip_second_mean_removal}};
}

std::optional<std::pair<std::size_t, std::size_t>> parse_split(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const auto colon = s.find(':');
  std::size_t a = 0, b = 0;
  auto ok = [](const std::string& t, std::size_t& v) {
    auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    return r.ec == std::errc() && r.ptr == t.data() + t.size() && !t.empty();
  };
  if (colon == std::string::npos || !ok(s.substr(0, colon), a) || !ok(s.substr(colon + 1), b))
    throw PreconditionError("--split: expected train:test counts, got '" + s + "'");
  return std::make_pair(a, b);
}

Dataset load(const Flags& f) { return load_dataset(f.data); }

// Without --split: everything trains when no test set is needed, otherwise a
// half/half split.
Split make_split(const Dataset& d, const Flags& f, bool need_test, json& manifest_split) {
  SplitSpec spec;
  spec.seed = f.seed;
  spec.stratified = f.stratified == "on";
  if (auto s = parse_split(f.split)) {
    spec.train_count = s->first;
    spec.test_count = s->second;
  } else if (need_test) {
    spec.train_count = d.size() / 2;
    spec.test_count = d.size() - spec.train_count;
  } else {
    Split all;
    all.train = d;
    for (std::size_t i = 0; i < d.size(); ++i) all.train_indices.push_back(i);
    manifest_split = {{"train_count", d.size()}, {"test_count", 0}, {"mode", "all"}};
    return all;
  }
  if (need_test && spec.test_count == 0) throw PreconditionError("--split: test count must be > 0");
  if (spec.train_count == 0) throw PreconditionError("--split: train count must be > 0");
  manifest_split = {{"train_count", spec.train_count},
                    {"test_count", spec.test_count},
                    {"seed", spec.seed},
                    {"stratified", spec.stratified}};
  return split_dataset(d, spec);
}

fs::path out_dir(const Flags& f, const char* fallback) {
  fs::path p = f.out.empty() ? fs::path(fallback) : fs::path(f.out);
  fs::create_directories(p);
  return p;
}

void write_json(const fs::path& p, const json& j) { std::ofstream(p) << j.dump(2) << '\n'; }

void print_signature(const SignatureReport& s, std::ostream& os) {
  os << "Energy signature (tolerance " << s.tolerance << " relative)\n";
  os << "step  transition                          relative     obs  exp  ok\n";
  for (const auto& st : s.steps) {
    std::string tr = st.from + " -> " + st.to;
    os << std::setw(4) << st.step << "  " << std::left << std::setw(34) << tr << std::right
       << std::setw(11) << std::scientific << std::setprecision(3) << st.relative
       << std::defaultfloat << "   " << std::setw(3) << change_symbol(st.observed) << "  "
       << std::setw(3) << st.expected << "  " << (st.matches ? "yes" : "NO") << '\n';
  }
  os << (s.all_match() ? "signature matches\n" : "signature differs\n");
}

void write_ledger_csv(const fs::path& p, const EnergyLedger& l) {
  std::ofstream out(p);
  out << "index,label,energy\n";
  const auto v = l.values();
  for (std::size_t i = 0; i < v.size(); ++i)
    out << i + 1 << ',' << EnergyLedger::labels()[i] << ',' << num(v[i]) << '\n';
}

void write_signature_csv(const fs::path& p, const SignatureReport& s) {
  std::ofstream out(p);
  out << "step,from,to,delta,relative,strict,observed,expected,matches\n";
  for (const auto& st : s.steps)
    out << st.step << ',' << st.from << ',' << st.to << ',' << num(st.delta) << ','
        << num(st.relative) << ',' << change_symbol(st.strict) << ','
        << change_symbol(st.observed) << ',' << st.expected << ',' << (st.matches ? 1 : 0)
        << '\n';
}

void warn_all(const TrainedNet& net) {
  for (const auto& w : net.warnings) std::cerr << "warning: " << w << '\n';
}

int cmd_train(const Flags& f, const std::vector<std::string>& argv) {
  Manifest man("train", argv);
  const NetConfig cfg = net_config(f);
  const Dataset d = load(f);
  man.dataset(d, f.data);
  json split;
  const Split s = make_split(d, f, false, split);
  man["split"] = split;
  man["config"] = config_json(cfg);
  man["seed"] = f.seed;
  cfg.validate_blocks(d.m, d.n);

  const TrainedNet net = train(s.train.images, cfg, {f.workers});
  warn_all(net);
  const EnergyLedger ledger = record_ledger(net, s.train.images, f.workers);
  const SignatureReport sig = check_signature(ledger);

  const fs::path dir = out_dir(f, "out");
  save_net(net, dir / "model.pcn");
  write_json(dir / "ledger.json", {{"manifest", "manifest.json"}, {"ledger", to_json(ledger)}});
  write_json(dir / "signature.json", {{"manifest", "manifest.json"}, {"signature", to_json(sig)}});
  write_ledger_csv(dir / "ledger.csv", ledger);
  write_signature_csv(dir / "signature.csv", sig);
  man.write(dir / "manifest.json");
  print_signature(sig, std::cout);
  std::cout << "wrote " << (dir / "model.pcn").string() << '\n';
  return 0;
}

int cmd_extract(const Flags& f, const std::string& model, const std::vector<std::string>& argv) {
  Manifest man("extract", argv);
  const TrainedNet net = load_net(model);
  const Dataset d = load(f);
  man.dataset(d, f.data);
  man["model"] = {{"path", model}, {"content_hash", hex64(file_hash(model))}};
  man["config"] = config_json(net.config);
  const LabeledFeatures lf = extract_features(net, d, SplitTag::Train, f.workers);

  const fs::path dir = out_dir(f, "out");
  std::ofstream out(dir / "features.csv");
  out << "# manifest: manifest.json\n";
  out << "label";
  const std::size_t dim = lf.features.empty() ? 0 : lf.features.front().size();
  for (std::size_t j = 0; j < dim; ++j) out << ",f" << j;
  out << '\n';
  for (std::size_t i = 0; i < lf.features.size(); ++i) {
    out << lf.labels[i];
    for (double v : lf.features[i]) out << ',' << num(v);
    out << '\n';
  }
  man["feature_length"] = dim;
  man.write(dir / "manifest.json");
  std::cout << "extracted " << lf.features.size() << " feature vectors of length " << dim << '\n';
  return 0;
}

int cmd_energy(const Flags& f, const std::vector<std::string>& argv) {
  Manifest man("energy", argv);
  const NetConfig cfg = net_config(f);
  const Dataset d = load(f);
  man.dataset(d, f.data);
  json split;
  const Split s = make_split(d, f, false, split);
  man["split"] = split;
  man["config"] = config_json(cfg);
  man["seed"] = f.seed;
  cfg.validate_blocks(d.m, d.n);

  const TrainedNet net = train(s.train.images, cfg, {f.workers});
  warn_all(net);
  const auto& imgs = s.train.images;
  const EnergyLedger ledger = record_ledger(net, imgs, f.workers);
  const SignatureReport sig = check_signature(ledger);
  const OverlapDecomposition od = overlap_decomposition(net, imgs, cfg.h1, cfg.h2, f.workers);
  const FilterRatioTable fr = filter_ratios(net, imgs);

  const fs::path dir = out_dir(f, "out");
  write_json(dir / "energy.json", {{"manifest", "manifest.json"},
                                   {"ledger", to_json(ledger)},
                                   {"signature", to_json(sig)},
                                   {"overlap", to_json(od)},
                                   {"filter_ratios", to_json(fr)}});
  write_ledger_csv(dir / "ledger.csv", ledger);
  write_signature_csv(dir / "signature.csv", sig);
  {
    std::ofstream out(dir / "overlap_per_R.csv");
    out << "R,block_energy,increment\n";
    for (int t = 0; t < 10; ++t)
      out << OverlapRatio::from_tenths(t).str() << ',' << num(od.per_R_block_energy[t]) << ','
          << num(od.per_R_increment[t]) << '\n';
  }
  {
    std::ofstream out(dir / "overlap_cumulative.csv");
    out << "rank,source_R,increment,cumulative,cumulative_ratio\n";
    for (int i = 0; i < 10; ++i)
      out << i + 1 << ',' << OverlapRatio::from_tenths(od.increment_source[i]).str() << ','
          << num(od.increments[i]) << ',' << num(od.cumulative[i]) << ','
          << num(od.cumulative_ratio[i]) << '\n';
  }
  {
    std::ofstream out(dir / "filter_ratios.csv");
    out << "stage,count,energy_sum,energy_ratio,eigenvalue,eigenvalue_sum,eigenvalue_ratio\n";
    auto rows = [&](int stage, const std::vector<FilterRatioRow>& v) {
      for (const auto& r : v)
        out << stage << ',' << r.count << ',' << num(r.energy_sum) << ',' << num(r.energy_ratio)
            << ',' << num(r.eigenvalue) << ',' << num(r.eigenvalue_sum) << ','
            << num(r.eigenvalue_ratio) << '\n';
    };
    rows(1, fr.stage1);
    rows(2, fr.stage2);
  }
  man.write(dir / "manifest.json");

  const auto v = ledger.values();
  std::cout << "Energy ledger (" << imgs.size() << " images)\n";
  for (std::size_t i = 0; i < v.size(); ++i)
    std::cout << "  " << std::left << std::setw(16) << EnergyLedger::labels()[i] << std::right
              << std::setprecision(10) << v[i] << '\n';
  print_signature(sig, std::cout);
  return 0;
}

struct SweepFlags {
  std::string grid;
  bool resume = false;
  bool no_cache = false;
  bool timing = false;
  std::size_t checkpoint_every = 100;
  std::optional<std::size_t> max_points;
};

int cmd_sweep(const Flags& f, const SweepFlags& sf, const CLI::App& sub,
              const std::vector<std::string>& argv) {
  Manifest man("sweep", argv);
  std::ifstream gin(sf.grid);
  if (!gin) throw DataError("--grid: cannot open " + sf.grid);
  json gj;
  try {
    gj = json::parse(gin);
  } catch (const json::exception& e) {
    throw PreconditionError("--grid: " + std::string(e.what()));
  }
  SweepGrid grid = grid_from_json(gj);
  if (sub.count("--seed")) grid.seed = f.seed;
  if (auto s = parse_split(f.split)) {
    grid.train_count = s->first;
    grid.test_count = s->second;
  }
  if (sub.count("--stratified")) grid.stratified = f.stratified == "on";

  const Dataset d = load(f);
  man.dataset(d, f.data);
  if (grid.train_count == 0 && grid.test_count == 0) {
    grid.train_count = d.size() / 2;
    grid.test_count = d.size() - grid.train_count;
  }
  if (grid.train_count == 0 || grid.test_count == 0)
    throw PreconditionError("--split: train and test counts must both be > 0");
  man["grid"] = to_json(grid);
  const Split s = split_dataset(d, {grid.train_count, grid.test_count, grid.seed, grid.stratified});

  const fs::path dir = out_dir(f, "sweep_out");
  SweepOptions opt;
  opt.workers = f.workers;
  opt.cache_filters = !sf.no_cache;
  opt.output = dir / "records.csv";
  opt.resume = sf.resume;
  opt.checkpoint_every = sf.checkpoint_every;
  opt.max_new_points = sf.max_points;
  opt.record_wall_time = sf.timing;
  opt.dataset_identity = d.name + "#" + hex64(content_hash(d));
  const SweepOutcome res = run_sweep(s.train, s.test, grid, opt);
  man["resumed_points"] = res.resumed;
  man["computed_points"] = res.computed;
  man["complete"] = res.complete;
  if (!res.complete) {
    man.write(dir / "manifest.json");
    std::cout << "sweep stopped after " << res.computed << " new points ("
              << res.records.size() << " done); rerun with --resume to continue\n";
    return 0;
  }

  json summary = {{"manifest", "manifest.json"},
                  {"grid", to_json(grid)},
                  {"records", res.records.size()},
                  {"infeasible", std::count_if(res.records.begin(), res.records.end(),
                                               [](const SweepRecord& r) {
                                                 return r.status == RecordStatus::Infeasible;
                                               })}};
  // Table-VI-style grid at the block parameters given by --h1/--h2/--r.
  const NetConfig fixed = net_config(f);
  try {
    std::vector<std::size_t> L1s = grid.L1_range, L2s = grid.L2_range;
    std::sort(L1s.begin(), L1s.end());
    std::sort(L2s.begin(), L2s.end());
    const ErrorGrid eg = error_grid(res.records, fixed.h1, fixed.h2, fixed.R, L1s, L2s);
    summary["error_grid"] = to_json(eg);
    std::ofstream out(dir / "error_grid.csv");
    out << "L1,L2,h1,h2,R,e\n";
    for (std::size_t i = 0; i < eg.L1_values.size(); ++i)
      for (std::size_t j = 0; j < eg.L2_values.size(); ++j)
        out << eg.L1_values[i] << ',' << eg.L2_values[j] << ',' << eg.h1 << ',' << eg.h2 << ','
            << eg.R.str() << ',' << num(eg.e[i][j]) << '\n';
  } catch (const IncompleteGridError& e) {
    summary["error_grid"] = {{"skipped", e.what()}};
  }
  if (grid.h2_mode == H2Mode::Explicit) {
    try {
      const LeastErrorAnalysis a = least_error_analysis(res.records, d.m, d.n);
      summary["least_error"] = to_json(a);
      std::ofstream out(dir / "least_error.csv");
      out << "L1,L2,R,e_l,e_la,difference\n";
      for (const auto& c : a.cells)
        out << c.L1 << ',' << c.L2 << ',' << c.R.str() << ',' << num(c.e_l) << ','
            << num(c.e_la) << ',' << num(c.difference) << '\n';
      std::ofstream am(dir / "argmin_h1.csv");
      am << "L1,L2,R,h2,h1,e\n";
      for (const auto& e : a.argmin_per_R)
        am << e.L1 << ',' << e.L2 << ',' << e.best_R.str() << ',' << e.h2 << ',' << e.h1 << ','
           << num(e.e) << '\n';
    } catch (const IncompleteGridError& e) {
      summary["least_error"] = {{"skipped", e.what()}};
    }
  }
  write_json(dir / "summary.json", summary);
  man.write(dir / "manifest.json");
  std::cout << "sweep complete: " << res.records.size() << " records (" << res.resumed
            << " resumed, " << res.computed << " computed) -> " << opt.output->string() << '\n';
  return 0;
}

int cmd_fit(const Flags& f, const std::string& log_base, const std::vector<std::string>& argv) {
  Manifest man("fit", argv);
  const auto records = read_records_csv(fs::path(f.data));
  man["dataset"] = {{"path", f.data}, {"content_hash", hex64(file_hash(f.data))}};
  std::vector<FitPoint> pts;
  std::size_t excluded = 0;
  for (const auto& r : records) {
    if (r.status != RecordStatus::Ok || !r.block_energy) {
      ++excluded;
      continue;
    }
    pts.push_back({*r.block_energy, r.e});
  }
  if (pts.empty())
    throw DataError("no fittable points: all " + std::to_string(records.size()) +
                    " records are infeasible");
  const LogBase base = log_base == "10" ? LogBase::Ten : LogBase::Natural;
  const FitResult fit = fit_poly3(pts, base);
  man["log_base"] = log_base;

  const fs::path dir = out_dir(f, "fit_out");
  json j = to_json(fit);
  j["manifest"] = "manifest.json";
  j["excluded_infeasible"] = excluded;
  write_json(dir / "fit.json", j);
  const std::string table = format_fit_table(fit, fs::path(f.data).stem().string());
  std::ofstream(dir / "fit_table.txt") << table;
  {
    std::ofstream out(dir / "fit_points.csv");
    out << "block_energy,g,e,fitted\n";
    for (const auto& p : pts)
      out << num(p.block_energy) << ',' << num(1.0 / log_transform(p.block_energy, base)) << ','
          << num(p.e) << ',' << num(evaluate(fit, p.block_energy)) << '\n';
  }
  man.write(dir / "manifest.json");
  std::cout << table;
  if (excluded > 0) std::cout << "excluded " << excluded << " infeasible records\n";
  return 0;
}

int cmd_ablate(const Flags& f, std::size_t h_max, const CLI::App& sub,
               const std::vector<std::string>& argv) {
  Manifest man("ablate", argv);
  const Dataset d = load(f);
  man.dataset(d, f.data);
  json split;
  const Split s = make_split(d, f, true, split);
  man["split"] = split;
  man["seed"] = f.seed;

  std::vector<NetConfig> configs;
  const bool single = sub.count("--l1") || sub.count("--l2") || sub.count("--h1") ||
                      sub.count("--h2") || sub.count("--r");
  if (single) {
    configs.push_back(net_config(f));
  } else {
    configs = default_ablation_configs(h_max);
    for (auto& c : configs) c.k1 = c.k2 = f.k;
  }
  json cj = json::array();
  for (const auto& c : configs) cj.push_back(config_json(c));
  man["configs"] = cj;

  const AblationReport rep = ablate_second_mean_removal(s.train, s.test, configs, f.workers);
  const fs::path dir = out_dir(f, "ablate_out");
  json j = to_json(rep);
  j["manifest"] = "manifest.json";
  write_json(dir / "ablation.json", j);
  {
    std::ofstream out(dir / "ablation.csv");
    out << "L1,L2,h1,h2,R,status,e_r,e_wr,delta\n";
    for (const auto& e : rep.entries) {
      out << e.config.L1 << ',' << e.config.L2 << ',' << e.config.h1 << ',' << e.config.h2 << ','
          << e.config.R.str() << ',' << (e.feasible ? "ok" : "infeasible") << ',';
      if (e.feasible)
        out << num(e.e_r) << ',' << num(e.e_wr) << ',' << num(e.delta) << '\n';
      else
        out << ",,\n";
    }
  }
  man.write(dir / "manifest.json");
  std::cout << "config                      e_r      e_wr     delta\n";
  for (const auto& e : rep.entries) {
    std::ostringstream c;
    c << "L=" << e.config.L1 << "/" << e.config.L2 << " h=" << e.config.h1 << "x" << e.config.h2
      << " R=" << e.config.R.str();
    std::cout << std::left << std::setw(26) << c.str() << std::right;
    if (e.feasible)
      std::cout << std::fixed << std::setprecision(4) << std::setw(8) << e.e_r << std::setw(10)
                << e.e_wr << std::setw(10) << e.delta << std::defaultfloat << '\n';
    else
      std::cout << "  skipped: " << e.note << '\n';
  }
  std::cout << "mean delta over " << rep.feasible_count() << " configs: " << rep.mean_delta
            << '\n';
  return 0;
}

struct SynthFlags {
  std::size_t classes = 10, per_class = 20, m = 32, n = 32;
  double snr = SynthOptions{}.snr;
  std::size_t max_shift = SynthOptions{}.max_shift;
};

int cmd_synth(const Flags& f, const SynthFlags& sf, const std::vector<std::string>& argv) {
  if (f.out.empty()) throw PreconditionError("--out: output file required");
  Manifest man("synth", argv);
  SynthOptions opt;
  opt.snr = sf.snr;
  opt.max_shift = sf.max_shift;
  const Dataset d = synth(sf.classes, sf.per_class, sf.m, sf.n, f.seed, opt);
  save_dataset(d, f.out, PixelType::F64);
  man.dataset(d, f.out);
  man["seed"] = f.seed;
  man["generator"] = {{"classes", sf.classes}, {"per_class", sf.per_class}, {"m", sf.m},
                      {"n", sf.n},             {"snr", sf.snr},             {"max_shift", sf.max_shift}};
  man.write(f.out + ".manifest.json");
  std::cout << "wrote " << d.size() << " images (" << d.m << "x" << d.n << ") to " << f.out << '\n';
  return 0;
}

int cmd_convert(const Flags& f, const std::string& dims, const std::string& dtype,
                const std::string& name, const std::vector<std::string>& argv) {
  if (f.out.empty()) throw PreconditionError("--out: output file required");
  Manifest man("convert", argv);
  std::optional<std::pair<std::size_t, std::size_t>> csv_dims;
  if (!dims.empty()) {
    const auto x = dims.find('x');
    try {
      if (x == std::string::npos) throw std::invalid_argument("no x");
      csv_dims = std::make_pair(std::stoul(dims.substr(0, x)), std::stoul(dims.substr(x + 1)));
    } catch (const std::exception&) {
      throw PreconditionError("--dims: expected MxN, got '" + dims + "'");
    }
  }
  Dataset d = load_dataset(f.data, csv_dims);
  if (!name.empty()) d.name = name;
  save_dataset(d, f.out, dtype == "u8" ? PixelType::U8 : PixelType::F64);
  man.dataset(d, f.out);
  man["source"] = {{"path", f.data}, {"content_hash", hex64(file_hash(f.data))}};
  man.write(f.out + ".manifest.json");
  std::cout << "converted " << d.size() << " images (" << d.m << "x" << d.n << ", "
            << d.class_count() << " classes) to " << f.out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"PCANet feature extraction, energy ledger and experiment harness"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Flags f;
  auto* train_cmd = app.add_subcommand("train", "Train filters, write model and energy ledger");
  add_data_flags(train_cmd, f);
  add_net_flags(train_cmd, f);
  train_cmd->add_option("--out", f.out, "Output directory");

  std::string model;
  auto* extract_cmd = app.add_subcommand("extract", "Extract histogram features with a model");
  extract_cmd->add_option("--model", model, "Model file from train")->required();
  extract_cmd->add_option("--data", f.data, "Dataset")->required();
  extract_cmd->add_option("--out", f.out, "Output directory");
  extract_cmd->add_option("--workers", f.workers, "Worker threads");

  auto* energy_cmd = app.add_subcommand("energy", "Energy ledger, signature, overlap and filter diagnostics");
  add_data_flags(energy_cmd, f);
  add_net_flags(energy_cmd, f);
  energy_cmd->add_option("--out", f.out, "Output directory");

  SweepFlags sf;
  auto* sweep_cmd = app.add_subcommand("sweep", "Grid sweep over L1, L2, h1, h2, R");
  add_data_flags(sweep_cmd, f);
  sweep_cmd->add_option("--h1", f.h1, "Block height of the reported L1 x L2 error grid");
  sweep_cmd->add_option("--h2", f.h2, "Block width of the reported L1 x L2 error grid");
  sweep_cmd->add_option("--r", f.r, "Overlap ratio of the reported L1 x L2 error grid");
  sweep_cmd->add_option("--grid", sf.grid, "Sweep grid JSON")->required();
  sweep_cmd->add_option("--out", f.out, "Output directory");
  sweep_cmd->add_flag("--resume", sf.resume, "Continue from records.csv.partial");
  sweep_cmd->add_flag("--no-cache", sf.no_cache, "Retrain filters for every point");
  sweep_cmd->add_flag("--timing", sf.timing, "Record per-point wall time");
  sweep_cmd->add_option("--checkpoint-every", sf.checkpoint_every, "Points per checkpoint flush");
  sweep_cmd->add_option("--max-points", sf.max_points, "Stop after this many new points");

  std::string log_base = "e";
  auto* fit_cmd = app.add_subcommand("fit", "Cubic fit of error rate against 1/log(BlockEnergy)");
  fit_cmd->add_option("--data", f.data, "Sweep records CSV")->required();
  fit_cmd->add_option("--out", f.out, "Output directory");
  fit_cmd->add_option("--log-base", log_base, "Logarithm base")->check(CLI::IsMember({"e", "10"}));

  std::size_t h_max = 32;
  auto* ablate_cmd = app.add_subcommand("ablate", "Second mean-removal ablation");
  add_data_flags(ablate_cmd, f);
  add_net_flags(ablate_cmd, f);
  ablate_cmd->add_option("--out", f.out, "Output directory");
  ablate_cmd->add_option("--h-max", h_max, "Largest h in the default config family");

  SynthFlags syn;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic texture dataset");
  synth_cmd->add_option("--out", f.out, "Output .pcn file")->required();
  synth_cmd->add_option("--seed", f.seed, "Generator seed");
  synth_cmd->add_option("--classes", syn.classes, "Number of classes");
  synth_cmd->add_option("--per-class", syn.per_class, "Images per class");
  synth_cmd->add_option("--m", syn.m, "Image rows");
  synth_cmd->add_option("--n", syn.n, "Image cols");
  synth_cmd->add_option("--snr", syn.snr, "Signal-to-noise ratio (inf for none)");
  synth_cmd->add_option("--max-shift", syn.max_shift, "Largest random translation");

  std::string dims, dtype = "f64", name;
  auto* convert_cmd = app.add_subcommand("convert", "Convert CSV or container data to .pcn");
  convert_cmd->add_option("--data", f.data, "Input CSV or .pcn")->required();
  convert_cmd->add_option("--out", f.out, "Output .pcn file")->required();
  convert_cmd->add_option("--dims", dims, "Image size MxN for CSV input");
  convert_cmd->add_option("--dtype", dtype, "Pixel type")->check(CLI::IsMember({"u8", "f64"}));
  convert_cmd->add_option("--name", name, "Dataset name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*train_cmd) return cmd_train(f, args);
    if (*extract_cmd) return cmd_extract(f, model, args);
    if (*energy_cmd) return cmd_energy(f, args);
    if (*sweep_cmd) return cmd_sweep(f, sf, *sweep_cmd, args);
    if (*fit_cmd) return cmd_fit(f, log_base, args);
    if (*ablate_cmd) return cmd_ablate(f, h_max, *ablate_cmd, args);
    if (*synth_cmd) return cmd_synth(f, syn, args);
    if (*convert_cmd) return cmd_convert(f, dims, dtype, name, args);
  } catch (const PreconditionError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
