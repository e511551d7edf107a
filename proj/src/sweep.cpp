#include "pcanet/sweep.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "pcanet/errors.hpp"
#include "pcanet/eval.hpp"
#include "pcanet/parallel.hpp"

namespace pcanet {

namespace {

using Key = std::tuple<std::size_t, std::size_t, std::size_t, std::size_t, int>;

Key key_of(const NetConfig& c) { return {c.L1, c.L2, c.h1, c.h2, c.R.tenths()}; }

std::string key_str(const Key& k) {
  return "(L1=" + std::to_string(std::get<0>(k)) + ", L2=" + std::to_string(std::get<1>(k)) +
         ", h1=" + std::to_string(std::get<2>(k)) + ", h2=" + std::to_string(std::get<3>(k)) +
         ", R=" + OverlapRatio::from_tenths(std::get<4>(k)).str() + ")";
}

void check_range(const std::vector<std::size_t>& v, const char* name, std::size_t lo,
                 std::size_t hi) {
  if (v.empty()) throw PreconditionError(std::string("sweep grid: ") + name + " range is empty");
  for (std::size_t x : v)
    if (x < lo || x > hi)
      throw PreconditionError(std::string("sweep grid: ") + name + " value " + std::to_string(x) +
                              " outside " + std::to_string(lo) + ".." + std::to_string(hi));
}

// Shortest round-trip decimal form, so CSVs read back bit-exact.
std::string fmt(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& s, std::size_t line, const char* col) {
  double v = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw ParseError("records CSV line " + std::to_string(line) + ": bad " + col + " '" + s + "'");
  return v;
}

std::size_t parse_size(const std::string& s, std::size_t line, const char* col) {
  std::size_t v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw ParseError("records CSV line " + std::to_string(line) + ": bad " + col + " '" + s + "'");
  return v;
}

std::vector<std::size_t> size_list(const nlohmann::json& j, const char* name) {
  if (j.is_array()) return j.get<std::vector<std::size_t>>();
  if (j.is_object()) {
    const auto from = j.at("from").get<std::size_t>();
    const auto to = j.at("to").get<std::size_t>();
    const auto step = j.value("step", std::size_t{1});
    if (step == 0 || to < from)
      throw PreconditionError(std::string("sweep grid: bad range for ") + name);
    std::vector<std::size_t> out;
    for (std::size_t x = from; x <= to; x += step) out.push_back(x);
    return out;
  }
  throw PreconditionError(std::string("sweep grid: ") + name +
                          " must be a list or {from, to, step}");
}

// Sum of T^2 over every block of every map, via a summed-area table. T holds
// small integers, so every partial sum is exact in double.
double block_energy_of(const std::vector<std::vector<Matrix>>& maps, std::size_t h1,
                       std::size_t h2, OverlapRatio R) {
  if (maps.empty()) return 0.0;
  const std::size_t m = maps.front().front().rows();
  const std::size_t n = maps.front().front().cols();
  const auto pos = block_positions(m, n, h1, h2, R);
  std::vector<double> sat((m + 1) * (n + 1));
  double total = 0.0;
  for (const auto& image_maps : maps)
    for (const Matrix& t : image_maps) {
      std::fill(sat.begin(), sat.end(), 0.0);
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c)
          sat[(r + 1) * (n + 1) + c + 1] = t(r, c) * t(r, c) + sat[r * (n + 1) + c + 1] +
                                           sat[(r + 1) * (n + 1) + c] - sat[r * (n + 1) + c];
      for (const auto& p : pos) {
        const std::size_t r0 = p.row, c0 = p.col, r1 = p.row + h1, c1 = p.col + h2;
        total += sat[r1 * (n + 1) + c1] - sat[r0 * (n + 1) + c1] - sat[r1 * (n + 1) + c0] +
                 sat[r0 * (n + 1) + c0];
      }
    }
  return total;
}

std::vector<std::vector<Matrix>> maps_for(const TrainedNet& net, const Dataset& d,
                                          std::size_t workers) {
  std::vector<std::vector<Matrix>> maps(d.size());
  parallel_for(d.size(), workers, [&](std::size_t i) { maps[i] = decimal_maps(net, d.images[i]); });
  return maps;
}

struct Prepared {
  TrainedNet net;
  std::vector<std::vector<Matrix>> train_maps;
  std::vector<std::vector<Matrix>> test_maps;
};

Prepared prepare(const Dataset& train, const Dataset& test, const NetConfig& cfg,
                 std::size_t workers) {
  Prepared p;
  p.net = pcanet::train(train.images, cfg, {workers});
  p.train_maps = maps_for(p.net, train, workers);
  p.test_maps = maps_for(p.net, test, workers);
  return p;
}

SweepRecord evaluate_point(const Prepared& p, const Dataset& train, const Dataset& test,
                           const NetConfig& cfg) {
  SweepRecord rec;
  rec.config = cfg;
  const auto g =
      histogram_gram(p.train_maps, p.test_maps, cfg.L2, cfg.h1, cfg.h2, cfg.R, 1);
  rec.e = error_rate(classify_from_gram(g.dots, g.test_norm2, g.train_norm2, train.labels),
                     test.labels);
  rec.block_energy = block_energy_of(p.train_maps, cfg.h1, cfg.h2, cfg.R);
  return rec;
}

SweepRecord infeasible_record(const NetConfig& cfg) {
  SweepRecord rec;
  rec.config = cfg;
  rec.e = 1.0;
  rec.status = RecordStatus::Infeasible;
  return rec;
}

bool feasible(const NetConfig& cfg, std::size_t m, std::size_t n) {
  try {
    cfg.validate_blocks(m, n);
    return true;
  } catch (const InfeasibleConfigError&) {
    return false;
  }
}

std::filesystem::path with_suffix(const std::filesystem::path& p, const char* s) {
  return std::filesystem::path(p.string() + s);
}

}  // namespace

void SweepGrid::validate() const {
  check_range(L1_range, "L1", 1, 9);
  check_range(L2_range, "L2", 1, 9);
  check_range(h1_range, "h1", 1, 32);
  if (h2_mode == H2Mode::Diagonal) {
    if (!h2_range.empty())
      throw PreconditionError("sweep grid: diagonal mode forbids an explicit h2 range");
  } else {
    check_range(h2_range, "h2", 1, 32);
  }
  if (R_range.empty()) throw PreconditionError("sweep grid: R range is empty");
  if (k % 2 == 0 || k == 0) throw PreconditionError("sweep grid: k must be odd");
  for (std::size_t L : L1_range)
    if (L > k * k) throw PreconditionError("sweep grid: L1 exceeds k1*k2");
  for (std::size_t L : L2_range)
    if (L > k * k) throw PreconditionError("sweep grid: L2 exceeds k1*k2");
}

std::vector<NetConfig> SweepGrid::points(std::size_t m, std::size_t n) const {
  validate();
  std::set<Key> seen;
  std::vector<NetConfig> out;
  for (std::size_t L1 : L1_range)
    for (std::size_t L2 : L2_range)
      for (std::size_t h1 : h1_range) {
        std::vector<std::size_t> h2s;
        if (h2_mode == H2Mode::Diagonal)
          h2s.push_back(m == 0 ? 0 : n * h1 / m);
        else
          h2s = h2_range;
        for (std::size_t h2 : h2s)
          for (OverlapRatio R : R_range) {
            NetConfig c;
            c.k1 = c.k2 = k;
            c.L1 = L1;
            c.L2 = L2;
            c.h1 = h1;
            c.h2 = h2;
            c.R = R;
            if (seen.insert(key_of(c)).second) out.push_back(c);
          }
      }
  std::sort(out.begin(), out.end(),
            [](const NetConfig& a, const NetConfig& b) { return key_of(a) < key_of(b); });
  return out;
}

SweepGrid SweepGrid::paper_diagonal() {
  SweepGrid g;
  for (std::size_t L = 1; L <= 9; ++L) {
    g.L1_range.push_back(L);
    g.L2_range.push_back(L);
  }
  for (std::size_t h = 1; h <= 32; ++h) g.h1_range.push_back(h);
  g.R_range = OverlapRatio::grid();
  return g;
}

SweepGrid grid_from_json(const nlohmann::json& j) {
  SweepGrid g;
  try {
    g.L1_range = size_list(j.at("L1"), "L1");
    g.L2_range = size_list(j.at("L2"), "L2");
    g.h1_range = size_list(j.at("h1"), "h1");
    if (!j.contains("h2") || (j["h2"].is_string() && j["h2"] == "diagonal")) {
      g.h2_mode = H2Mode::Diagonal;
    } else {
      g.h2_mode = H2Mode::Explicit;
      g.h2_range = size_list(j["h2"], "h2");
    }
    if (j.contains("R")) {
      for (const auto& r : j["R"]) g.R_range.push_back(OverlapRatio::from_value(r.get<double>()));
    } else {
      g.R_range = OverlapRatio::grid();
    }
    g.k = j.value("k", std::size_t{3});
    g.seed = j.value("seed", std::uint64_t{0});
    g.train_count = j.value("train_count", std::size_t{0});
    g.test_count = j.value("test_count", std::size_t{0});
    g.stratified = j.value("stratified", true);
  } catch (const nlohmann::json::exception& e) {
    throw PreconditionError(std::string("sweep grid: ") + e.what());
  }
  g.validate();
  return g;
}

nlohmann::json to_json(const SweepGrid& g) {
  nlohmann::json R = nlohmann::json::array();
  for (OverlapRatio r : g.R_range) R.push_back(r.value());
  nlohmann::json j = {{"L1", g.L1_range},
                      {"L2", g.L2_range},
                      {"h1", g.h1_range},
                      {"R", R},
                      {"k", g.k},
                      {"seed", g.seed},
                      {"train_count", g.train_count},
                      {"test_count", g.test_count},
                      {"stratified", g.stratified}};
  if (g.h2_mode == H2Mode::Diagonal)
    j["h2"] = "diagonal";
  else
    j["h2"] = g.h2_range;
  return j;
}

bool record_less(const SweepRecord& a, const SweepRecord& b) {
  return key_of(a.config) < key_of(b.config);
}

void write_records_csv(std::ostream& out, const std::vector<SweepRecord>& records, bool header) {
  if (header) out << kRecordCsvHeader << '\n';
  for (const auto& r : records) {
    const NetConfig& c = r.config;
    out << c.L1 << ',' << c.L2 << ',' << c.h1 << ',' << c.h2 << ',' << c.R.str() << ','
        << fmt(r.e) << ',' << (r.block_energy ? fmt(*r.block_energy) : std::string()) << ','
        << (r.status == RecordStatus::Ok ? "ok" : "infeasible") << ',' << fmt(r.wall_time)
        << '\n';
  }
}

std::vector<SweepRecord> read_records_csv(std::istream& in) {
  std::vector<SweepRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line == kRecordCsvHeader) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 9)
      throw ParseError("records CSV line " + std::to_string(lineno) + ": expected 9 fields, got " +
                       std::to_string(f.size()));
    SweepRecord r;
    r.config.L1 = parse_size(f[0], lineno, "L1");
    r.config.L2 = parse_size(f[1], lineno, "L2");
    r.config.h1 = parse_size(f[2], lineno, "h1");
    r.config.h2 = parse_size(f[3], lineno, "h2");
    try {
      r.config.R = OverlapRatio::from_value(parse_double(f[4], lineno, "R"));
    } catch (const PreconditionError& e) {
      throw ParseError("records CSV line " + std::to_string(lineno) + ": " + e.what());
    }
    r.e = parse_double(f[5], lineno, "e");
    if (!f[6].empty()) r.block_energy = parse_double(f[6], lineno, "block_energy");
    if (f[7] == "ok")
      r.status = RecordStatus::Ok;
    else if (f[7] == "infeasible")
      r.status = RecordStatus::Infeasible;
    else
      throw ParseError("records CSV line " + std::to_string(lineno) + ": bad status '" + f[7] +
                       "'");
    r.wall_time = parse_double(f[8], lineno, "wall_time");
    out.push_back(r);
  }
  return out;
}

std::vector<SweepRecord> read_records_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open records CSV " + path.string());
  return read_records_csv(in);
}

SweepOutcome run_sweep(const Dataset& train, const Dataset& test, const SweepGrid& grid,
                       const SweepOptions& options) {
  train.validate();
  test.validate();
  if (train.size() == 0 || test.size() == 0)
    throw PreconditionError("run_sweep: empty train or test set");
  const std::size_t m = train.m, n = train.n;
  const auto points = grid.points(m, n);
  const std::size_t workers = std::max<std::size_t>(1, options.workers);

  SweepOutcome outcome;
  std::map<Key, SweepRecord> done;

  std::ofstream partial;
  std::filesystem::path partial_path, sidecar_path;
  if (options.output) {
    partial_path = with_suffix(*options.output, ".partial");
    sidecar_path = with_suffix(*options.output, ".grid.json");
    nlohmann::json identity = {{"grid", to_json(grid)},
                               {"m", m},
                               {"n", n},
                               {"dataset", options.dataset_identity}};
    const bool have_partial = std::filesystem::exists(partial_path);
    if (options.resume && have_partial) {
      if (!std::filesystem::exists(sidecar_path))
        throw DataError("resume: " + partial_path.string() + " has no grid sidecar " +
                        sidecar_path.string());
      std::ifstream sin(sidecar_path);
      nlohmann::json prior;
      try {
        prior = nlohmann::json::parse(sin);
      } catch (const nlohmann::json::exception& e) {
        throw DataError("resume: unreadable grid sidecar " + sidecar_path.string() + ": " +
                        e.what());
      }
      if (prior != identity)
        throw DataError("resume: checkpoint " + partial_path.string() +
                        " was written for a different grid or dataset\n  checkpoint: " +
                        prior.dump() + "\n  requested:  " + identity.dump());
      std::set<Key> wanted;
      for (const auto& c : points) wanted.insert(key_of(c));
      for (auto& r : read_records_csv(partial_path)) {
        r.config.k1 = r.config.k2 = grid.k;
        const Key k = key_of(r.config);
        if (!wanted.count(k))
          throw DataError("resume: checkpoint holds point " + key_str(k) + " outside the grid");
        done.emplace(k, r);
      }
      outcome.resumed = done.size();
      partial.open(partial_path, std::ios::app);
    } else {
      std::ofstream(sidecar_path) << identity.dump(2) << '\n';
      partial.open(partial_path, std::ios::trunc);
      partial << kRecordCsvHeader << '\n';
    }
    if (!partial) throw DataError("cannot write checkpoint " + partial_path.string());
  }

  // Pending points grouped by (L1, L2) so trained filters can be shared.
  std::map<std::pair<std::size_t, std::size_t>, std::vector<NetConfig>> pending;
  for (const auto& c : points)
    if (!done.count(key_of(c))) pending[{c.L1, c.L2}].push_back(c);

  std::size_t budget = options.max_new_points.value_or(points.size());
  const std::size_t chunk = std::max<std::size_t>(1, options.checkpoint_every);
  bool interrupted = false;

  for (auto& [group, configs] : pending) {
    if (budget == 0) {
      interrupted = true;
      break;
    }
    if (configs.size() > budget) {
      configs.resize(budget);
      interrupted = true;
    }
    budget -= configs.size();

    std::optional<Prepared> shared;
    if (options.cache_filters) {
      const bool any_feasible = std::any_of(configs.begin(), configs.end(),
                                            [&](const NetConfig& c) { return feasible(c, m, n); });
      if (any_feasible) shared = prepare(train, test, configs.front(), workers);
    }

    for (std::size_t begin = 0; begin < configs.size(); begin += chunk) {
      const std::size_t end = std::min(configs.size(), begin + chunk);
      std::vector<SweepRecord> batch(end - begin);
      parallel_for(end - begin, workers, [&](std::size_t i) {
        const NetConfig& cfg = configs[begin + i];
        const auto t0 = std::chrono::steady_clock::now();
        SweepRecord rec;
        if (!feasible(cfg, m, n)) {
          rec = infeasible_record(cfg);
        } else if (shared) {
          rec = evaluate_point(*shared, train, test, cfg);
        } else {
          rec = evaluate_point(prepare(train, test, cfg, 1), train, test, cfg);
        }
        if (options.record_wall_time)
          rec.wall_time =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        batch[i] = std::move(rec);
      });
      if (partial.is_open()) {
        write_records_csv(partial, batch, false);
        partial.flush();
      }
      outcome.computed += batch.size();
      for (auto& r : batch) done.emplace(key_of(r.config), std::move(r));
    }
    if (interrupted) break;
  }

  for (auto& [k, r] : done) outcome.records.push_back(r);
  outcome.complete = outcome.records.size() == points.size();

  if (options.output && outcome.complete) {
    partial.close();
    std::ofstream out(*options.output, std::ios::trunc);
    if (!out) throw DataError("cannot write " + options.output->string());
    write_records_csv(out, outcome.records);
    out.close();
    std::filesystem::remove(partial_path);
  }
  return outcome;
}

LeastErrorAnalysis least_error_analysis(const std::vector<SweepRecord>& records, std::size_t m,
                                        std::size_t n) {
  if (records.empty()) throw IncompleteGridError("least-error analysis: no records");
  if (m == 0) throw PreconditionError("least-error analysis: image height is 0");

  std::map<Key, double> e_of;
  std::set<std::tuple<std::size_t, std::size_t, int>> cells;
  std::set<std::size_t> H1, H2;
  for (const auto& r : records) {
    e_of[key_of(r.config)] = r.e;
    cells.insert({r.config.L1, r.config.L2, r.config.R.tenths()});
    H1.insert(r.config.h1);
    H2.insert(r.config.h2);
  }

  std::vector<std::string> missing;
  std::size_t missing_count = 0;
  for (const auto& [L1, L2, t] : cells)
    for (std::size_t h1 : H1)
      for (std::size_t h2 : H2) {
        const Key k{L1, L2, h1, h2, t};
        if (!e_of.count(k)) {
          if (missing.size() < 10) missing.push_back(key_str(k));
          ++missing_count;
        }
      }
  if (missing_count > 0) {
    std::string msg = "least-error analysis needs a full (h1, h2) rectangle per (L1, L2, R); " +
                      std::to_string(missing_count) + " cells absent:";
    for (const auto& s : missing) msg += " " + s;
    if (missing_count > missing.size()) msg += " ...";
    throw IncompleteGridError(msg);
  }

  LeastErrorAnalysis a;
  // Per (L1, L2, R, h2): best h1. Iterating h1 ascending with strict '<'
  // keeps the smallest h1 on ties.
  for (const auto& [L1, L2, t] : cells)
    for (std::size_t h2 : H2) {
      ArgminEntry best;
      best.L1 = L1;
      best.L2 = L2;
      best.R = OverlapRatio::from_tenths(t);
      best.best_R = *best.R;
      best.h2 = h2;
      bool first = true;
      for (std::size_t h1 : H1) {
        const double e = e_of.at({L1, L2, h1, h2, t});
        if (first || e < best.e) {
          best.e = e;
          best.h1 = h1;
          first = false;
        }
      }
      a.argmin_per_R.push_back(best);
    }

  // Per (L1, L2, h2) over R: smallest h1 first, then smallest R.
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  std::map<std::pair<std::size_t, std::size_t>, std::vector<int>> Rs;
  for (const auto& [L1, L2, t] : cells) {
    pairs.insert({L1, L2});
    Rs[{L1, L2}].push_back(t);
  }
  for (const auto& [L1, L2] : pairs)
    for (std::size_t h2 : H2) {
      ArgminEntry best;
      best.L1 = L1;
      best.L2 = L2;
      best.h2 = h2;
      bool first = true;
      for (std::size_t h1 : H1)
        for (int t : Rs[{L1, L2}]) {
          const double e = e_of.at({L1, L2, h1, h2, t});
          if (first || e < best.e) {
            best.e = e;
            best.h1 = h1;
            best.best_R = OverlapRatio::from_tenths(t);
            first = false;
          }
        }
      a.argmin_over_R.push_back(best);
    }

  double sum = 0.0;
  bool first_cell = true;
  for (const auto& [L1, L2, t] : cells) {
    LeastErrorCell c;
    c.L1 = L1;
    c.L2 = L2;
    c.R = OverlapRatio::from_tenths(t);
    bool have_l = false, have_la = false;
    for (std::size_t h1 : H1)
      for (std::size_t h2 : H2) {
        const double e = e_of.at({L1, L2, h1, h2, t});
        if (!have_l || e < c.e_l) c.e_l = e, have_l = true;
        if (h2 == n * h1 / m && (!have_la || e < c.e_la)) c.e_la = e, have_la = true;
      }
    if (!have_la)
      throw IncompleteGridError("least-error analysis: no diagonal point h2 = floor(n*h1/m) for L1=" +
                                std::to_string(L1) + ", L2=" + std::to_string(L2) +
                                ", R=" + c.R.str());
    c.difference = c.e_la - c.e_l;
    sum += c.difference;
    a.min_difference = first_cell ? c.difference : std::min(a.min_difference, c.difference);
    first_cell = false;
    a.cells.push_back(c);
  }
  a.mean_difference = sum / static_cast<double>(a.cells.size());
  return a;
}

ErrorGrid error_grid(const std::vector<SweepRecord>& records, std::size_t h1, std::size_t h2,
                     OverlapRatio R, const std::vector<std::size_t>& L1_values,
                     const std::vector<std::size_t>& L2_values) {
  std::map<std::pair<std::size_t, std::size_t>, double> e;
  for (const auto& r : records)
    if (r.config.h1 == h1 && r.config.h2 == h2 && r.config.R == R)
      e[{r.config.L1, r.config.L2}] = r.e;
  ErrorGrid g;
  g.h1 = h1;
  g.h2 = h2;
  g.R = R;
  g.L1_values = L1_values;
  g.L2_values = L2_values;
  std::string missing;
  std::size_t missing_count = 0;
  for (std::size_t L1 : L1_values) {
    std::vector<double> row;
    for (std::size_t L2 : L2_values) {
      auto it = e.find({L1, L2});
      if (it == e.end()) {
        if (missing_count < 10)
          missing += " (L1=" + std::to_string(L1) + ", L2=" + std::to_string(L2) + ")";
        ++missing_count;
        row.push_back(1.0);
      } else {
        row.push_back(it->second);
      }
    }
    g.e.push_back(row);
  }
  if (missing_count > 0)
    throw IncompleteGridError("error grid at h1=" + std::to_string(h1) + ", h2=" +
                              std::to_string(h2) + ", R=" + R.str() + ": " +
                              std::to_string(missing_count) + " cells absent:" + missing +
                              (missing_count > 10 ? " ..." : ""));
  return g;
}

nlohmann::json to_json(const LeastErrorAnalysis& a) {
  auto entry = [](const ArgminEntry& e) {
    nlohmann::json j = {{"L1", e.L1}, {"L2", e.L2}, {"h2", e.h2},
                        {"h1", e.h1}, {"R", e.best_R.value()}, {"e", e.e}};
    return j;
  };
  nlohmann::json per_R = nlohmann::json::array(), over_R = nlohmann::json::array(),
                 cells = nlohmann::json::array();
  for (const auto& e : a.argmin_per_R) per_R.push_back(entry(e));
  for (const auto& e : a.argmin_over_R) over_R.push_back(entry(e));
  for (const auto& c : a.cells)
    cells.push_back({{"L1", c.L1},
                     {"L2", c.L2},
                     {"R", c.R.value()},
                     {"e_l", c.e_l},
                     {"e_la", c.e_la},
                     {"difference", c.difference}});
  return {{"argmin_h1_per_R", per_R},
          {"argmin_h1_over_R", over_R},
          {"cells", cells},
          {"mean_difference", a.mean_difference},
          {"min_difference", a.min_difference},
          {"tie_break", "smallest h1, then smallest R"}};
}

nlohmann::json to_json(const ErrorGrid& g) {
  return {{"h1", g.h1}, {"h2", g.h2}, {"R", g.R.value()},
          {"L1", g.L1_values}, {"L2", g.L2_values}, {"e", g.e}};
}

}  // namespace pcanet
