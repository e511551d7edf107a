#include "pcanet/dataio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"
#include "pcanet/errors.hpp"

namespace pcanet {

// ---- Rng ----

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw PreconditionError("Rng::below: bound must be positive");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  for (;;) {
    const std::uint64_t x = engine_();
    if (x < limit) return x % bound;
  }
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

namespace {

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

// ---- Dataset ----

std::size_t Dataset::class_count() const {
  return std::set<int>(labels.begin(), labels.end()).size();
}

void Dataset::validate() const {
  if (images.size() != labels.size())
    throw DataError("dataset '" + name + "': " + std::to_string(images.size()) + " images but " +
                    std::to_string(labels.size()) + " labels");
  for (std::size_t i = 0; i < images.size(); ++i)
    if (images[i].rows() != m || images[i].cols() != n)
      throw DataError("dataset '" + name + "': image " + std::to_string(i) + " is not " +
                      std::to_string(m) + "x" + std::to_string(n));
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices, const std::string& suffix) const {
  Dataset out;
  out.name = name + suffix;
  out.m = m;
  out.n = n;
  for (std::size_t i : indices) {
    out.images.push_back(images.at(i));
    out.labels.push_back(labels.at(i));
  }
  return out;
}

// ---- container ----

std::vector<std::uint8_t> encode_dataset(const Dataset& d, PixelType dtype) {
  d.validate();
  nlohmann::json header = {{"name", d.name},
                           {"m", d.m},
                           {"n", d.n},
                           {"count", d.size()},
                           {"dtype", dtype == PixelType::U8 ? "u8" : "f64"}};
  const std::string h = header.dump() + "\n";
  std::vector<std::uint8_t> out(h.begin(), h.end());
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (double v : d.images[i].values()) {
      if (dtype == PixelType::U8) {
        if (!(v >= 0.0 && v <= 255.0) || std::floor(v) != v)
          throw DataError("image " + std::to_string(i) + " has pixel value " + std::to_string(v) +
                          " that is not representable as u8");
        out.push_back(static_cast<std::uint8_t>(v));
      } else {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
      }
    }
  }
  for (int label : d.labels) {
    const auto u = static_cast<std::uint32_t>(label);
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(u >> (8 * b)));
  }
  return out;
}

Dataset decode_dataset(const std::vector<std::uint8_t>& bytes) {
  const auto nl = std::find(bytes.begin(), bytes.end(), std::uint8_t{'\n'});
  if (nl == bytes.end()) throw ParseError("dataset header: no newline terminating the JSON header");
  const std::string text(bytes.begin(), nl);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("dataset header: malformed JSON at byte " + std::to_string(e.byte) + ": " +
                     e.what());
  }
  Dataset d;
  std::size_t count = 0;
  std::string dtype;
  try {
    d.name = header.at("name").get<std::string>();
    d.m = header.at("m").get<std::size_t>();
    d.n = header.at("n").get<std::size_t>();
    count = header.at("count").get<std::size_t>();
    dtype = header.at("dtype").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("dataset header (bytes 0-") + std::to_string(text.size()) +
                     "): " + e.what());
  }
  if (dtype != "u8" && dtype != "f64")
    throw ParseError("dataset header: dtype must be \"u8\" or \"f64\", got \"" + dtype + "\"");
  if (d.m == 0 || d.n == 0) throw ParseError("dataset header: m and n must be positive");

  const std::size_t payload_start = text.size() + 1;
  const std::size_t pixel_bytes = dtype == "u8" ? 1 : 8;
  const std::size_t expected = payload_start + count * d.m * d.n * pixel_bytes + count * 4;
  if (bytes.size() != expected) {
    const std::size_t have = bytes.size() > payload_start ? bytes.size() - payload_start : 0;
    throw ParseError((bytes.size() < expected ? "truncated payload" : "trailing bytes in payload") +
                     std::string(": expected ") + std::to_string(expected - payload_start) +
                     " payload bytes, got " + std::to_string(have) + " (file " +
                     std::to_string(bytes.size()) + " of " + std::to_string(expected) + " bytes)");
  }
  std::size_t pos = payload_start;
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> px(d.m * d.n);
    for (double& v : px) {
      if (pixel_bytes == 1) {
        v = bytes[pos++];
      } else {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[pos++]) << (8 * b);
        v = std::bit_cast<double>(bits);
        if (!std::isfinite(v))
          throw ParseError("non-finite pixel at byte " + std::to_string(pos - 8));
      }
    }
    d.images.emplace_back(d.m, d.n, std::move(px));
  }
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t u = 0;
    for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(bytes[pos++]) << (8 * b);
    d.labels.push_back(static_cast<int>(u));
  }
  return d;
}

Dataset parse_csv_dataset(const std::string& text, const std::string& name,
                          std::optional<std::pair<std::size_t, std::size_t>> dims) {
  Dataset d;
  d.name = name;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t line_offset = offset;
    offset += line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> fields;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
        fields.push_back(v);
      } catch (const std::exception&) {
        throw ParseError("CSV line " + std::to_string(line_no) + " (byte " +
                         std::to_string(line_offset) + "): bad number '" + cell + "'");
      }
    }
    if (fields.size() < 2)
      throw ParseError("CSV line " + std::to_string(line_no) + ": needs a label and pixels");
    const std::size_t pixels = fields.size() - 1;
    if (d.m == 0) {
      if (dims) {
        d.m = dims->first;
        d.n = dims->second;
      } else {
        const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(pixels))));
        if (side * side != pixels)
          throw ParseError("CSV line " + std::to_string(line_no) + ": " + std::to_string(pixels) +
                           " pixels is not a square image; pass explicit dimensions");
        d.m = d.n = side;
      }
    }
    if (pixels != d.m * d.n)
      throw ParseError("CSV line " + std::to_string(line_no) + " (byte " +
                       std::to_string(line_offset) + "): expected " + std::to_string(d.m * d.n) +
                       " pixels, got " + std::to_string(pixels));
    if (fields[0] != std::floor(fields[0]))
      throw ParseError("CSV line " + std::to_string(line_no) + ": label must be an integer");
    d.labels.push_back(static_cast<int>(fields[0]));
    d.images.emplace_back(d.m, d.n, std::vector<double>(fields.begin() + 1, fields.end()));
  }
  if (d.images.empty()) throw ParseError("CSV dataset is empty");
  return d;
}

Dataset load_dataset(const std::filesystem::path& path,
                     std::optional<std::pair<std::size_t, std::size_t>> csv_dims) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  const auto first = std::find_if(bytes.begin(), bytes.end(),
                                  [](std::uint8_t c) { return !std::isspace(c); });
  Dataset d;
  if (first != bytes.end() && *first == '{')
    d = decode_dataset(bytes);
  else
    d = parse_csv_dataset(std::string(bytes.begin(), bytes.end()), path.stem().string(), csv_dims);
  d.validate();
  return d;
}

void save_dataset(const Dataset& d, const std::filesystem::path& path, PixelType dtype) {
  const auto bytes = encode_dataset(d, dtype);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing " + path.string());
}

std::uint64_t content_hash(const Dataset& d) {
  std::uint64_t h = 14695981039346656037ULL;
  for (std::uint8_t b : encode_dataset(d, PixelType::F64)) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  return h;
}

// ---- splitting ----

namespace {

// Largest-remainder apportionment of `total` across `weights`, capped per slot.
std::vector<std::size_t> apportion(std::size_t total, const std::vector<std::size_t>& weights,
                                   const std::vector<std::size_t>& caps) {
  std::size_t weight_sum = 0;
  for (std::size_t w : weights) weight_sum += w;
  std::vector<std::size_t> out(weights.size(), 0);
  if (weight_sum == 0 || total == 0) return out;
  std::vector<std::pair<std::size_t, std::size_t>> remainders;  // (remainder numerator, index)
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const std::size_t num = total * weights[i];
    out[i] = std::min(num / weight_sum, caps[i]);
    assigned += out[i];
    remainders.emplace_back(num % weight_sum, i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (const auto& [rem, i] : remainders) {
    if (assigned == total) break;
    if (out[i] < caps[i]) {
      ++out[i];
      ++assigned;
    }
  }
  // Caps may leave a shortfall; fill from any slot with spare capacity.
  for (std::size_t i = 0; i < out.size() && assigned < total; ++i) {
    const std::size_t take = std::min(caps[i] - out[i], total - assigned);
    out[i] += take;
    assigned += take;
  }
  return out;
}

}  // namespace

Split split_dataset(const Dataset& d, const SplitSpec& spec) {
  d.validate();
  if (spec.train_count + spec.test_count > d.size())
    throw PreconditionError("split: train_count + test_count = " +
                            std::to_string(spec.train_count + spec.test_count) +
                            " exceeds dataset size " + std::to_string(d.size()));
  Rng rng(spec.seed);
  Split s;
  if (!spec.stratified) {
    std::vector<std::size_t> idx(d.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    shuffle(idx, rng);
    s.train_indices.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(spec.train_count));
    s.test_indices.assign(idx.begin() + static_cast<std::ptrdiff_t>(spec.train_count),
                          idx.begin() + static_cast<std::ptrdiff_t>(spec.train_count + spec.test_count));
  } else {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < d.size(); ++i) by_class[d.labels[i]].push_back(i);
    std::vector<std::vector<std::size_t>> groups;
    std::vector<std::size_t> sizes;
    for (auto& [label, members] : by_class) {
      shuffle(members, rng);
      groups.push_back(members);
      sizes.push_back(members.size());
    }
    const auto train_q = apportion(spec.train_count, sizes, sizes);
    std::vector<std::size_t> rest(sizes.size());
    for (std::size_t c = 0; c < sizes.size(); ++c) rest[c] = sizes[c] - train_q[c];
    const auto test_q = apportion(spec.test_count, sizes, rest);
    for (std::size_t c = 0; c < groups.size(); ++c) {
      for (std::size_t k = 0; k < train_q[c]; ++k) s.train_indices.push_back(groups[c][k]);
      for (std::size_t k = 0; k < test_q[c]; ++k) s.test_indices.push_back(groups[c][train_q[c] + k]);
    }
    shuffle(s.train_indices, rng);
    shuffle(s.test_indices, rng);
  }
  s.train = d.subset(s.train_indices, "/train");
  s.test = d.subset(s.test_indices, "/test");
  return s;
}

// ---- synthetic data ----

Dataset synth(std::size_t classes, std::size_t per_class, std::size_t m, std::size_t n,
              std::uint64_t seed, const SynthOptions& options) {
  if (classes < 1 || per_class < 1 || m < 1 || n < 1)
    throw PreconditionError("synth: classes, per_class, m and n must all be >= 1");
  if (options.cells < 1) throw PreconditionError("synth: cells must be >= 1");
  Rng rng(seed);
  const std::size_t cells = options.cells;

  // A class is a cells x cells layout of oriented gratings.
  struct Grating {
    double kx, ky;
  };
  std::vector<std::vector<Grating>> layouts(classes);
  for (auto& layout : layouts) {
    for (std::size_t k = 0; k < cells * cells; ++k) {
      const double theta = std::numbers::pi * rng.uniform();
      const double period =
          options.min_period + (options.max_period - options.min_period) * rng.uniform();
      const double f = 2.0 * std::numbers::pi / period;
      layout.push_back({f * std::cos(theta), f * std::sin(theta)});
    }
  }

  const double noise_sigma =
      std::isinf(options.snr) ? 0.0 : options.amplitude / std::sqrt(2.0) / std::max(options.snr, 1e-12);
  const auto cell_of = [&](double coord, std::size_t extent) {
    const double scaled = coord * static_cast<double>(cells) / static_cast<double>(extent);
    return static_cast<std::size_t>(std::clamp(scaled, 0.0, static_cast<double>(cells) - 1.0));
  };

  Dataset d;
  d.name = "synth";
  d.m = m;
  d.n = n;
  const auto shift_range = static_cast<std::uint64_t>(2 * options.max_shift + 1);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t k = 0; k < per_class; ++k) {
      const double dr = static_cast<double>(rng.below(shift_range)) - static_cast<double>(options.max_shift);
      const double dc = static_cast<double>(rng.below(shift_range)) - static_cast<double>(options.max_shift);
      const double gain = 1.0 + options.gain_jitter * (2.0 * rng.uniform() - 1.0);
      std::vector<double> phase(cells * cells);
      for (double& p : phase) p = options.random_phase ? 2.0 * std::numbers::pi * rng.uniform() : 0.0;
      Matrix img(m, n);
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t col = 0; col < n; ++col) {
          const double y = static_cast<double>(r) + dr;
          const double x = static_cast<double>(col) + dc;
          const std::size_t cell = cell_of(y, m) * cells + cell_of(x, n);
          const Grating& g = layouts[c][cell];
          double v = options.background +
                     options.amplitude * gain * std::cos(g.ky * y + g.kx * x + phase[cell]);
          if (noise_sigma > 0.0) v += noise_sigma * rng.normal();
          img(r, col) = v;
        }
      d.images.push_back(std::move(img));
      d.labels.push_back(static_cast<int>(c));
    }
  }
  return d;
}

}  // namespace pcanet
