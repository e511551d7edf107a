#include "pcanet/pcanet.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "pcanet/errors.hpp"
#include "pcanet/parallel.hpp"

namespace pcanet {

OverlapRatio OverlapRatio::from_tenths(int tenths) {
  if (tenths < 0 || tenths > 9)
    throw PreconditionError("overlap ratio must be one of 0.0, 0.1, ..., 0.9 (got " +
                            std::to_string(tenths) + " tenths)");
  return OverlapRatio(tenths);
}

OverlapRatio OverlapRatio::from_value(double r) {
  const double scaled = r * 10.0;
  const double nearest = std::round(scaled);
  if (!std::isfinite(r) || std::abs(scaled - nearest) > 1e-8 || nearest < 0.0 || nearest > 9.0) {
    std::ostringstream os;
    os << "overlap ratio R = " << r << " is not one of 0.0, 0.1, ..., 0.9";
    throw PreconditionError(os.str());
  }
  return OverlapRatio(static_cast<int>(nearest));
}

std::vector<OverlapRatio> OverlapRatio::grid() {
  std::vector<OverlapRatio> g;
  for (int t = 0; t <= 9; ++t) g.push_back(OverlapRatio(t));
  return g;
}

std::string OverlapRatio::str() const { return "0." + std::to_string(tenths_); }

void NetConfig::validate() const {
  if (k1 == 0 || k1 % 2 == 0) throw PreconditionError("k1 must be odd and >= 1");
  if (k2 == 0 || k2 % 2 == 0) throw PreconditionError("k2 must be odd and >= 1");
  const std::size_t kk = k1 * k2;
  if (L1 < 1 || L1 > kk)
    throw PreconditionError("L1 = " + std::to_string(L1) + " violates 1 <= L1 <= k1*k2 = " +
                            std::to_string(kk));
  if (L2 < 1 || L2 > kk)
    throw PreconditionError("L2 = " + std::to_string(L2) + " violates 1 <= L2 <= k1*k2 = " +
                            std::to_string(kk));
  if (h1 < 1) throw PreconditionError("h1 must be >= 1");
  if (h2 < 1) throw PreconditionError("h2 must be >= 1");
}

void NetConfig::validate_blocks(std::size_t m, std::size_t n) const {
  validate();
  if (h1 > m)
    throw InfeasibleConfigError("block height h1 = " + std::to_string(h1) +
                                " exceeds image rows m = " + std::to_string(m));
  if (h2 > n)
    throw InfeasibleConfigError("block width h2 = " + std::to_string(h2) +
                                " exceeds image cols n = " + std::to_string(n));
}

double FilterBank::eigenvalue_ratio(std::size_t count) const {
  if (eigenvalue_total <= 0.0) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < count && i < eigenvalues.size(); ++i) acc += eigenvalues[i];
  return acc / eigenvalue_total;
}

void TrainedNet::require_image(const ImageMatrix& image) const {
  if (image.rows() != rows || image.cols() != cols)
    throw PreconditionError("image is " + std::to_string(image.rows()) + "x" +
                            std::to_string(image.cols()) + " but the network was trained on " +
                            std::to_string(rows) + "x" + std::to_string(cols));
}

namespace {

// Accumulates P * P^T for a mean-removed (or raw) patch matrix into `gram`.
void accumulate_gram(const Matrix& patches, Matrix& gram) {
  const std::size_t d = patches.rows();
  for (std::size_t i = 0; i < d; ++i) {
    const auto ri = patches.row(i);
    for (std::size_t j = i; j < d; ++j) {
      const auto rj = patches.row(j);
      double s = 0.0;
      for (std::size_t c = 0; c < ri.size(); ++c) s += ri[c] * rj[c];
      gram(i, j) += s;
    }
  }
}

void symmetrize_upper(Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < i; ++j) m(i, j) = m(j, i);
}

FilterBank bank_from_covariance(const Matrix& cov, std::size_t count, std::size_t k1,
                                std::size_t k2) {
  const EigenDecomposition eig = eigh_symmetric(cov);
  FilterBank bank;
  for (std::size_t i = 0; i < cov.rows(); ++i) bank.eigenvalue_total += cov(i, i);
  for (std::size_t l = 0; l < count; ++l) {
    const std::vector<double> v = eig.eigenvectors.column(l);
    bank.filters.push_back(reshape_filter(v, k1, k2));
    bank.eigenvalues.push_back(eig.eigenvalues[l]);
  }
  return bank;
}

// Sums per-item Gram matrices in index order so the result is independent of
// how the items were scheduled.
Matrix ordered_sum(const std::vector<Matrix>& parts, std::size_t d) {
  Matrix total(d, d);
  for (const Matrix& p : parts) {
    auto t = total.values();
    auto pv = p.values();
    for (std::size_t i = 0; i < t.size(); ++i) t[i] += pv[i];
  }
  symmetrize_upper(total);
  return total;
}

bool degenerate(const Matrix& cov, double patch_scale) {
  double trace = 0.0;
  for (std::size_t i = 0; i < cov.rows(); ++i) trace += cov(i, i);
  return trace <= 1e-12 * patch_scale;
}

}  // namespace

TrainedNet train(const std::vector<ImageMatrix>& images, const NetConfig& config,
                 const TrainOptions& options) {
  config.validate();
  if (images.empty()) throw PreconditionError("train: at least one training image is required");
  const std::size_t m = images.front().rows();
  const std::size_t n = images.front().cols();
  for (std::size_t i = 0; i < images.size(); ++i)
    if (images[i].rows() != m || images[i].cols() != n)
      throw PreconditionError("train: image " + std::to_string(i) + " is " +
                              std::to_string(images[i].rows()) + "x" +
                              std::to_string(images[i].cols()) + ", expected " +
                              std::to_string(m) + "x" + std::to_string(n));
  if (config.k1 > m || config.k2 > n)
    throw PreconditionError("train: patch size exceeds image size");

  const std::size_t d = config.k1 * config.k2;
  const std::size_t N = images.size();
  const double mn = static_cast<double>(m * n);

  TrainedNet net;
  net.config = config;
  net.rows = m;
  net.cols = n;

  // Stage 1: C1 = X_bar X_bar^T / (N m n).
  std::vector<Matrix> grams(N, Matrix(d, d));
  std::vector<double> raw_energy(N, 0.0);
  parallel_for(N, options.workers, [&](std::size_t i) {
    const Matrix x = extract_patches(images[i], config.k1, config.k2);
    for (double v : x.values()) raw_energy[i] += v * v;
    accumulate_gram(remove_patch_mean(x), grams[i]);
  });
  Matrix c1 = ordered_sum(grams, d);
  c1 = (1.0 / (static_cast<double>(N) * mn)) * c1;
  double scale1 = 0.0;
  for (double e : raw_energy) scale1 += e;
  scale1 /= static_cast<double>(N) * mn;
  if (degenerate(c1, scale1))
    net.warnings.push_back("stage-1 covariance is numerically zero; filters are an arbitrary basis");
  net.stage1 = bank_from_covariance(c1, config.L1, config.k1, config.k2);

  // Stage 2: C2 = Y_bar Y_bar^T / (N L1 m n).
  const std::size_t L1 = config.L1;
  grams.assign(N * L1, Matrix(d, d));
  raw_energy.assign(N * L1, 0.0);
  parallel_for(N * L1, options.workers, [&](std::size_t job) {
    const std::size_t i = job / L1;
    const std::size_t l = job % L1;
    const Matrix out1 = correlate_same(images[i], net.stage1.filters[l]);
    Matrix y = extract_patches(out1, config.k1, config.k2);
    for (double v : y.values()) raw_energy[job] += v * v;
    if (!config.skip_second_mean_removal) y = remove_patch_mean(y);
    accumulate_gram(y, grams[job]);
  });
  Matrix c2 = ordered_sum(grams, d);
  c2 = (1.0 / (static_cast<double>(N * L1) * mn)) * c2;
  double scale2 = 0.0;
  for (double e : raw_energy) scale2 += e;
  scale2 /= static_cast<double>(N * L1) * mn;
  if (degenerate(c2, scale2))
    net.warnings.push_back("stage-2 covariance is numerically zero; filters are an arbitrary basis");
  net.stage2 = bank_from_covariance(c2, config.L2, config.k1, config.k2);
  return net;
}

StageOutputs forward_stage_outputs(const TrainedNet& net, const ImageMatrix& image) {
  net.require_image(image);
  StageOutputs out;
  out.stage1.reserve(net.stage1.filters.size());
  for (const Matrix& w : net.stage1.filters) out.stage1.push_back(correlate_same(image, w));
  out.stage2.reserve(net.stage1.filters.size() * net.stage2.filters.size());
  for (const Matrix& s1 : out.stage1)
    for (const Matrix& w : net.stage2.filters) out.stage2.push_back(correlate_same(s1, w));
  return out;
}

Matrix binarize(const Matrix& stage2_output) {
  Matrix p(stage2_output.rows(), stage2_output.cols());
  auto src = stage2_output.values();
  auto dst = p.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > 0.0 ? 1.0 : 0.0;
  return p;
}

Matrix weight_and_sum(const std::vector<Matrix>& binary_maps) {
  if (binary_maps.empty()) throw PreconditionError("weight_and_sum: L2 must be >= 1");
  const std::size_t m = binary_maps.front().rows();
  const std::size_t n = binary_maps.front().cols();
  Matrix t(m, n);
  double weight = 1.0;
  for (const Matrix& p : binary_maps) {
    if (p.rows() != m || p.cols() != n)
      throw PreconditionError("weight_and_sum: binary maps differ in size");
    auto dst = t.values();
    auto src = p.values();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += weight * src[i];
    weight *= 2.0;
  }
  return t;
}

std::vector<Matrix> decimal_maps(const TrainedNet& net, const ImageMatrix& image) {
  const StageOutputs outs = forward_stage_outputs(net, image);
  const std::size_t L1 = outs.stage1.size();
  const std::size_t L2 = net.stage2.filters.size();
  std::vector<Matrix> maps;
  maps.reserve(L1);
  for (std::size_t l = 0; l < L1; ++l) {
    std::vector<Matrix> bits;
    bits.reserve(L2);
    for (std::size_t e = 0; e < L2; ++e) bits.push_back(binarize(outs.stage2[l * L2 + e]));
    maps.push_back(weight_and_sum(bits));
  }
  return maps;
}

std::size_t block_stride(std::size_t h, OverlapRatio R) {
  const std::size_t keep = static_cast<std::size_t>(10 - R.tenths());
  const std::size_t s = (keep * h + 5) / 10;
  return std::max<std::size_t>(1, s);
}

std::vector<BlockPosition> block_positions(std::size_t m, std::size_t n, std::size_t h1,
                                           std::size_t h2, OverlapRatio R) {
  if (h1 < 1 || h2 < 1) throw InfeasibleConfigError("block dimensions must be >= 1");
  if (h1 > m)
    throw InfeasibleConfigError("block height h1 = " + std::to_string(h1) +
                                " exceeds map rows m = " + std::to_string(m));
  if (h2 > n)
    throw InfeasibleConfigError("block width h2 = " + std::to_string(h2) +
                                " exceeds map cols n = " + std::to_string(n));
  const std::size_t s1 = block_stride(h1, R);
  const std::size_t s2 = block_stride(h2, R);
  std::vector<BlockPosition> pos;
  pos.reserve(((m - h1) / s1 + 1) * ((n - h2) / s2 + 1));
  for (std::size_t r = 0; r + h1 <= m; r += s1)
    for (std::size_t c = 0; c + h2 <= n; c += s2) pos.push_back({r, c});
  return pos;
}

Matrix block_slide(const Matrix& map, std::size_t h1, std::size_t h2, OverlapRatio R) {
  const auto pos = block_positions(map.rows(), map.cols(), h1, h2, R);
  Matrix z(h1 * h2, pos.size());
  for (std::size_t j = 0; j < pos.size(); ++j)
    for (std::size_t dc = 0; dc < h2; ++dc)
      for (std::size_t dr = 0; dr < h1; ++dr)
        z(dc * h1 + dr, j) = map(pos[j].row + dr, pos[j].col + dc);
  return z;
}

FeatureVector histogram_feature(const std::vector<Matrix>& maps, std::size_t L2, std::size_t h1,
                                std::size_t h2, OverlapRatio R) {
  if (maps.empty()) throw PreconditionError("histogram_feature: no decimal maps");
  if (L2 < 1 || L2 > 30) throw PreconditionError("histogram_feature: L2 out of range");
  const std::size_t bins = std::size_t{1} << L2;
  const auto pos = block_positions(maps.front().rows(), maps.front().cols(), h1, h2, R);
  FeatureVector f;
  f.bins = bins;
  f.block_count = pos.size();
  f.values.assign(bins * maps.size() * pos.size(), 0.0);
  std::size_t offset = 0;
  for (const Matrix& t : maps) {
    for (const BlockPosition& p : pos) {
      for (std::size_t dr = 0; dr < h1; ++dr)
        for (std::size_t dc = 0; dc < h2; ++dc) {
          const double v = t(p.row + dr, p.col + dc);
          const auto bin = static_cast<std::size_t>(v);
          if (v < 0.0 || static_cast<double>(bin) != v || bin >= bins)
            throw PreconditionError("histogram_feature: decimal map value outside 0..2^L2-1");
          f.values[offset + bin] += 1.0;
        }
      offset += bins;
    }
  }
  return f;
}

FeatureVector extract_feature(const TrainedNet& net, const ImageMatrix& image) {
  net.config.validate_blocks(net.rows, net.cols);
  return histogram_feature(decimal_maps(net, image), net.stage2.filters.size(), net.config.h1,
                           net.config.h2, net.config.R);
}

// ---- serialization ----

namespace {

constexpr char kMagic[4] = {'P', 'C', 'N', '1'};

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::vector<std::uint8_t>& b) : b_(b) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }
  void expect_magic() {
    need(4);
    if (std::memcmp(b_.data(), kMagic, 4) != 0)
      throw ParseError("model file: bad magic at byte 0 (expected \"PCN1\")");
    pos_ += 4;
  }
  bool done() const { return pos_ == b_.size(); }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > b_.size())
      throw ParseError("model file truncated: need " + std::to_string(n) + " bytes at offset " +
                       std::to_string(pos_) + ", file has " + std::to_string(b_.size()));
  }
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
};

void write_bank(ByteWriter& w, const FilterBank& bank) {
  for (const Matrix& f : bank.filters)
    for (double v : f.values()) w.f64(v);
  for (double e : bank.eigenvalues) w.f64(e);
}

FilterBank read_bank(ByteReader& r, std::size_t count, std::size_t k1, std::size_t k2) {
  FilterBank bank;
  for (std::size_t l = 0; l < count; ++l) {
    std::vector<double> v(k1 * k2);
    for (double& x : v) x = r.f64();
    bank.filters.emplace_back(k1, k2, std::move(v));
  }
  for (std::size_t l = 0; l < count; ++l) bank.eigenvalues.push_back(r.f64());
  return bank;
}

}  // namespace

std::vector<std::uint8_t> serialize_net(const TrainedNet& net) {
  ByteWriter w;
  w.raw(kMagic, 4);
  const NetConfig& c = net.config;
  for (std::size_t v : {c.k1, c.k2, net.stage1.filters.size(), net.stage2.filters.size(), net.rows,
                        net.cols})
    w.u32(static_cast<std::uint32_t>(v));
  write_bank(w, net.stage1);
  write_bank(w, net.stage2);
  w.f64(net.stage1.eigenvalue_total);
  w.f64(net.stage2.eigenvalue_total);
  w.u32(static_cast<std::uint32_t>(c.h1));
  w.u32(static_cast<std::uint32_t>(c.h2));
  w.u32(static_cast<std::uint32_t>(c.R.tenths()));
  w.u32(c.skip_second_mean_removal ? 1U : 0U);
  return w.take();
}

TrainedNet deserialize_net(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes);
  r.expect_magic();
  TrainedNet net;
  NetConfig& c = net.config;
  c.k1 = r.u32();
  c.k2 = r.u32();
  c.L1 = r.u32();
  c.L2 = r.u32();
  net.rows = r.u32();
  net.cols = r.u32();
  if (c.k1 * c.k2 == 0 || c.k1 * c.k2 > 1024 || c.L1 > c.k1 * c.k2 || c.L2 > c.k1 * c.k2)
    throw ParseError("model file: implausible header counts");
  net.stage1 = read_bank(r, c.L1, c.k1, c.k2);
  net.stage2 = read_bank(r, c.L2, c.k1, c.k2);
  net.stage1.eigenvalue_total = r.f64();
  net.stage2.eigenvalue_total = r.f64();
  c.h1 = r.u32();
  c.h2 = r.u32();
  const std::uint32_t tenths = r.u32();
  if (tenths > 9) throw ParseError("model file: overlap ratio out of range");
  c.R = OverlapRatio::from_tenths(static_cast<int>(tenths));
  c.skip_second_mean_removal = r.u32() != 0;
  if (!r.done())
    throw ParseError("model file: " + std::to_string(bytes.size() - r.pos()) +
                     " trailing bytes after offset " + std::to_string(r.pos()));
  return net;
}

void save_net(const TrainedNet& net, const std::filesystem::path& path) {
  const auto bytes = serialize_net(net);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing " + path.string());
}

TrainedNet load_net(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_net(bytes);
}

}  // namespace pcanet
