#include "omra/codec.hpp"

#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>

#include "omra/binio.hpp"
#include "omra/error.hpp"

namespace omra {

namespace dct {

namespace {

struct Basis {
  std::array<double, 64> c{};  // c[u*8+x]
  Basis() {
    for (int u = 0; u < 8; ++u) {
      double a = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (int x = 0; x < 8; ++x) c[u * 8 + x] = a * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
    }
  }
};

const Basis& basis() {
  static const Basis b;
  return b;
}

}  // namespace

const std::array<int, 64> kZigZag = {
    0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,  12, 19, 26, 33, 40, 48,
    41, 34, 27, 20, 13, 6,  7,  14, 21, 28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23,
    30, 37, 44, 51, 58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};

void forward(const Block& in, Block& out) {
  const auto& c = basis().c;
  Block tmp{};
  for (int y = 0; y < 8; ++y)
    for (int u = 0; u < 8; ++u) {
      double s = 0.0;
      for (int x = 0; x < 8; ++x) s += c[u * 8 + x] * in[y * 8 + x];
      tmp[y * 8 + u] = s;
    }
  for (int v = 0; v < 8; ++v)
    for (int u = 0; u < 8; ++u) {
      double s = 0.0;
      for (int y = 0; y < 8; ++y) s += c[v * 8 + y] * tmp[y * 8 + u];
      out[v * 8 + u] = s;
    }
}

void inverse(const Block& in, Block& out) {
  const auto& c = basis().c;
  Block tmp{};
  for (int v = 0; v < 8; ++v)
    for (int x = 0; x < 8; ++x) {
      double s = 0.0;
      for (int u = 0; u < 8; ++u) s += c[u * 8 + x] * in[v * 8 + u];
      tmp[v * 8 + x] = s;
    }
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      double s = 0.0;
      for (int v = 0; v < 8; ++v) s += c[v * 8 + y] * tmp[v * 8 + x];
      out[y * 8 + x] = s;
    }
}

}  // namespace dct

namespace {

constexpr int kHeaderBits = 4;
constexpr double kDeadZoneOffset = 1.0 / 3.0;

int flow_multiplier(FlowPrecision p) { return p == FlowPrecision::HalfPel ? 2 : 1; }

std::int32_t round_half_away(double v) {
  return static_cast<std::int32_t>(v < 0 ? -std::floor(-v + 0.5) : std::floor(v + 0.5));
}

std::int32_t quantize(double coeff, double q_step) {
  std::int32_t mag = static_cast<std::int32_t>(std::floor(std::abs(coeff) / q_step + kDeadZoneOffset));
  return coeff < 0 ? -mag : mag;
}

struct BlockGrid {
  int nbx;
  int nby;
};

BlockGrid flow_blocks(int grid_w, int grid_h, int block) {
  return {(grid_w + block - 1) / block, (grid_h + block - 1) / block};
}

// Run-level coding of an integer list: ue(nonzero count), then (ue(run), se(value)).
void put_run_level(BitWriter& bw, const std::vector<std::int32_t>& values) {
  std::uint32_t nnz = 0;
  for (auto v : values) nnz += v != 0;
  bw.put_ue(nnz);
  std::uint32_t run = 0;
  for (auto v : values) {
    if (v == 0) {
      ++run;
      continue;
    }
    bw.put_ue(run);
    bw.put_se(v);
    run = 0;
  }
}

std::vector<std::int32_t> get_run_level(BitReader& br, std::size_t length) {
  std::vector<std::int32_t> values(length, 0);
  std::uint32_t nnz = br.get_ue();
  if (nnz > length) throw DataError("malformed stream: too many coefficients");
  std::size_t pos = 0;
  for (std::uint32_t i = 0; i < nnz; ++i) {
    std::uint32_t run = br.get_ue();
    pos += run;
    if (pos >= length) throw DataError("malformed stream: run past end");
    std::int32_t v = br.get_se();
    if (v == 0) throw DataError("malformed stream: zero level");
    values[pos++] = v;
  }
  return values;
}

std::uint64_t run_level_bits(BitReader& br, std::size_t length) {
  std::uint64_t start = br.position();
  get_run_level(br, length);
  return br.position() - start;
}

std::vector<std::int32_t> flow_symbols(const FlowField& f, int block, int mult) {
  auto [nbx, nby] = flow_blocks(f.grid_w, f.grid_h, block);
  std::vector<std::int32_t> out;
  out.reserve(static_cast<std::size_t>(nbx) * nby * 2);
  for (int by = 0; by < nby; ++by)
    for (int bx = 0; bx < nbx; ++bx) {
      const auto& v = f.at(bx * block, by * block);
      out.push_back(round_half_away(v.dx * mult));
      out.push_back(round_half_away(v.dy * mult));
    }
  return out;
}

FlowField flow_from_symbols(const std::vector<std::int32_t>& sym, int grid_w, int grid_h, int scale, int block,
                            int mult) {
  auto [nbx, nby] = flow_blocks(grid_w, grid_h, block);
  FlowField f(grid_w, grid_h, scale);
  for (int y = 0; y < grid_h; ++y)
    for (int x = 0; x < grid_w; ++x) {
      std::size_t b = static_cast<std::size_t>(y / block) * nbx + x / block;
      f.at(x, y) = {static_cast<double>(sym[2 * b]) / mult, static_cast<double>(sym[2 * b + 1]) / mult};
    }
  (void)nby;
  return f;
}

// Prediction is either a frame or a constant (intra).
struct Prediction {
  const Frame* frame = nullptr;
  int constant = 128;
  int at(int x, int y) const { return frame ? frame->at(x, y) : constant; }
};

// Codes the residual of `cur` against `pred` and returns the reconstruction.
Frame code_residual(BitWriter& bw, const Frame& cur, const Prediction& pred, double q_step) {
  Frame recon = cur;
  dct::Block blk{};
  dct::Block coef{};
  std::vector<std::int32_t> levels(64);
  for (int by = 0; by < cur.height(); by += 8) {
    for (int bx = 0; bx < cur.width(); bx += 8) {
      for (int j = 0; j < 8; ++j)
        for (int i = 0; i < 8; ++i) blk[j * 8 + i] = cur.at(bx + i, by + j) - pred.at(bx + i, by + j);
      dct::forward(blk, coef);
      for (int n = 0; n < 64; ++n) levels[n] = quantize(coef[dct::kZigZag[n]], q_step);
      put_run_level(bw, levels);
      for (int n = 0; n < 64; ++n) coef[dct::kZigZag[n]] = levels[n] * q_step;
      dct::inverse(coef, blk);
      for (int j = 0; j < 8; ++j)
        for (int i = 0; i < 8; ++i) recon.at(bx + i, by + j) = to_sample(pred.at(bx + i, by + j) + blk[j * 8 + i]);
    }
  }
  return recon;
}

Frame decode_residual(BitReader& br, int width, int height, const Prediction& pred, double q_step) {
  Frame recon(width, height);
  dct::Block blk{};
  dct::Block coef{};
  for (int by = 0; by < height; by += 8) {
    for (int bx = 0; bx < width; bx += 8) {
      auto levels = get_run_level(br, 64);
      for (int n = 0; n < 64; ++n) coef[dct::kZigZag[n]] = levels[n] * q_step;
      dct::inverse(coef, blk);
      for (int j = 0; j < 8; ++j)
        for (int i = 0; i < 8; ++i) recon.at(bx + i, by + j) = to_sample(pred.at(bx + i, by + j) + blk[j * 8 + i]);
    }
  }
  return recon;
}

Frame bi_average(const Frame& a, const Frame& b) {
  Frame out = a;
  auto sa = a.samples();
  auto sb = b.samples();
  auto so = out.samples();
  for (std::size_t i = 0; i < so.size(); ++i) so[i] = static_cast<std::uint8_t>((sa[i] + sb[i] + 1) / 2);
  return out;
}

std::uint64_t downsample_work(int w, int h, int scale) {
  std::uint64_t n = 0;
  for (int s = 2; s <= scale; s *= 2) n += static_cast<std::uint64_t>(w / s) * (h / s);
  return n;
}

void add_transform_work(ComplexityLedger& l, int w, int h) {
  std::uint64_t blocks = static_cast<std::uint64_t>(w / 8) * (h / 8);
  l.add({MacKind::Dct8x8, 2 * blocks});
  l.add({MacKind::QuantEntropy, static_cast<std::uint64_t>(w) * h});
}

void check_refs(const Frame& cur, const Frame& a, const Frame& b) {
  if (cur.width() != a.width() || cur.height() != a.height() || cur.width() != b.width() ||
      cur.height() != b.height())
    throw DataError("dimension mismatch");
}

}  // namespace

void validate(const QuantConfig& cfg) {
  if (!(cfg.q_step >= 1.0)) throw DataError("q_step must be >= 1");
  if (!(cfg.lambda > 0.0)) throw DataError("lambda must be > 0");
}

std::vector<QuantConfig> default_rate_ladder() {
  return {{24.0, FlowPrecision::IntegerPel, 0.4},
          {16.0, FlowPrecision::IntegerPel, 1.0},
          {10.0, FlowPrecision::IntegerPel, 2.5},
          {6.0, FlowPrecision::IntegerPel, 6.0}};
}

int factor_index(int s) {
  switch (s) {
    case 1: return 0;
    case 2: return 1;
    case 4: return 2;
    case 8: return 3;
    default: throw DataError("invalid downsampling factor " + std::to_string(s));
  }
}

double rd_cost(double distortion, double rate_bits, double lambda) { return lambda * distortion + rate_bits; }

ScaledFlows estimate_scaled_flows(const Frame& cur, const Frame& ref_past, const Frame& ref_future, int scale,
                                  const MotionConfig& mcfg) {
  check_refs(cur, ref_past, ref_future);
  ScaledFlows out;
  out.scale = scale;
  Frame c = downsample_frame(cur, scale);
  Frame p = downsample_frame(ref_past, scale);
  Frame f = downsample_frame(ref_future, scale);
  out.past = estimate_flow(c, p, mcfg, scale);
  out.future = estimate_flow(c, f, mcfg, scale);

  out.macs.add({MacKind::BoxDownsample, 3 * downsample_work(cur.width(), cur.height(), scale)});
  auto [nbx, nby] = flow_blocks(c.width(), c.height(), mcfg.block_size);
  std::uint64_t blocks = static_cast<std::uint64_t>(nbx) * nby;
  out.macs.add({MacKind::BlockSearch, 2 * blocks, mcfg.block_size, mcfg.search_range});
  if (mcfg.refinement == Refinement::HalfPel) out.macs.add({MacKind::HalfPelRefine, 2 * blocks, mcfg.block_size});
  return out;
}

EncodedFrame encode_bframe(const Frame& cur, const Frame& ref_past, const Frame& ref_future, int scale,
                           const QuantConfig& cfg, const MotionConfig& mcfg) {
  auto flows = estimate_scaled_flows(cur, ref_past, ref_future, scale, mcfg);
  return encode_bframe(cur, ref_past, ref_future, flows, cfg, mcfg);
}

EncodedFrame encode_bframe(const Frame& cur, const Frame& ref_past, const Frame& ref_future,
                           const ScaledFlows& flows, const QuantConfig& cfg, const MotionConfig& mcfg) {
  validate(cfg);
  validate(mcfg);
  check_refs(cur, ref_past, ref_future);
  const int scale = flows.scale;
  if (!valid_scale(scale)) throw DataError("invalid downsampling factor");

  EncodedFrame out;
  out.scale = scale;
  out.macs = flows.macs;
  BitWriter bw;
  bw.put_bits(static_cast<std::uint32_t>(scale), kHeaderBits);
  out.bits.header = bw.bit_count();

  const int mult = flow_multiplier(cfg.flow_precision);
  const int gw = cur.width() / scale;
  const int gh = cur.height() / scale;
  auto sym_past = flow_symbols(flows.past, mcfg.block_size, mult);
  auto sym_future = flow_symbols(flows.future, mcfg.block_size, mult);
  put_run_level(bw, sym_past);
  put_run_level(bw, sym_future);
  out.bits.flow = bw.bit_count() - out.bits.header;

  out.flow_past = flow_from_symbols(sym_past, gw, gh, scale, mcfg.block_size, mult);
  out.flow_future = flow_from_symbols(sym_future, gw, gh, scale, mcfg.block_size, mult);
  Frame wp = warp(ref_past, resample_flow(out.flow_past, 1));
  Frame wf = warp(ref_future, resample_flow(out.flow_future, 1));
  Frame pred = bi_average(wp, wf);

  const std::uint64_t pixels = static_cast<std::uint64_t>(cur.width()) * cur.height();
  if (scale > 1) out.macs.add({MacKind::FlowResample, 2 * pixels});
  out.macs.add({MacKind::BilinearWarp, 2 * pixels});

  out.recon = code_residual(bw, cur, Prediction{&pred}, cfg.q_step);
  add_transform_work(out.macs, cur.width(), cur.height());
  out.bits.residual = bw.bit_count() - out.bits.header - out.bits.flow;

  out.stream = std::move(bw).finish();
  out.rate = out.stream.bit_count;
  out.distortion = mse(cur, out.recon);
  return out;
}

int read_frame_header(const Bitstream& bs) {
  BitReader br(bs);
  return static_cast<int>(br.get_bits(kHeaderBits));
}

Frame decode_bframe(const Bitstream& bs, const Frame& ref_past, const Frame& ref_future, const QuantConfig& cfg,
                    const MotionConfig& mcfg) {
  validate(cfg);
  validate(mcfg);
  if (ref_past.width() != ref_future.width() || ref_past.height() != ref_future.height())
    throw DataError("dimension mismatch");
  BitReader br(bs);
  int scale = static_cast<int>(br.get_bits(kHeaderBits));
  if (!valid_scale(scale)) throw DataError("malformed stream: bad downsampling factor " + std::to_string(scale));
  const int w = ref_past.width();
  const int h = ref_past.height();
  const int gw = w / scale;
  const int gh = h / scale;
  const int mult = flow_multiplier(cfg.flow_precision);
  auto [nbx, nby] = flow_blocks(gw, gh, mcfg.block_size);
  const std::size_t n = static_cast<std::size_t>(nbx) * nby * 2;
  auto sym_past = get_run_level(br, n);
  auto sym_future = get_run_level(br, n);
  FlowField fp = flow_from_symbols(sym_past, gw, gh, scale, mcfg.block_size, mult);
  FlowField ff = flow_from_symbols(sym_future, gw, gh, scale, mcfg.block_size, mult);
  Frame pred = bi_average(warp(ref_past, resample_flow(fp, 1)), warp(ref_future, resample_flow(ff, 1)));
  Frame recon = decode_residual(br, w, h, Prediction{&pred}, cfg.q_step);
  if (br.remaining() != 0) throw DataError("malformed stream: trailing bits");
  return recon;
}

EncodedFrame encode_intra(const Frame& cur, const QuantConfig& cfg) {
  validate(cfg);
  EncodedFrame out;
  BitWriter bw;
  bw.put_bits(0, kHeaderBits);
  out.bits.header = bw.bit_count();
  out.recon = code_residual(bw, cur, Prediction{}, cfg.q_step);
  out.bits.residual = bw.bit_count() - out.bits.header;
  add_transform_work(out.macs, cur.width(), cur.height());
  out.stream = std::move(bw).finish();
  out.rate = out.stream.bit_count;
  out.distortion = mse(cur, out.recon);
  return out;
}

Frame decode_intra(const Bitstream& bs, int width, int height, const QuantConfig& cfg) {
  validate(cfg);
  BitReader br(bs);
  if (br.get_bits(kHeaderBits) != 0) throw DataError("malformed stream: not an intra frame");
  Frame recon = decode_residual(br, width, height, Prediction{}, cfg.q_step);
  if (br.remaining() != 0) throw DataError("malformed stream: trailing bits");
  return recon;
}

BitBreakdown count_bframe_bits(const Bitstream& bs, int width, int height, const MotionConfig& mcfg) {
  BitReader br(bs);
  BitBreakdown b;
  int scale = static_cast<int>(br.get_bits(kHeaderBits));
  if (!valid_scale(scale)) throw DataError("malformed stream: bad downsampling factor");
  b.header = br.position();
  auto [nbx, nby] = flow_blocks(width / scale, height / scale, mcfg.block_size);
  const std::size_t n = static_cast<std::size_t>(nbx) * nby * 2;
  b.flow = run_level_bits(br, n) + run_level_bits(br, n);
  for (int i = 0; i < (width / 8) * (height / 8); ++i) b.residual += run_level_bits(br, 64);
  return b;
}

void write_container(std::ostream& out, const Container& c) {
  binio::put_magic(out, "OMRL");
  binio::put<std::uint8_t>(out, kContainerVersion);
  binio::put<std::int32_t>(out, c.gop.gop_size);
  binio::put<std::int32_t>(out, c.gop.intra_period);
  binio::put<std::int32_t>(out, c.gop.num_frames);
  binio::put<double>(out, c.quant.q_step);
  binio::put<std::uint8_t>(out, c.quant.flow_precision == FlowPrecision::HalfPel ? 1 : 0);
  binio::put<double>(out, c.quant.lambda);
  binio::put<std::uint8_t>(out, static_cast<std::uint8_t>(c.motion.block_size));
  binio::put<std::int32_t>(out, c.motion.search_range);
  binio::put<std::uint8_t>(out, c.motion.refinement == Refinement::HalfPel ? 1 : 0);
  binio::put<std::int32_t>(out, c.width);
  binio::put<std::int32_t>(out, c.height);
  binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(c.frames.size()));
  for (const auto& f : c.frames) {
    binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(f.bit_count));
    out.write(reinterpret_cast<const char*>(f.payload.data()), static_cast<std::streamsize>(f.payload.size()));
  }
  if (!out) throw DataError("container write failed");
}

Container read_container(std::istream& in) {
  binio::expect_magic(in, "OMRL");
  if (binio::get<std::uint8_t>(in) != kContainerVersion) throw DataError("unsupported container version");
  Container c;
  c.gop.gop_size = binio::get<std::int32_t>(in);
  c.gop.intra_period = binio::get<std::int32_t>(in);
  c.gop.num_frames = binio::get<std::int32_t>(in);
  c.quant.q_step = binio::get<double>(in);
  c.quant.flow_precision = binio::get<std::uint8_t>(in) ? FlowPrecision::HalfPel : FlowPrecision::IntegerPel;
  c.quant.lambda = binio::get<double>(in);
  c.motion.block_size = binio::get<std::uint8_t>(in);
  c.motion.search_range = binio::get<std::int32_t>(in);
  c.motion.refinement = binio::get<std::uint8_t>(in) ? Refinement::HalfPel : Refinement::None;
  c.width = binio::get<std::int32_t>(in);
  c.height = binio::get<std::int32_t>(in);
  validate(c.gop);
  std::uint32_t n = binio::get<std::uint32_t>(in);
  if (n != static_cast<std::uint32_t>(c.gop.num_frames)) throw DataError("container frame count mismatch");
  c.frames.resize(n);
  for (auto& f : c.frames) {
    f.bit_count = binio::get<std::uint32_t>(in);
    f.payload.resize((f.bit_count + 7) / 8);
    in.read(reinterpret_cast<char*>(f.payload.data()), static_cast<std::streamsize>(f.payload.size()));
    if (in.gcount() != static_cast<std::streamsize>(f.payload.size())) throw DataError("truncated container");
  }
  return c;
}

Sequence decode_container(const Container& c) {
  auto schedule = build_schedule(c.gop);
  if (schedule.size() != c.frames.size()) throw DataError("container/schedule mismatch");
  std::vector<std::optional<Frame>> recon(c.gop.num_frames);
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const auto& slot = schedule[i];
    if (slot.is_intra()) {
      recon[slot.poc] = decode_intra(c.frames[i], c.width, c.height, c.quant);
    } else {
      recon[slot.poc] =
          decode_bframe(c.frames[i], *recon[slot.ref_past], *recon[slot.ref_future], c.quant, c.motion);
    }
  }
  Sequence out;
  out.reserve(recon.size());
  for (auto& f : recon) out.push_back(std::move(*f));
  return out;
}

}  // namespace omra
