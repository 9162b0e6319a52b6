#include <random>
#include <sstream>

#include "doctest.h"
#include "omra/codec.hpp"
#include "omra/error.hpp"

using namespace omra;

namespace {

Sequence moving(int w, int h, int n, double vx, double vy, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.width = w;
  spec.height = h;
  spec.num_frames = n;
  spec.vx = vx;
  spec.vy = vy;
  spec.texture_seed = seed;
  return generate_synthetic(spec);
}

}  // namespace

TEST_CASE("exp-Golomb round trip over [-1024, 1024]") {
  BitWriter bw;
  std::uint64_t expected_bits = 0;
  for (int v = -1024; v <= 1024; ++v) {
    bw.put_se(v);
    expected_bits += se_length(v);
    bw.put_ue(static_cast<std::uint32_t>(v + 1024));
    expected_bits += ue_length(static_cast<std::uint32_t>(v + 1024));
  }
  auto bs = std::move(bw).finish();
  CHECK(bs.bit_count == expected_bits);
  BitReader br(bs);
  for (int v = -1024; v <= 1024; ++v) {
    CHECK(br.get_se() == v);
    CHECK(br.get_ue() == static_cast<std::uint32_t>(v + 1024));
  }
  CHECK(br.remaining() == 0);
  CHECK(ue_length(0) == 1);
  CHECK(ue_length(1) == 3);
  CHECK(se_length(-1) == 3);
}

TEST_CASE("reading past the end throws") {
  BitWriter bw;
  bw.put_bits(0, 3);
  auto bs = std::move(bw).finish();
  BitReader br(bs);
  CHECK_THROWS_AS(br.get_ue(), DataError);
}

TEST_CASE("DCT is orthonormal") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-255, 255);
  for (int trial = 0; trial < 100; ++trial) {
    dct::Block in{}, coef{}, back{};
    for (auto& v : in) v = u(rng);
    dct::forward(in, coef);
    dct::inverse(coef, back);
    double e_in = 0, e_coef = 0;
    for (int i = 0; i < 64; ++i) {
      CHECK(std::abs(back[i] - in[i]) < 0.5);
      e_in += in[i] * in[i];
      e_coef += coef[i] * coef[i];
    }
    CHECK(e_coef == doctest::Approx(e_in).epsilon(1e-9));
  }
}

TEST_CASE("rd_cost") {
  CHECK(rd_cost(100, 2000, 5) == 2500);
  CHECK(rd_cost(0, 1234, 7.5) == 1234);
}

TEST_CASE("static B-frame codes to the all-zero pipeline") {
  Frame f = moving(64, 48, 1, 0, 0, 4)[0];
  auto e = encode_bframe(f, f, f, 1, {});
  CHECK(e.distortion == 0.0);
  CHECK(e.bits.header == 4);
  CHECK(e.bits.flow == 2);  // one empty run-level list per flow
  CHECK(e.bits.residual == static_cast<std::uint64_t>(64 * 48 / 64));
  CHECK(e.rate == e.bits.total());
  for (const auto& v : e.flow_past.vectors) CHECK(v == MotionVector{});
  CHECK(decode_bframe(e.stream, f, f, {}) == f);
}

TEST_CASE("B-frame round trip and header for every factor") {
  auto seq = moving(64, 64, 5, 3, 1, 8);
  for (int s : {1, 2, 4, 8}) {
    QuantConfig q{10.0, FlowPrecision::IntegerPel, 2.5};
    auto e = encode_bframe(seq[2], seq[0], seq[4], s, q);
    CHECK(read_frame_header(e.stream) == s);
    CHECK(e.scale == s);
    CHECK(decode_bframe(e.stream, seq[0], seq[4], q) == e.recon);
    CHECK(e.rate == e.stream.bit_count);
    auto counted = count_bframe_bits(e.stream, 64, 64);
    CHECK(counted.header == e.bits.header);
    CHECK(counted.flow == e.bits.flow);
    CHECK(counted.residual == e.bits.residual);
    CHECK(e.distortion == mse(seq[2], e.recon));
  }
}

TEST_CASE("half-pel flow precision round trip") {
  auto seq = moving(64, 64, 3, 1.5, 0.5, 9);
  QuantConfig q{8.0, FlowPrecision::HalfPel, 3.0};
  MotionConfig m;
  m.refinement = Refinement::HalfPel;
  auto e = encode_bframe(seq[1], seq[0], seq[2], 2, q, m);
  CHECK(decode_bframe(e.stream, seq[0], seq[2], q, m) == e.recon);
  bool has_half = false;
  for (const auto& v : e.flow_past.vectors) has_half |= (v.dx != std::floor(v.dx));
  CHECK(has_half);
}

TEST_CASE("truncated stream raises and emits nothing") {
  auto seq = moving(32, 32, 3, 2, 0, 2);
  auto e = encode_bframe(seq[1], seq[0], seq[2], 1, {});
  Bitstream cut = e.stream;
  cut.bit_count -= 5;
  CHECK_THROWS_AS(decode_bframe(cut, seq[0], seq[2], {}), DataError);
  Bitstream bad = e.stream;
  bad.payload[0] = static_cast<std::uint8_t>((3u << 4) | (bad.payload[0] & 0x0f));
  CHECK_THROWS_AS(decode_bframe(bad, seq[0], seq[2], {}), DataError);
}

TEST_CASE("finer quantization costs more bits and lowers distortion") {
  auto seq = moving(64, 64, 3, 2, 1, 13);
  auto fine = encode_bframe(seq[1], seq[0], seq[2], 1, {4.0, FlowPrecision::IntegerPel, 1.0});
  auto coarse = encode_bframe(seq[1], seq[0], seq[2], 1, {16.0, FlowPrecision::IntegerPel, 1.0});
  CHECK(fine.rate > coarse.rate);
  CHECK(fine.distortion <= coarse.distortion);
}

TEST_CASE("intra: constant frame uses one DC coefficient per block") {
  Frame f(32, 32, 201);
  for (double q : {6.0, 10.0, 16.0, 24.0}) {
    auto e = encode_intra(f, {q, FlowPrecision::IntegerPel, 1.0});
    CHECK(e.distortion <= q * q / 12.0 + 1.0);
    CHECK(decode_intra(e.stream, 32, 32, {q, FlowPrecision::IntegerPel, 1.0}) == e.recon);
    // Each 8x8 block: ue(1) + ue(0) + se(level) at most.
    BitReader br(e.stream);
    br.get_bits(4);
    for (int b = 0; b < 16; ++b) {
      CHECK(br.get_ue() == 1);
      CHECK(br.get_ue() == 0);
      CHECK(br.get_se() != 0);
    }
    CHECK(br.remaining() == 0);
  }
}

TEST_CASE("intra rate is nonincreasing in q_step") {
  Frame f = moving(64, 64, 1, 0, 0, 17)[0];
  std::uint64_t prev = ~0ULL;
  double prev_d = -1;
  for (double q : {2.0, 4.0, 8.0, 16.0, 32.0}) {
    auto e = encode_intra(f, {q, FlowPrecision::IntegerPel, 1.0});
    CHECK(e.rate <= prev);
    CHECK(e.distortion >= prev_d);
    prev = e.rate;
    prev_d = e.distortion;
  }
}

TEST_CASE("flows passed in skip the motion search") {
  auto seq = moving(64, 64, 3, 4, 0, 3);
  MotionConfig m;
  auto flows = estimate_scaled_flows(seq[1], seq[0], seq[2], 2, m);
  auto a = encode_bframe(seq[1], seq[0], seq[2], 2, {}, m);
  auto b = encode_bframe(seq[1], seq[0], seq[2], flows, {}, m);
  CHECK(a.stream == b.stream);
  CHECK(a.macs == b.macs);
  CHECK(a.macs[MacCategory::MotionEstimation] > 0);
}

TEST_CASE("encoder MAC accounting") {
  Frame f(64, 64, 9);
  auto e = encode_bframe(f, f, f, 1, {});
  // 64 blocks * 17^2 positions * 64 per flow.
  CHECK(e.macs[MacCategory::MotionEstimation] == 2ULL * 1183744);
  CHECK(e.macs[MacCategory::Warping] == 2ULL * 4 * 64 * 64);
  CHECK(e.macs[MacCategory::Resampling] == 0);
  CHECK(e.macs[MacCategory::TransformQuantEntropy] == 2ULL * 64 * 1024 + 2ULL * 64 * 64);
}

TEST_CASE("container round trip decodes the sequence") {
  auto seq = moving(32, 32, 5, 1, 0, 6);
  Container c;
  c.gop = {4, 4, 5};
  c.width = 32;
  c.height = 32;
  std::vector<std::optional<Frame>> recon(5);
  for (const auto& slot : build_schedule(c.gop)) {
    EncodedFrame e = slot.is_intra() ? encode_intra(seq[slot.poc], c.quant)
                                     : encode_bframe(seq[slot.poc], *recon[slot.ref_past], *recon[slot.ref_future],
                                                     1, c.quant, c.motion);
    recon[slot.poc] = e.recon;
    c.frames.push_back(e.stream);
  }
  std::stringstream ss;
  write_container(ss, c);
  CHECK(ss.str().substr(0, 4) == "OMRL");
  auto back = read_container(ss);
  auto dec = decode_container(back);
  for (int i = 0; i < 5; ++i) CHECK(dec[i] == *recon[i]);

  std::stringstream bad("OMRX");
  CHECK_THROWS_AS(read_container(bad), DataError);
}
