#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "omra/bitio.hpp"
#include "omra/complexity.hpp"
#include "omra/frame.hpp"
#include "omra/gop.hpp"
#include "omra/motion.hpp"

namespace omra {

enum class FlowPrecision { IntegerPel, HalfPel };

struct QuantConfig {
  double q_step = 16.0;
  FlowPrecision flow_precision = FlowPrecision::IntegerPel;
  double lambda = 1.0;  // bits per unit of MSE
};

void validate(const QuantConfig& cfg);

// Default four-point rate ladder, coarsest first.
std::vector<QuantConfig> default_rate_ladder();

inline constexpr int kDownsampleFactors[] = {1, 2, 4, 8};
inline constexpr int kNumFactors = 4;
int factor_index(int s);  // 1->0, 2->1, 4->2, 8->3

struct BitBreakdown {
  std::uint64_t header = 0;
  std::uint64_t flow = 0;
  std::uint64_t residual = 0;
  std::uint64_t total() const { return header + flow + residual; }
};

struct EncodedFrame {
  Bitstream stream;
  Frame recon;
  double distortion = 0.0;  // MSE against the source
  std::uint64_t rate = 0;   // bits
  int scale = 0;            // 0 for intra
  BitBreakdown bits;
  ComplexityLedger macs;    // encoder-side work
  FlowField flow_past;      // decoded flows at scale S (B-frames only)
  FlowField flow_future;
};

double rd_cost(double distortion, double rate_bits, double lambda);

// Flows estimated at scale S for a frame triple, with the estimation cost.
struct ScaledFlows {
  int scale = 1;
  FlowField past;
  FlowField future;
  ComplexityLedger macs;
};

ScaledFlows estimate_scaled_flows(const Frame& cur, const Frame& ref_past, const Frame& ref_future, int scale,
                                  const MotionConfig& mcfg);

EncodedFrame encode_bframe(const Frame& cur, const Frame& ref_past, const Frame& ref_future, int scale,
                           const QuantConfig& cfg, const MotionConfig& mcfg = {});

// Encodes with flows already estimated at their scale (skips motion search).
EncodedFrame encode_bframe(const Frame& cur, const Frame& ref_past, const Frame& ref_future,
                           const ScaledFlows& flows, const QuantConfig& cfg, const MotionConfig& mcfg = {});

Frame decode_bframe(const Bitstream& bs, const Frame& ref_past, const Frame& ref_future, const QuantConfig& cfg,
                    const MotionConfig& mcfg = {});

EncodedFrame encode_intra(const Frame& cur, const QuantConfig& cfg);
Frame decode_intra(const Bitstream& bs, int width, int height, const QuantConfig& cfg);

// The 4-bit header value: 0 for intra, S otherwise.
int read_frame_header(const Bitstream& bs);

// Independent bit-length tally of a B-frame stream by re-parsing its syntax.
BitBreakdown count_bframe_bits(const Bitstream& bs, int width, int height, const MotionConfig& mcfg = {});

namespace dct {
using Block = std::array<double, 64>;
void forward(const Block& in, Block& out);
void inverse(const Block& in, Block& out);
extern const std::array<int, 64> kZigZag;
}  // namespace dct

// Sequence container: magic OMRL, version, configs, then per-frame streams in
// coding order.
struct Container {
  GopConfig gop;
  QuantConfig quant;
  MotionConfig motion;
  int width = 0;
  int height = 0;
  std::vector<Bitstream> frames;  // coding order
};

inline constexpr std::uint8_t kContainerVersion = 1;

void write_container(std::ostream& out, const Container& c);
Container read_container(std::istream& in);

// Decodes every frame; result is in display order.
Sequence decode_container(const Container& c);

}  // namespace omra
