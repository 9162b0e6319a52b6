#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "omra/codec.hpp"
#include "omra/policy.hpp"

namespace omra {

struct RdPoint {
  double rate = 0.0;     // bits per pixel
  double quality = 0.0;  // PSNR in dB
};

struct RdCurve {
  std::vector<RdPoint> points;
};

// At least four points, positive rates; sorted by rate, both coordinates
// strictly increasing.
void validate(const RdCurve& curve);
RdCurve sorted_by_rate(RdCurve curve);

// Monotone cubic Hermite interpolant through strictly increasing xs.
class Pchip {
 public:
  Pchip(std::vector<double> xs, std::vector<double> ys);
  double operator()(double x) const;
  double integral(double a, double b) const;
  const std::vector<double>& slopes() const { return d_; }

 private:
  std::size_t segment(double x) const;
  double antiderivative(std::size_t k, double t) const;
  std::vector<double> x_, y_, d_;
};

// Average rate difference in percent at equal quality; negative means the
// test curve needs fewer bits.
double bd_rate(const RdCurve& anchor, const RdCurve& test);

struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumFactors>, kNumFactors> counts{};  // [predicted][ground truth]

  std::uint64_t row_total(int predicted_index) const;
  // Row-normalized distributions; empty rows stay unset.
  std::array<std::optional<std::array<double, kNumFactors>>, kNumFactors> conditionals() const;
};

// Pairs of (predicted S, ground-truth S).
ConfusionMatrix confusion(std::span<const std::pair<int, int>> pairs);

using Conditionals = std::array<std::optional<std::array<double, kNumFactors>>, kNumFactors>;

// Top-two ground-truth factors per predicted row (ties to smaller S),
// ascending; zero-probability factors are dropped and empty rows map to the
// prediction alone.
std::map<int, std::vector<int>> derive_candidate_sets(const Conditionals& conditionals);

// Mean absolute luma change between consecutive frames, over 255.
double temporal_complexity(const Sequence& frames);

struct FrameQuality {
  int poc = 0;
  std::uint64_t bits = 0;
  double mse = 0.0;
  double psnr = 0.0;
};

struct SequenceQuality {
  std::vector<FrameQuality> frames;  // display order
  double bpp = 0.0;
  double mse = 0.0;   // mean over frames
  double psnr = 0.0;  // PSNR of the mean MSE
};

// Decodes `c` and compares against `source`.
SequenceQuality evaluate_container(const Sequence& source, const Container& c);
SequenceQuality evaluate_result(const Sequence& source, const SequenceResult& r);
void write_quality_csv(std::ostream& out, const SequenceQuality& q);

struct LadderRun {
  RdCurve curve;
  ComplexityLedger macs;
  std::vector<SequenceResult> results;  // one per rate point
};

LadderRun run_ladder(const Sequence& frames, const GopConfig& gop, std::span<const QuantConfig> ladder,
                     const PolicyConfig& policy, const MotionConfig& mcfg = {});

struct RdRow {
  std::string sequence;
  std::string variant;
  double q_step = 0.0;
  double bpp = 0.0;
  double psnr = 0.0;
};

void write_rdpoints(std::ostream& out, std::span<const RdRow> rows);
std::vector<RdRow> read_rdpoints(std::istream& in);
// Groups rows into curves keyed by (sequence, variant).
std::map<std::pair<std::string, std::string>, RdCurve> curves_by_key(std::span<const RdRow> rows);

struct BdRow {
  std::string sequence;
  std::string variant;
  std::string anchor;
  double bd_rate = 0.0;
};
void write_bdrate_csv(std::ostream& out, std::span<const BdRow> rows);

void write_complexity_csv(std::ostream& out, std::span<const std::pair<std::string, ComplexityLedger>> rows);
// Reads rows written by write_complexity_csv back into per-variant ledgers
// (MAC tallies, frame and pixel counts).
std::vector<std::pair<std::string, ComplexityLedger>> read_complexity_csv(std::istream& in);

void write_confusion_csv(std::ostream& out, const ConfusionMatrix& m);

// "0.0", "-50.0", "-12.3457": four decimals with trailing zeros trimmed.
std::string format_percent(double v);

}  // namespace omra
