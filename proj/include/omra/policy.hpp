#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "omra/classifier.hpp"
#include "omra/codec.hpp"
#include "omra/search.hpp"

namespace omra {

// Source of the Bi-Class probability that full resolution is optimal.
class FullResPredictor {
 public:
  virtual ~FullResPredictor() = default;
  virtual double probability(const FrameSlot& slot, const Frame& cur, const Frame& ref_past,
                             const Frame& ref_future, ComplexityLedger& macs) const = 0;
};

// Source of a direct Mu-Class factor prediction.
class ScalePredictor {
 public:
  virtual ~ScalePredictor() = default;
  virtual int predict(const FrameSlot& slot, const Frame& cur, const Frame& ref_past, const Frame& ref_future,
                      ComplexityLedger& macs) const = 0;
};

// One network per temporal layer.
class CnnFullResPredictor : public FullResPredictor {
 public:
  explicit CnnFullResPredictor(std::map<int, TinyCnn> per_layer);
  static std::shared_ptr<CnnFullResPredictor> from_models(std::span<const ClassifierModel> models);
  double probability(const FrameSlot& slot, const Frame& cur, const Frame& ref_past, const Frame& ref_future,
                     ComplexityLedger& macs) const override;

 private:
  std::map<int, TinyCnn> nets_;
};

class CnnScalePredictor : public ScalePredictor {
 public:
  explicit CnnScalePredictor(TinyCnn net);
  static std::shared_ptr<CnnScalePredictor> from_models(std::span<const ClassifierModel> models);
  int predict(const FrameSlot& slot, const Frame& cur, const Frame& ref_past, const Frame& ref_future,
              ComplexityLedger& macs) const override;

 private:
  TinyCnn net_;
};

// Stored oracle labels keyed by picture order count.
class OracleLabels : public FullResPredictor, public ScalePredictor {
 public:
  explicit OracleLabels(std::map<int, int> scale_by_poc);
  double probability(const FrameSlot& slot, const Frame& cur, const Frame& ref_past, const Frame& ref_future,
                     ComplexityLedger& macs) const override;
  int predict(const FrameSlot& slot, const Frame& cur, const Frame& ref_past, const Frame& ref_future,
              ComplexityLedger& macs) const override;

 private:
  int lookup(int poc) const;
  std::map<int, int> labels_;
};

// Co-Class neighbourhood for each Mu prediction.
std::array<int, 2> candidate_set(int predicted_scale);

inline constexpr double kBiThreshold = 0.5;

struct Decision {
  int scale = 1;
  std::optional<int> predicted;
  int evals = 0;
  ComplexityLedger macs;                  // decision work only
  std::optional<ScaledFlows> flows;       // winning flows when a search ran
  std::array<std::optional<double>, kNumFactors> errors;
};

Decision decide_bi(const FullResPredictor& predictor, const Frame& cur, const Frame& ref_past,
                   const Frame& ref_future, const FrameSlot& slot, const MotionConfig& mcfg = {});
Decision decide_mu(const ScalePredictor& predictor, const Frame& cur, const Frame& ref_past,
                   const Frame& ref_future, const FrameSlot& slot);
Decision decide_co(const ScalePredictor& predictor, const Frame& cur, const Frame& ref_past,
                   const Frame& ref_future, const FrameSlot& slot, const MotionConfig& mcfg = {});

enum class Variant { Exhaustive, Memc, MemcStar, Bi, Mu, Co, Fixed };

struct PolicyConfig {
  Variant variant = Variant::Fixed;
  int fixed_scale = 1;
  std::optional<int> max_adapt_layer;  // unset: every B layer
  std::shared_ptr<const FullResPredictor> bi;
  std::shared_ptr<const ScalePredictor> mu;
};

// Accepts exhaustive, memc, memc_star, bi, mu, co, fixedN and fixed(N).
PolicyConfig parse_variant(std::string_view name);
std::string variant_name(const PolicyConfig& policy);
void validate(const PolicyConfig& policy, const GopConfig& gop);

struct DecisionRow {
  int poc = 0;
  int layer = 0;  // 0 for intra
  int k = 0;
  std::string variant;
  std::optional<int> predicted;
  int scale = 0;  // 0 for intra
  int evals = 0;
  std::uint64_t bits = 0;
  double mse = 0.0;
};

struct SequenceResult {
  Container container;
  Sequence recon;                            // display order
  std::vector<DecisionRow> log;              // coding order
  std::vector<SearchLogRow> search_log;      // B-frames whose decision searched
  std::vector<ComplexityLedger> frame_macs;  // coding order
  ComplexityLedger macs;                     // sum over frames
};

SequenceResult encode_sequence(const Sequence& frames, const GopConfig& gop, const QuantConfig& quant,
                               const PolicyConfig& policy, const MotionConfig& mcfg = {});

void write_decision_log(std::ostream& out, std::span<const DecisionRow> rows);
std::vector<DecisionRow> read_decision_log(std::istream& in);

}  // namespace omra
