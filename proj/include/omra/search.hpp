#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "omra/codec.hpp"
#include "omra/gop.hpp"

namespace omra {

struct RdEntry {
  double distortion = 0.0;
  std::uint64_t rate = 0;
  double cost = 0.0;
};

// Per-factor RD outcomes, indexed by factor_index(S).
struct RdRecord {
  double lambda = 1.0;
  std::array<std::optional<RdEntry>, kNumFactors> entries;

  bool complete() const;
  const RdEntry& at(int scale) const;
  std::array<double, kNumFactors> costs() const;
};

struct ExhaustiveResult {
  int best_scale = 1;
  RdRecord record;
  EncodedFrame best;        // the cached winning encoding
  ComplexityLedger macs;    // all four encodes
};

// Encodes at S = 1, 2, 4, 8 and keeps the cheapest (ties to the smaller S).
ExhaustiveResult omra_exhaustive(const Frame& cur, const Frame& ref_past, const Frame& ref_future,
                                 const QuantConfig& cfg, const MotionConfig& mcfg = {});

struct CandidateEval {
  int scale = 1;
  double error = 0.0;
  ScaledFlows flows;
};

struct MemcResult {
  int best_scale = 1;
  std::vector<CandidateEval> evals;  // in candidate order
  ComplexityLedger macs;             // evaluation work only

  std::optional<double> error_of(int scale) const;
  const CandidateEval& best() const;
};

// Evaluation of one candidate: downsample, estimate both flows, upsample,
// warp and score.
CandidateEval evaluate_candidate(const Frame& cur, const Frame& ref_past, const Frame& ref_future, int scale,
                                 const MotionConfig& mcfg, ComplexityLedger* macs = nullptr);

// Warped-quality search over `candidates`; no bits are produced.
MemcResult memc_search(const Frame& cur, const Frame& ref_past, const Frame& ref_future,
                       std::span<const int> candidates, const MotionConfig& mcfg = {});

// As memc_search over {1,2,4,8}, except k = 1 frames return S = 1 unevaluated.
MemcResult memc_star(const Frame& cur, const Frame& ref_past, const Frame& ref_future, const FrameSlot& slot,
                     const MotionConfig& mcfg = {});

// `poc,layer,k,method,S,cost_1,cost_2,cost_4,cost_8`; MEMC rows carry
// prediction errors in the cost columns.
struct SearchLogRow {
  int poc = 0;
  int layer = 0;
  int k = 0;
  std::string method;
  int scale = 1;
  std::array<std::optional<double>, kNumFactors> values;
};

void write_search_log(std::ostream& out, std::span<const SearchLogRow> rows);

}  // namespace omra
