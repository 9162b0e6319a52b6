#include "omra/search.hpp"

#include <ostream>

#include "omra/error.hpp"

namespace omra {

bool RdRecord::complete() const {
  for (const auto& e : entries)
    if (!e) return false;
  return true;
}

const RdEntry& RdRecord::at(int scale) const {
  const auto& e = entries[factor_index(scale)];
  if (!e) throw DataError("missing RD entry for S=" + std::to_string(scale));
  return *e;
}

std::array<double, kNumFactors> RdRecord::costs() const {
  std::array<double, kNumFactors> c{};
  for (int i = 0; i < kNumFactors; ++i) c[i] = at(kDownsampleFactors[i]).cost;
  return c;
}

ExhaustiveResult omra_exhaustive(const Frame& cur, const Frame& ref_past, const Frame& ref_future,
                                 const QuantConfig& cfg, const MotionConfig& mcfg) {
  ExhaustiveResult out;
  out.record.lambda = cfg.lambda;
  bool have = false;
  for (int s : kDownsampleFactors) {
    EncodedFrame e = encode_bframe(cur, ref_past, ref_future, s, cfg, mcfg);
    RdEntry entry{e.distortion, e.rate, rd_cost(e.distortion, static_cast<double>(e.rate), cfg.lambda)};
    out.record.entries[factor_index(s)] = entry;
    out.macs += e.macs;
    // Strict comparison keeps the smaller factor on ties.
    if (!have || entry.cost < out.record.at(out.best_scale).cost) {
      out.best_scale = s;
      out.best = std::move(e);
      have = true;
    }
  }
  return out;
}

std::optional<double> MemcResult::error_of(int scale) const {
  for (const auto& e : evals)
    if (e.scale == scale) return e.error;
  return std::nullopt;
}

const CandidateEval& MemcResult::best() const {
  for (const auto& e : evals)
    if (e.scale == best_scale) return e;
  throw DataError("no evaluated candidate");
}

CandidateEval evaluate_candidate(const Frame& cur, const Frame& ref_past, const Frame& ref_future, int scale,
                                 const MotionConfig& mcfg, ComplexityLedger* macs) {
  CandidateEval ev;
  ev.scale = scale;
  ev.flows = estimate_scaled_flows(cur, ref_past, ref_future, scale, mcfg);
  ev.error = prediction_error(cur, ref_past, ref_future, ev.flows.past, ev.flows.future, scale);
  if (macs) {
    const std::uint64_t pixels = static_cast<std::uint64_t>(cur.width()) * cur.height();
    *macs += ev.flows.macs;
    if (scale > 1) macs->add({MacKind::FlowResample, 2 * pixels});
    macs->add({MacKind::BilinearWarp, 2 * pixels});
  }
  return ev;
}

MemcResult memc_search(const Frame& cur, const Frame& ref_past, const Frame& ref_future,
                       std::span<const int> candidates, const MotionConfig& mcfg) {
  if (candidates.empty()) throw DataError("empty candidate set");
  MemcResult out;
  for (int s : candidates) {
    out.evals.push_back(evaluate_candidate(cur, ref_past, ref_future, s, mcfg, &out.macs));
    ++out.macs.candidate_evals;
  }
  const CandidateEval* best = &out.evals.front();
  for (const auto& e : out.evals) {
    if (e.error < best->error || (e.error == best->error && e.scale < best->scale)) best = &e;
  }
  out.best_scale = best->scale;
  return out;
}

MemcResult memc_star(const Frame& cur, const Frame& ref_past, const Frame& ref_future, const FrameSlot& slot,
                     const MotionConfig& mcfg) {
  if (slot.is_intra()) throw DataError("memc_star needs a B-frame slot");
  if (slot.k == 1) {
    MemcResult out;
    out.best_scale = 1;
    return out;
  }
  return memc_search(cur, ref_past, ref_future, kDownsampleFactors, mcfg);
}

void write_search_log(std::ostream& out, std::span<const SearchLogRow> rows) {
  out << "poc,layer,k,method,S,cost_1,cost_2,cost_4,cost_8\n";
  for (const auto& r : rows) {
    out << r.poc << ',' << r.layer << ',' << r.k << ',' << r.method << ',' << r.scale;
    for (const auto& v : r.values) {
      out << ',';
      if (v) out << *v;
    }
    out << '\n';
  }
}

}  // namespace omra
