#include "omra/policy.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "omra/error.hpp"

namespace omra {

CnnFullResPredictor::CnnFullResPredictor(std::map<int, TinyCnn> per_layer) : nets_(std::move(per_layer)) {
  for (const auto& [layer, net] : nets_)
    if (net.shape().outputs != 1) throw DataError("Bi-Class network for layer " + std::to_string(layer) +
                                                  " must have one output");
}

std::shared_ptr<CnnFullResPredictor> CnnFullResPredictor::from_models(std::span<const ClassifierModel> models) {
  std::map<int, TinyCnn> nets;
  for (const auto& m : models) {
    if (m.mode != ClassifierMode::Bi) continue;
    if (m.layer < 1) throw DataError("Bi-Class models must name a temporal layer");
    nets[m.layer] = m.net;
  }
  if (nets.empty()) throw UsageError("no Bi-Class models supplied");
  return std::make_shared<CnnFullResPredictor>(std::move(nets));
}

double CnnFullResPredictor::probability(const FrameSlot& slot, const Frame& cur, const Frame& ref_past,
                                        const Frame& ref_future, ComplexityLedger& macs) const {
  auto it = nets_.find(slot.temporal_layer);
  if (it == nets_.end()) throw DataError("no Bi-Class model for layer " + std::to_string(slot.temporal_layer));
  const TinyCnn& net = it->second;
  macs += preprocess_macs(cur.width(), cur.height(), net.shape().input_size);
  macs.add({MacKind::ClassifierForward, 1, 8, 8, net.forward_macs()});
  return predict_bi(net, preprocess(cur, ref_past, ref_future, net.shape().input_size));
}

CnnScalePredictor::CnnScalePredictor(TinyCnn net) : net_(std::move(net)) {
  if (net_.shape().outputs != kNumFactors) throw DataError("Mu-Class network must have four outputs");
}

std::shared_ptr<CnnScalePredictor> CnnScalePredictor::from_models(std::span<const ClassifierModel> models) {
  for (const auto& m : models)
    if (m.mode == ClassifierMode::Mu) return std::make_shared<CnnScalePredictor>(m.net);
  throw UsageError("no Mu-Class model supplied");
}

int CnnScalePredictor::predict(const FrameSlot&, const Frame& cur, const Frame& ref_past, const Frame& ref_future,
                               ComplexityLedger& macs) const {
  macs += preprocess_macs(cur.width(), cur.height(), net_.shape().input_size);
  macs.add({MacKind::ClassifierForward, 1, 8, 8, net_.forward_macs()});
  return predict_mu(net_, preprocess(cur, ref_past, ref_future, net_.shape().input_size));
}

OracleLabels::OracleLabels(std::map<int, int> scale_by_poc) : labels_(std::move(scale_by_poc)) {
  for (const auto& [poc, s] : labels_) factor_index(s);
}

int OracleLabels::lookup(int poc) const {
  auto it = labels_.find(poc);
  if (it == labels_.end()) throw DataError("no stored label for poc " + std::to_string(poc));
  return it->second;
}

double OracleLabels::probability(const FrameSlot& slot, const Frame&, const Frame&, const Frame&,
                                 ComplexityLedger&) const {
  return lookup(slot.poc) == 1 ? 1.0 : 0.0;
}

int OracleLabels::predict(const FrameSlot& slot, const Frame&, const Frame&, const Frame&,
                          ComplexityLedger&) const {
  return lookup(slot.poc);
}

std::array<int, 2> candidate_set(int predicted_scale) {
  switch (predicted_scale) {
    case 1: return {1, 2};
    case 2: return {2, 4};
    case 4: return {2, 4};
    case 8: return {4, 8};
  }
  throw DataError("invalid predicted factor " + std::to_string(predicted_scale));
}

namespace {

void take_search(Decision& d, MemcResult&& r) {
  d.scale = r.best_scale;
  d.evals = static_cast<int>(r.evals.size());
  d.macs += r.macs;
  for (const auto& e : r.evals) d.errors[factor_index(e.scale)] = e.error;
  for (auto& e : r.evals)
    if (e.scale == r.best_scale) d.flows = std::move(e.flows);
}

void require_bframe(const FrameSlot& slot) {
  if (slot.is_intra()) throw DataError("decision procedures apply to B-frames only");
}

}  // namespace

Decision decide_bi(const FullResPredictor& predictor, const Frame& cur, const Frame& ref_past,
                   const Frame& ref_future, const FrameSlot& slot, const MotionConfig& mcfg) {
  require_bframe(slot);
  Decision d;
  const double p = predictor.probability(slot, cur, ref_past, ref_future, d.macs);
  d.macs.classifier_calls = 1;
  if (p >= kBiThreshold) {
    d.scale = 1;
    d.predicted = 1;
    return d;
  }
  static constexpr int kCoarse[] = {2, 4, 8};
  take_search(d, memc_search(cur, ref_past, ref_future, kCoarse, mcfg));
  return d;
}

Decision decide_mu(const ScalePredictor& predictor, const Frame& cur, const Frame& ref_past,
                   const Frame& ref_future, const FrameSlot& slot) {
  require_bframe(slot);
  Decision d;
  d.scale = predictor.predict(slot, cur, ref_past, ref_future, d.macs);
  factor_index(d.scale);
  d.predicted = d.scale;
  d.macs.classifier_calls = 1;
  return d;
}

Decision decide_co(const ScalePredictor& predictor, const Frame& cur, const Frame& ref_past,
                   const Frame& ref_future, const FrameSlot& slot, const MotionConfig& mcfg) {
  require_bframe(slot);
  Decision d;
  const int predicted = predictor.predict(slot, cur, ref_past, ref_future, d.macs);
  d.predicted = predicted;
  d.macs.classifier_calls = 1;
  const auto set = candidate_set(predicted);
  take_search(d, memc_search(cur, ref_past, ref_future, set, mcfg));
  return d;
}

PolicyConfig parse_variant(std::string_view name) {
  PolicyConfig p;
  if (name == "exhaustive") {
    p.variant = Variant::Exhaustive;
  } else if (name == "memc") {
    p.variant = Variant::Memc;
  } else if (name == "memc_star" || name == "memc*") {
    p.variant = Variant::MemcStar;
  } else if (name == "bi") {
    p.variant = Variant::Bi;
  } else if (name == "mu") {
    p.variant = Variant::Mu;
  } else if (name == "co") {
    p.variant = Variant::Co;
  } else if (name.starts_with("fixed")) {
    std::string_view rest = name.substr(5);
    if (rest.size() >= 2 && rest.front() == '(' && rest.back() == ')') rest = rest.substr(1, rest.size() - 2);
    int s = 0;
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), s);
    if (ec != std::errc{} || ptr != rest.data() + rest.size() || !valid_scale(s))
      throw UsageError("bad fixed variant '" + std::string(name) + "'");
    p.variant = Variant::Fixed;
    p.fixed_scale = s;
  } else {
    throw UsageError("unknown variant '" + std::string(name) + "'");
  }
  return p;
}

std::string variant_name(const PolicyConfig& policy) {
  switch (policy.variant) {
    case Variant::Exhaustive: return "exhaustive";
    case Variant::Memc: return "memc";
    case Variant::MemcStar: return "memc_star";
    case Variant::Bi: return "bi";
    case Variant::Mu: return "mu";
    case Variant::Co: return "co";
    case Variant::Fixed: return "fixed" + std::to_string(policy.fixed_scale);
  }
  return "unknown";
}

void validate(const PolicyConfig& policy, const GopConfig& gop) {
  if (policy.max_adapt_layer && (*policy.max_adapt_layer < 0 || *policy.max_adapt_layer > num_b_layers(gop)))
    throw UsageError("max adapt layer must lie in [0, " + std::to_string(num_b_layers(gop)) + "]");
  if (policy.variant == Variant::Fixed && !valid_scale(policy.fixed_scale))
    throw UsageError("invalid fixed factor");
  if (policy.variant == Variant::Bi && !policy.bi) throw UsageError("variant bi needs Bi-Class models");
  if ((policy.variant == Variant::Mu || policy.variant == Variant::Co) && !policy.mu)
    throw UsageError("variant " + variant_name(policy) + " needs a Mu-Class model");
}

SequenceResult encode_sequence(const Sequence& frames, const GopConfig& gop, const QuantConfig& quant,
                               const PolicyConfig& policy, const MotionConfig& mcfg) {
  if (frames.empty()) throw DataError("empty sequence");
  GopConfig cfg = gop;
  cfg.num_frames = static_cast<int>(frames.size());
  validate(cfg);
  validate(policy, cfg);
  validate(quant);
  validate(mcfg);
  const int width = frames[0].width();
  const int height = frames[0].height();
  for (const auto& f : frames)
    if (f.width() != width || f.height() != height) throw DataError("sequence frames differ in size");

  const int adapt_up_to = policy.max_adapt_layer.value_or(num_b_layers(cfg));
  const std::string name = variant_name(policy);

  SequenceResult out;
  out.container.gop = cfg;
  out.container.quant = quant;
  out.container.motion = mcfg;
  out.container.width = width;
  out.container.height = height;
  std::vector<std::optional<Frame>> recon(frames.size());

  for (const auto& slot : build_schedule(cfg)) {
    const Frame& cur = frames[slot.poc];
    ComplexityLedger ledger;
    ledger.frames = 1;
    ledger.pixels = static_cast<std::uint64_t>(width) * height;
    DecisionRow row;
    row.poc = slot.poc;
    row.layer = slot.temporal_layer;
    row.k = slot.k;
    row.variant = name;
    EncodedFrame enc;

    if (slot.is_intra()) {
      enc = encode_intra(cur, quant);
      ledger += enc.macs;
      ledger.full_encodes = 1;
    } else {
      const Frame& past = *recon[slot.ref_past];
      const Frame& future = *recon[slot.ref_future];
      const bool adapt = slot.temporal_layer <= adapt_up_to;
      std::optional<SearchLogRow> search;
      auto log_search = [&](const Decision& d) {
        if (d.evals == 0) return;
        search = SearchLogRow{slot.poc, slot.temporal_layer, slot.k, name, d.scale, d.errors};
      };
      auto encode_decided = [&](Decision&& d) {
        enc = d.flows ? encode_bframe(cur, past, future, *d.flows, quant, mcfg)
                      : encode_bframe(cur, past, future, d.scale, quant, mcfg);
        ledger += d.macs;
        ledger += enc.macs;
        ledger.full_encodes = 1;
        row.predicted = d.predicted;
        row.evals = d.evals;
        log_search(d);
      };

      if (!adapt) {
        enc = encode_bframe(cur, past, future, 1, quant, mcfg);
        ledger += enc.macs;
        ledger.full_encodes = 1;
      } else {
        switch (policy.variant) {
          case Variant::Exhaustive: {
            auto r = omra_exhaustive(cur, past, future, quant, mcfg);
            ledger += r.macs;
            ledger.full_encodes = kNumFactors;
            SearchLogRow s{slot.poc, slot.temporal_layer, slot.k, name, r.best_scale, {}};
            for (int i = 0; i < kNumFactors; ++i) s.values[i] = r.record.entries[i]->cost;
            search = s;
            enc = std::move(r.best);
            break;
          }
          case Variant::Memc:
          case Variant::MemcStar: {
            MemcResult m = policy.variant == Variant::Memc
                               ? memc_search(cur, past, future, kDownsampleFactors, mcfg)
                               : memc_star(cur, past, future, slot, mcfg);
            Decision d;
            d.scale = m.best_scale;
            take_search(d, std::move(m));
            encode_decided(std::move(d));
            break;
          }
          case Variant::Bi:
            encode_decided(decide_bi(*policy.bi, cur, past, future, slot, mcfg));
            break;
          case Variant::Mu:
            encode_decided(decide_mu(*policy.mu, cur, past, future, slot));
            break;
          case Variant::Co:
            encode_decided(decide_co(*policy.mu, cur, past, future, slot, mcfg));
            break;
          case Variant::Fixed:
            enc = encode_bframe(cur, past, future, policy.fixed_scale, quant, mcfg);
            ledger += enc.macs;
            ledger.full_encodes = 1;
            break;
        }
      }
      if (search) out.search_log.push_back(*search);
    }

    row.scale = enc.scale;
    row.bits = enc.rate;
    row.mse = enc.distortion;
    out.log.push_back(row);
    out.container.frames.push_back(enc.stream);
    recon[slot.poc] = std::move(enc.recon);
    out.frame_macs.push_back(ledger);
    out.macs += ledger;
  }

  out.recon.reserve(frames.size());
  for (auto& r : recon) out.recon.push_back(std::move(*r));
  return out;
}

void write_decision_log(std::ostream& out, std::span<const DecisionRow> rows) {
  out << "poc,layer,k,variant,S_pred,S_final,evals,bits,mse\n";
  auto precision = out.precision(17);
  for (const auto& r : rows) {
    out << r.poc << ',' << r.layer << ',' << r.k << ',' << r.variant << ',';
    if (r.predicted) out << *r.predicted;
    out << ',' << r.scale << ',' << r.evals << ',' << r.bits << ',' << r.mse << '\n';
  }
  out.precision(precision);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

template <typename T>
T parse_number(const std::string& s, const char* what) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw DataError(std::string("bad ") + what + " value '" + s + "' in decision log");
  return v;
}

}  // namespace

std::vector<DecisionRow> read_decision_log(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "poc,layer,k,variant,S_pred,S_final,evals,bits,mse")
    throw DataError("not a decision log");
  std::vector<DecisionRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto c = split_csv(line);
    if (c.size() != 9) throw DataError("decision log row has " + std::to_string(c.size()) + " fields");
    DecisionRow r;
    r.poc = parse_number<int>(c[0], "poc");
    r.layer = parse_number<int>(c[1], "layer");
    r.k = parse_number<int>(c[2], "k");
    r.variant = c[3];
    if (!c[4].empty()) r.predicted = parse_number<int>(c[4], "S_pred");
    r.scale = parse_number<int>(c[5], "S_final");
    r.evals = parse_number<int>(c[6], "evals");
    r.bits = parse_number<std::uint64_t>(c[7], "bits");
    r.mse = parse_number<double>(c[8], "mse");
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace omra
