#include "omra/complexity.hpp"

#include <numeric>

#include "omra/error.hpp"

namespace omra {

std::string_view category_name(MacCategory c) {
  switch (c) {
    case MacCategory::MotionEstimation: return "motion_estimation";
    case MacCategory::Warping: return "warping";
    case MacCategory::Resampling: return "resampling";
    case MacCategory::TransformQuantEntropy: return "transform_quant_entropy";
    case MacCategory::Classifier: return "classifier";
  }
  return "unknown";
}

MacKind parse_mac_kind(std::string_view name) {
  if (name == "block_search") return MacKind::BlockSearch;
  if (name == "halfpel_refine") return MacKind::HalfPelRefine;
  if (name == "bilinear_warp") return MacKind::BilinearWarp;
  if (name == "flow_resample") return MacKind::FlowResample;
  if (name == "box_downsample") return MacKind::BoxDownsample;
  if (name == "dct8x8") return MacKind::Dct8x8;
  if (name == "quant_entropy") return MacKind::QuantEntropy;
  if (name == "classifier_forward") return MacKind::ClassifierForward;
  throw DataError("unknown MAC descriptor '" + std::string(name) + "'");
}

MacCategory category_of(MacKind kind) {
  switch (kind) {
    case MacKind::BlockSearch:
    case MacKind::HalfPelRefine: return MacCategory::MotionEstimation;
    case MacKind::BilinearWarp: return MacCategory::Warping;
    case MacKind::FlowResample:
    case MacKind::BoxDownsample: return MacCategory::Resampling;
    case MacKind::Dct8x8:
    case MacKind::QuantEntropy: return MacCategory::TransformQuantEntropy;
    case MacKind::ClassifierForward: return MacCategory::Classifier;
  }
  throw DataError("unknown MAC descriptor");
}

std::uint64_t mac_model(const MacEvent& e) {
  const std::uint64_t b2 = static_cast<std::uint64_t>(e.block_size) * e.block_size;
  switch (e.kind) {
    case MacKind::BlockSearch: {
      const std::uint64_t side = 2 * static_cast<std::uint64_t>(e.search_range) + 1;
      return e.count * side * side * b2;
    }
    case MacKind::HalfPelRefine: return e.count * 8 * b2 * 5;
    case MacKind::BilinearWarp: return e.count * 4;
    case MacKind::FlowResample: return e.count * 4;
    case MacKind::BoxDownsample: return e.count * 4;
    case MacKind::Dct8x8: return e.count * 1024;
    case MacKind::QuantEntropy: return e.count * 2;
    case MacKind::ClassifierForward: return e.count * e.per_forward;
  }
  throw DataError("unknown MAC descriptor");
}

void ComplexityLedger::add(const MacEvent& event) { (*this)[category_of(event.kind)] += mac_model(event); }

std::uint64_t ComplexityLedger::total() const { return std::accumulate(macs.begin(), macs.end(), std::uint64_t{0}); }

double ComplexityLedger::kmac_per_pixel() const {
  return pixels == 0 ? 0.0 : static_cast<double>(total()) / (1000.0 * static_cast<double>(pixels));
}

ComplexityLedger& ComplexityLedger::operator+=(const ComplexityLedger& o) {
  for (int i = 0; i < kNumMacCategories; ++i) macs[i] += o.macs[i];
  frames += o.frames;
  pixels += o.pixels;
  classifier_calls += o.classifier_calls;
  candidate_evals += o.candidate_evals;
  full_encodes += o.full_encodes;
  return *this;
}

}  // namespace omra
