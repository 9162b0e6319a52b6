#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace omra {

enum class MacCategory { MotionEstimation, Warping, Resampling, TransformQuantEntropy, Classifier };
inline constexpr int kNumMacCategories = 5;

std::string_view category_name(MacCategory c);

// Catalog v1. One absolute-difference-accumulate counts as one MAC.
//   BlockSearch      per block: (2R+1)^2 positions * B^2
//   HalfPelRefine    per block: 8 positions * B^2 * 5 (4 interpolation + 1 SAD)
//   BilinearWarp     per output pixel: 4
//   FlowResample     per target cell: 4
//   BoxDownsample    per output sample: 4
//   Dct8x8           per 8x8 block and direction: 1024 (2 passes * 64 coeffs * 8)
//   QuantEntropy     per coefficient: 2
//   ClassifierForward per forward: analytic layer sum supplied by the caller
enum class MacKind {
  BlockSearch,
  HalfPelRefine,
  BilinearWarp,
  FlowResample,
  BoxDownsample,
  Dct8x8,
  QuantEntropy,
  ClassifierForward,
};

inline constexpr int kMacCatalogVersion = 1;

struct MacEvent {
  MacKind kind;
  std::uint64_t count = 1;      // blocks, pixels, cells, coefficients or forwards
  int block_size = 8;           // BlockSearch / HalfPelRefine
  int search_range = 8;         // BlockSearch
  std::uint64_t per_forward = 0;  // ClassifierForward
};

MacKind parse_mac_kind(std::string_view name);  // throws DataError on unknown descriptors
MacCategory category_of(MacKind kind);
std::uint64_t mac_model(const MacEvent& event);

struct ComplexityLedger {
  std::array<std::uint64_t, kNumMacCategories> macs{};
  std::uint64_t frames = 0;
  std::uint64_t pixels = 0;  // sum of W*H over counted frames

  // Counters for the decision procedures.
  std::uint64_t classifier_calls = 0;
  std::uint64_t candidate_evals = 0;
  std::uint64_t full_encodes = 0;

  void add(const MacEvent& event);
  std::uint64_t& operator[](MacCategory c) { return macs[static_cast<int>(c)]; }
  std::uint64_t operator[](MacCategory c) const { return macs[static_cast<int>(c)]; }
  std::uint64_t total() const;
  double kmac_per_pixel() const;
  ComplexityLedger& operator+=(const ComplexityLedger& other);
  friend bool operator==(const ComplexityLedger&, const ComplexityLedger&) = default;
};

}  // namespace omra
