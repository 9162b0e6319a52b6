#include "omra/gop.hpp"

#include <bit>
#include <ostream>
#include <string>

#include "omra/error.hpp"

namespace omra {

namespace {

int log2_exact(int v) { return std::countr_zero(static_cast<unsigned>(v)); }

// Appends the B-frames strictly inside (a, b), b - a a power of two, in layer
// order (breadth-first).
void bisect(int a, int b, int gop_size, std::vector<FrameSlot>& out) {
  std::vector<std::pair<int, int>> level{{a, b}};
  while (!level.empty()) {
    std::vector<std::pair<int, int>> next;
    for (auto [lo, hi] : level) {
      if (hi - lo < 2) continue;
      int mid = (lo + hi) / 2;
      FrameSlot s;
      s.poc = mid;
      s.kind = FrameKind::BFrame;
      s.ref_past = lo;
      s.ref_future = hi;
      s.k = mid - lo;
      s.temporal_layer = log2_exact(gop_size) - log2_exact(s.k);
      out.push_back(s);
      next.emplace_back(lo, mid);
      next.emplace_back(mid, hi);
    }
    level = std::move(next);
  }
}

FrameSlot intra_slot(int poc) {
  FrameSlot s;
  s.poc = poc;
  return s;
}

}  // namespace

void validate(const GopConfig& c) {
  if (c.gop_size < 2 || c.gop_size > 32 || !std::has_single_bit(static_cast<unsigned>(c.gop_size)))
    throw DataError("gop_size must be one of 2,4,8,16,32");
  if (c.intra_period < c.gop_size || c.intra_period % c.gop_size != 0)
    throw DataError("intra_period must be a multiple of gop_size");
  if (c.num_frames < 1) throw DataError("num_frames must be >= 1");
}

int num_b_layers(const GopConfig& c) { return log2_exact(c.gop_size); }

std::vector<FrameSlot> build_schedule(const GopConfig& config) {
  validate(config);
  const int last = config.num_frames - 1;

  // Anchors at every GOP boundary plus the final frame.
  std::vector<int> anchors;
  for (int p = 0; p <= last; p += config.gop_size) anchors.push_back(p);
  if (anchors.back() != last) {
    // Split the tail into power-of-two pieces, largest first.
    int a = anchors.back();
    while (a < last) {
      int len = last - a;
      int piece = static_cast<int>(std::bit_floor(static_cast<unsigned>(len)));
      a += piece;
      anchors.push_back(a);
    }
  }

  std::vector<FrameSlot> order;
  order.reserve(config.num_frames);
  order.push_back(intra_slot(anchors[0]));
  for (std::size_t i = 1; i < anchors.size(); ++i) {
    order.push_back(intra_slot(anchors[i]));
    bisect(anchors[i - 1], anchors[i], config.gop_size, order);
  }
  return order;
}

int temporal_layer_of(int poc, const GopConfig& config) {
  if (poc < 0 || poc >= config.num_frames) throw DataError("poc " + std::to_string(poc) + " out of range");
  for (const auto& s : build_schedule(config))
    if (s.poc == poc) return s.temporal_layer;
  throw DataError("poc not scheduled");
}

void write_schedule_csv(std::ostream& out, const std::vector<FrameSlot>& schedule) {
  out << "poc,kind,layer,ref_past,ref_future,k\n";
  for (const auto& s : schedule) {
    out << s.poc << ',' << (s.is_intra() ? "intra" : "bframe") << ',' << s.temporal_layer << ',' << s.ref_past
        << ',' << s.ref_future << ',' << s.k << '\n';
  }
}

}  // namespace omra
