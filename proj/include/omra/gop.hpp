#pragma once

#include <iosfwd>
#include <vector>

namespace omra {

struct GopConfig {
  int gop_size = 32;
  int intra_period = 32;
  int num_frames = 33;
};

enum class FrameKind { Intra, BFrame };

struct FrameSlot {
  int poc = 0;
  FrameKind kind = FrameKind::Intra;
  int temporal_layer = 0;  // 0 for intra, 1 = most distant references
  int ref_past = -1;
  int ref_future = -1;
  int k = 0;               // poc - ref_past

  bool is_intra() const { return kind == FrameKind::Intra; }
  friend bool operator==(const FrameSlot&, const FrameSlot&) = default;
};

void validate(const GopConfig& config);

// Number of B layers, log2(gop_size).
int num_b_layers(const GopConfig& config);

// Slots in coding order. Every multiple of gop_size (and the last frame of a
// truncated tail) is an intra anchor; B-frames come from dyadic bisection of
// each anchor interval, emitted layer by layer after the closing anchor.
std::vector<FrameSlot> build_schedule(const GopConfig& config);

int temporal_layer_of(int poc, const GopConfig& config);

// CSV `poc,kind,layer,ref_past,ref_future,k`, coding order.
void write_schedule_csv(std::ostream& out, const std::vector<FrameSlot>& schedule);

}  // namespace omra
