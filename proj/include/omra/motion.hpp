#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "omra/frame.hpp"

namespace omra {

struct MotionVector {
  double dx = 0.0;
  double dy = 0.0;
  friend bool operator==(const MotionVector&, const MotionVector&) = default;
};

// Dense vector grid at scale S. Vectors are in units of this grid's pixels.
struct FlowField {
  int grid_w = 0;
  int grid_h = 0;
  int scale = 1;
  std::vector<MotionVector> vectors;

  FlowField() = default;
  FlowField(int w, int h, int s, MotionVector fill = {});

  MotionVector& at(int x, int y) { return vectors[static_cast<std::size_t>(y) * grid_w + x]; }
  const MotionVector& at(int x, int y) const { return vectors[static_cast<std::size_t>(y) * grid_w + x]; }

  friend bool operator==(const FlowField&, const FlowField&) = default;
};

enum class Refinement { None, HalfPel };

struct MotionConfig {
  int block_size = 8;
  int search_range = 8;
  Refinement refinement = Refinement::None;
};

void validate(const MotionConfig& cfg);
bool valid_scale(int s);

// Repeated 2x2 box averaging, rounding half away from zero.
Frame downsample_frame(const Frame& f, int scale);

// Edge-replicates to the next multiple of `multiple` in each dimension.
Frame pad_to_multiple(const Frame& f, int multiple);

// Full-search block matching of `cur` against `ref`, both already at scale S.
// The result has the dimensions of `cur` and carries `scale`. Planes that are
// not block-aligned are edge-padded for the search.
FlowField estimate_flow(const Frame& cur, const Frame& ref, const MotionConfig& cfg, int scale = 1);

// Bilinear (cell-centre aligned) resampling of the vector grid to `to_scale`,
// with vectors rescaled into target-grid units.
FlowField resample_flow(const FlowField& flow, int to_scale);

// Backward warp: out(x,y) = ref sampled bilinearly at the border-clamped
// position (x+dx, y+dy).
Frame warp(const Frame& ref, const FlowField& flow);

// Mean of the two directional MSEs after upsampling both flows to full
// resolution and warping.
double prediction_error(const Frame& cur, const Frame& ref_past, const Frame& ref_future,
                        const FlowField& flow_past, const FlowField& flow_future, int scale);

// Binary flow dump: int32 grid_w, grid_h, S then float32 (dx,dy) pairs,
// little-endian, row-major.
void write_flow(std::ostream& out, const FlowField& flow);
FlowField read_flow(std::istream& in);

}  // namespace omra
