#include "omra/motion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <tuple>

#include "omra/binio.hpp"
#include "omra/error.hpp"

namespace omra {

FlowField::FlowField(int w, int h, int s, MotionVector fill)
    : grid_w(w), grid_h(h), scale(s), vectors(static_cast<std::size_t>(w) * h, fill) {}

bool valid_scale(int s) { return s == 1 || s == 2 || s == 4 || s == 8; }

void validate(const MotionConfig& cfg) {
  if (cfg.block_size != 4 && cfg.block_size != 8 && cfg.block_size != 16)
    throw DataError("block_size must be 4, 8 or 16");
  if (cfg.search_range < 1) throw DataError("search_range must be >= 1");
}

Frame downsample_frame(const Frame& f, int scale) {
  if (!valid_scale(scale)) throw DataError("invalid downsampling factor " + std::to_string(scale));
  if (f.width() % scale != 0 || f.height() % scale != 0)
    throw DataError("dimensions not divisible by downsampling factor");
  Frame cur = f;
  for (int s = scale; s > 1; s /= 2) {
    Frame next = Frame::plane(cur.width() / 2, cur.height() / 2);
    for (int y = 0; y < next.height(); ++y) {
      for (int x = 0; x < next.width(); ++x) {
        int sum = cur.at(2 * x, 2 * y) + cur.at(2 * x + 1, 2 * y) + cur.at(2 * x, 2 * y + 1) +
                  cur.at(2 * x + 1, 2 * y + 1);
        next.at(x, y) = static_cast<std::uint8_t>((sum + 2) / 4);
      }
    }
    cur = std::move(next);
  }
  return cur;
}

Frame pad_to_multiple(const Frame& f, int multiple) {
  int w = (f.width() + multiple - 1) / multiple * multiple;
  int h = (f.height() + multiple - 1) / multiple * multiple;
  if (w == f.width() && h == f.height()) return f;
  Frame out = Frame::plane(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.at(x, y) = f.clamped(x, y);
  return out;
}

namespace {

// Reference plane with an edge-replicated margin so the search loop needs no
// bounds checks.
struct ExtendedPlane {
  int margin;
  int stride;
  int rows;
  std::vector<std::uint8_t> data;

  ExtendedPlane(const Frame& ref, int margin_, int w, int h)
      : margin(margin_), stride(w + 2 * margin_), rows(h + 2 * margin_),
        data(static_cast<std::size_t>(stride) * rows) {
    for (int y = 0; y < rows; ++y)
      for (int x = 0; x < stride; ++x)
        data[static_cast<std::size_t>(y) * stride + x] = ref.clamped(x - margin, y - margin);
  }

  const std::uint8_t* row(int x, int y) const {
    return data.data() + static_cast<std::size_t>(y + margin) * stride + (x + margin);
  }

  double sample(double x, double y) const {
    int x0 = static_cast<int>(std::floor(x));
    int y0 = static_cast<int>(std::floor(y));
    double ax = x - x0;
    double ay = y - y0;
    const std::uint8_t* p = row(x0, y0);
    return (1 - ay) * ((1 - ax) * p[0] + ax * p[1]) + ay * ((1 - ax) * p[stride] + ax * p[stride + 1]);
  }
};

// Tie-break key: SAD, then |dx|+|dy|, then dy, then dx.
using SearchKey = std::tuple<double, double, double, double>;

SearchKey key_of(double sad, double dx, double dy) { return {sad, std::abs(dx) + std::abs(dy), dy, dx}; }

}  // namespace

FlowField estimate_flow(const Frame& cur, const Frame& ref, const MotionConfig& cfg, int scale) {
  validate(cfg);
  if (cur.width() != ref.width() || cur.height() != ref.height()) throw DataError("dimension mismatch");
  const int b = cfg.block_size;
  const int r = cfg.search_range;
  Frame padded = pad_to_multiple(cur, b);
  const int pw = padded.width();
  const int ph = padded.height();
  ExtendedPlane ext(ref, r + 2, pw, ph);

  FlowField flow(cur.width(), cur.height(), scale);
  for (int by = 0; by < ph; by += b) {
    for (int bx = 0; bx < pw; bx += b) {
      int best_sad = std::numeric_limits<int>::max();
      int best_dx = 0;
      int best_dy = 0;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          int sad = 0;
          for (int j = 0; j < b && sad <= best_sad; ++j) {
            const std::uint8_t* c = &padded.at(bx, by + j);
            const std::uint8_t* p = ext.row(bx + dx, by + j + dy);
            for (int i = 0; i < b; ++i) sad += std::abs(static_cast<int>(c[i]) - static_cast<int>(p[i]));
          }
          if (key_of(sad, dx, dy) < key_of(best_sad, best_dx, best_dy)) {
            best_sad = sad;
            best_dx = dx;
            best_dy = dy;
          }
        }
      }

      double vdx = best_dx;
      double vdy = best_dy;
      if (cfg.refinement == Refinement::HalfPel) {
        SearchKey best = key_of(best_sad, vdx, vdy);
        const double cx = best_dx;
        const double cy = best_dy;
        for (int hy = -1; hy <= 1; ++hy) {
          for (int hx = -1; hx <= 1; ++hx) {
            if (hx == 0 && hy == 0) continue;
            double dx = cx + 0.5 * hx;
            double dy = cy + 0.5 * hy;
            if (std::abs(dx) > r || std::abs(dy) > r) continue;
            double sad = 0.0;
            for (int j = 0; j < b; ++j)
              for (int i = 0; i < b; ++i)
                sad += std::abs(padded.at(bx + i, by + j) - ext.sample(bx + i + dx, by + j + dy));
            if (auto k = key_of(sad, dx, dy); k < best) {
              best = k;
              vdx = dx;
              vdy = dy;
            }
          }
        }
      }

      for (int y = by; y < std::min(by + b, cur.height()); ++y)
        for (int x = bx; x < std::min(bx + b, cur.width()); ++x) flow.at(x, y) = {vdx, vdy};
    }
  }
  return flow;
}

FlowField resample_flow(const FlowField& flow, int to_scale) {
  if (!valid_scale(to_scale) || !valid_scale(flow.scale)) throw DataError("invalid flow scale");
  if (to_scale == flow.scale) return flow;
  const double ratio = static_cast<double>(flow.scale) / to_scale;  // target cells per source cell
  const int tw = static_cast<int>(std::lround(flow.grid_w * ratio));
  const int th = static_cast<int>(std::lround(flow.grid_h * ratio));
  if (tw < 1 || th < 1) throw DataError("flow grid too small to resample");

  FlowField out(tw, th, to_scale);
  for (int y = 0; y < th; ++y) {
    double sy = std::clamp((y + 0.5) / ratio - 0.5, 0.0, static_cast<double>(flow.grid_h - 1));
    int y0 = static_cast<int>(std::floor(sy));
    int y1 = std::min(y0 + 1, flow.grid_h - 1);
    double ay = sy - y0;
    for (int x = 0; x < tw; ++x) {
      double sx = std::clamp((x + 0.5) / ratio - 0.5, 0.0, static_cast<double>(flow.grid_w - 1));
      int x0 = static_cast<int>(std::floor(sx));
      int x1 = std::min(x0 + 1, flow.grid_w - 1);
      double ax = sx - x0;
      const auto& a = flow.at(x0, y0);
      const auto& b = flow.at(x1, y0);
      const auto& c = flow.at(x0, y1);
      const auto& d = flow.at(x1, y1);
      // Uniform neighbourhoods stay bit-exact.
      auto lerp2 = [&](double va, double vb, double vc, double vd) {
        if (va == vb && vb == vc && vc == vd) return va;
        return (1 - ay) * ((1 - ax) * va + ax * vb) + ay * ((1 - ax) * vc + ax * vd);
      };
      out.at(x, y) = {lerp2(a.dx, b.dx, c.dx, d.dx) * ratio, lerp2(a.dy, b.dy, c.dy, d.dy) * ratio};
    }
  }
  return out;
}

Frame warp(const Frame& ref, const FlowField& flow) {
  if (flow.grid_w != ref.width() || flow.grid_h != ref.height()) throw DataError("flow/frame dimension mismatch");
  const int w = ref.width();
  const int h = ref.height();
  Frame out = ref;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto& v = flow.at(x, y);
      double sx = std::clamp(x + v.dx, 0.0, static_cast<double>(w - 1));
      double sy = std::clamp(y + v.dy, 0.0, static_cast<double>(h - 1));
      int x0 = static_cast<int>(sx);
      int y0 = static_cast<int>(sy);
      double ax = sx - x0;
      double ay = sy - y0;
      int x1 = std::min(x0 + 1, w - 1);
      int y1 = std::min(y0 + 1, h - 1);
      double val = (1 - ay) * ((1 - ax) * ref.at(x0, y0) + ax * ref.at(x1, y0)) +
                   ay * ((1 - ax) * ref.at(x0, y1) + ax * ref.at(x1, y1));
      out.at(x, y) = to_sample(val);
    }
  }
  return out;
}

double prediction_error(const Frame& cur, const Frame& ref_past, const Frame& ref_future,
                        const FlowField& flow_past, const FlowField& flow_future, int scale) {
  if (flow_past.scale != scale || flow_future.scale != scale) throw DataError("flow scale mismatch");
  Frame wp = warp(ref_past, resample_flow(flow_past, 1));
  Frame wf = warp(ref_future, resample_flow(flow_future, 1));
  return (mse(cur, wp) + mse(cur, wf)) / 2.0;
}

void write_flow(std::ostream& out, const FlowField& flow) {
  binio::put<std::int32_t>(out, flow.grid_w);
  binio::put<std::int32_t>(out, flow.grid_h);
  binio::put<std::int32_t>(out, flow.scale);
  for (const auto& v : flow.vectors) {
    binio::put<float>(out, static_cast<float>(v.dx));
    binio::put<float>(out, static_cast<float>(v.dy));
  }
}

FlowField read_flow(std::istream& in) {
  int w = binio::get<std::int32_t>(in);
  int h = binio::get<std::int32_t>(in);
  int s = binio::get<std::int32_t>(in);
  if (w <= 0 || h <= 0 || !valid_scale(s)) throw DataError("malformed flow header");
  FlowField f(w, h, s);
  for (auto& v : f.vectors) {
    v.dx = binio::get<float>(in);
    v.dy = binio::get<float>(in);
  }
  return f;
}

}  // namespace omra
