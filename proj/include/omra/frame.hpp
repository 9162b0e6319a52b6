#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace omra {

// Planar 8-bit luma raster. Dimensions are multiples of 16.
class Frame {
 public:
  Frame() = default;
  Frame(int width, int height, std::uint8_t fill = 0);
  Frame(int width, int height, std::vector<std::uint8_t> samples);

  // A raster without the multiple-of-16 constraint, used for downsampled
  // planes and classifier inputs.
  static Frame plane(int width, int height, std::uint8_t fill = 0);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }

  std::uint8_t at(int x, int y) const { return samples_[static_cast<std::size_t>(y) * width_ + x]; }
  std::uint8_t& at(int x, int y) { return samples_[static_cast<std::size_t>(y) * width_ + x]; }

  // Border-clamped read.
  std::uint8_t clamped(int x, int y) const;

  std::span<const std::uint8_t> samples() const { return samples_; }
  std::span<std::uint8_t> samples() { return samples_; }

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> samples_;
};

using Sequence = std::vector<Frame>;

enum class SequenceFormat { RawPlanar, Y4m };

struct Occluder {
  int size = 16;
  double vx = 0.0;
  double vy = 0.0;
};

struct SyntheticSpec {
  int width = 128;
  int height = 128;
  int num_frames = 33;
  double vx = 0.0;
  double vy = 0.0;
  std::uint64_t texture_seed = 1;
  std::optional<Occluder> occluder;
};

// Reads a whole sequence. Raw-planar expects `<path>.hdr` next to the payload.
Sequence read_sequence(const std::filesystem::path& path, SequenceFormat format);
void write_sequence(const std::filesystem::path& path, SequenceFormat format, const Sequence& frames);

// Picks the format from the extension (.y4m, otherwise raw-planar).
SequenceFormat format_from_path(const std::filesystem::path& path);

// Line-based key=value synthetic spec (width=, height=, frames=, vx=, vy=, seed=,
// occluder_size=, occluder_vx=, occluder_vy=).
SyntheticSpec read_synthetic_spec(const std::filesystem::path& path);

// Seeded smooth-noise texture, normalized to [0,1], toroidal.
std::vector<double> synthetic_texture(int width, int height, std::uint64_t seed);

Sequence generate_synthetic(const SyntheticSpec& spec);

double mse(const Frame& a, const Frame& b);
// 10*log10(255^2/mse), 99 dB when the frames are identical.
double psnr(const Frame& a, const Frame& b);
double psnr_from_mse(double mse);

// Rounds half away from zero and saturates to [0,255].
std::uint8_t to_sample(double v);

}  // namespace omra
