#include "omra/frame.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "omra/error.hpp"
#include "omra/keyvalue.hpp"
#include "omra/random.hpp"

namespace omra {

namespace {

void check_dims(int width, int height) {
  if (width < 16 || height < 16 || width % 16 != 0 || height % 16 != 0) {
    throw DataError("frame dimensions " + std::to_string(width) + "x" + std::to_string(height) +
                    " not divisible by 16");
  }
}

std::vector<double> box5_wrap(const std::vector<double>& src, int w, int h) {
  std::vector<double> tmp(src.size());
  std::vector<double> dst(src.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int d = -2; d <= 2; ++d) s += src[static_cast<std::size_t>(y) * w + (x + d + w) % w];
      tmp[static_cast<std::size_t>(y) * w + x] = s / 5.0;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int d = -2; d <= 2; ++d) s += tmp[static_cast<std::size_t>((y + d + h) % h) * w + x];
      dst[static_cast<std::size_t>(y) * w + x] = s / 5.0;
    }
  }
  return dst;
}

double wrapped_bilinear(const std::vector<double>& tex, int w, int h, double x, double y) {
  double fx = std::floor(x);
  double fy = std::floor(y);
  double ax = x - fx;
  double ay = y - fy;
  auto wrap = [](long v, int n) { return static_cast<int>(((v % n) + n) % n); };
  int x0 = wrap(static_cast<long>(fx), w);
  int y0 = wrap(static_cast<long>(fy), h);
  int x1 = (x0 + 1) % w;
  int y1 = (y0 + 1) % h;
  auto t = [&](int xx, int yy) { return tex[static_cast<std::size_t>(yy) * w + xx]; };
  return (1 - ay) * ((1 - ax) * t(x0, y0) + ax * t(x1, y0)) + ay * ((1 - ax) * t(x0, y1) + ax * t(x1, y1));
}

std::vector<double> quantized_texture(int w, int h, std::uint64_t seed) {
  auto tex = synthetic_texture(w, h, seed);
  for (auto& v : tex) v = to_sample(v * 255.0);
  return tex;
}

// ---- raw planar ----

std::filesystem::path header_path(const std::filesystem::path& p) {
  return std::filesystem::path(p.string() + ".hdr");
}

Sequence read_raw(const std::filesystem::path& path) {
  auto kv = read_key_values(header_path(path));
  int width = kv_int(kv, "width");
  int height = kv_int(kv, "height");
  int frames = kv_int(kv, "frames");
  if (width <= 0 || height <= 0 || frames <= 0) throw DataError("malformed header: " + header_path(path).string());
  check_dims(width, height);

  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t plane = static_cast<std::size_t>(width) * height;
  if (bytes.size() != plane * static_cast<std::size_t>(frames)) throw DataError("truncated payload");

  Sequence seq;
  seq.reserve(frames);
  for (int f = 0; f < frames; ++f) {
    auto first = bytes.begin() + static_cast<std::ptrdiff_t>(plane * f);
    std::vector<std::uint8_t> s(first, first + static_cast<std::ptrdiff_t>(plane));
    seq.emplace_back(width, height, std::move(s));
  }
  return seq;
}

void write_raw(const std::filesystem::path& path, const Sequence& frames) {
  if (frames.empty()) throw DataError("empty sequence");
  std::ofstream hdr(header_path(path));
  hdr << "width=" << frames[0].width() << "\nheight=" << frames[0].height() << "\nframes=" << frames.size()
      << "\n";
  std::ofstream out(path, std::ios::binary);
  for (const auto& f : frames) {
    auto s = f.samples();
    out.write(reinterpret_cast<const char*>(s.data()), static_cast<std::streamsize>(s.size()));
  }
  if (!out || !hdr) throw DataError("write failed: " + path.string());
}

// ---- y4m ----

struct Y4mHeader {
  int width = 0;
  int height = 0;
  std::size_t chroma_bytes = 0;  // per frame, discarded on read
};

Y4mHeader parse_y4m_header(const std::string& line) {
  std::istringstream ss(line);
  std::string tok;
  ss >> tok;
  if (tok != "YUV4MPEG2") throw DataError("malformed header: missing YUV4MPEG2 signature");
  Y4mHeader h;
  std::string colorspace = "420jpeg";
  while (ss >> tok) {
    switch (tok[0]) {
      case 'W': h.width = std::stoi(tok.substr(1)); break;
      case 'H': h.height = std::stoi(tok.substr(1)); break;
      case 'C': colorspace = tok.substr(1); break;
      case 'I':
        if (tok != "Ip" && tok != "I?") throw DataError("interlaced content not supported");
        break;
      default: break;
    }
  }
  if (h.width <= 0 || h.height <= 0) throw DataError("malformed header: missing dimensions");
  check_dims(h.width, h.height);
  bool high_depth = colorspace.find("p1") != std::string::npos || colorspace.find("p9") != std::string::npos;
  if (colorspace.rfind("420", 0) == 0 && !high_depth) {
    h.chroma_bytes = 2 * static_cast<std::size_t>((h.width + 1) / 2) * static_cast<std::size_t>((h.height + 1) / 2);
  } else if (colorspace == "mono") {
    h.chroma_bytes = 0;
  } else {
    throw DataError("malformed header: unsupported colorspace C" + colorspace);
  }
  return h;
}

Sequence read_y4m(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("malformed header: empty file");
  Y4mHeader h = parse_y4m_header(line);
  std::size_t plane = static_cast<std::size_t>(h.width) * h.height;

  Sequence seq;
  while (std::getline(in, line)) {
    if (line.rfind("FRAME", 0) != 0) throw DataError("malformed frame marker");
    std::vector<std::uint8_t> s(plane);
    in.read(reinterpret_cast<char*>(s.data()), static_cast<std::streamsize>(plane));
    if (static_cast<std::size_t>(in.gcount()) != plane) throw DataError("truncated payload");
    if (h.chroma_bytes > 0) {
      in.ignore(static_cast<std::streamsize>(h.chroma_bytes));
      if (static_cast<std::size_t>(in.gcount()) != h.chroma_bytes) throw DataError("truncated payload");
    }
    seq.emplace_back(h.width, h.height, std::move(s));
  }
  if (seq.empty()) throw DataError("truncated payload: no frames");
  return seq;
}

void write_y4m(const std::filesystem::path& path, const Sequence& frames) {
  if (frames.empty()) throw DataError("empty sequence");
  std::ofstream out(path, std::ios::binary);
  int w = frames[0].width();
  int h = frames[0].height();
  out << "YUV4MPEG2 W" << w << " H" << h << " F25:1 Ip A1:1 C420jpeg\n";
  std::vector<char> chroma(2 * static_cast<std::size_t>(w / 2) * (h / 2), static_cast<char>(128));
  for (const auto& f : frames) {
    out << "FRAME\n";
    auto s = f.samples();
    out.write(reinterpret_cast<const char*>(s.data()), static_cast<std::streamsize>(s.size()));
    out.write(chroma.data(), static_cast<std::streamsize>(chroma.size()));
  }
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace

Frame::Frame(int width, int height, std::uint8_t fill) {
  check_dims(width, height);
  width_ = width;
  height_ = height;
  samples_.assign(static_cast<std::size_t>(width) * height, fill);
}

Frame::Frame(int width, int height, std::vector<std::uint8_t> samples) {
  check_dims(width, height);
  if (samples.size() != static_cast<std::size_t>(width) * height) throw DataError("sample count mismatch");
  width_ = width;
  height_ = height;
  samples_ = std::move(samples);
}

Frame Frame::plane(int width, int height, std::uint8_t fill) {
  if (width <= 0 || height <= 0) throw DataError("plane dimensions must be positive");
  Frame f;
  f.width_ = width;
  f.height_ = height;
  f.samples_.assign(static_cast<std::size_t>(width) * height, fill);
  return f;
}

std::uint8_t Frame::clamped(int x, int y) const {
  x = std::clamp(x, 0, width_ - 1);
  y = std::clamp(y, 0, height_ - 1);
  return at(x, y);
}

std::uint8_t to_sample(double v) {
  double r = v < 0 ? -std::floor(-v + 0.5) : std::floor(v + 0.5);
  return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

SequenceFormat format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".y4m" ? SequenceFormat::Y4m : SequenceFormat::RawPlanar;
}

Sequence read_sequence(const std::filesystem::path& path, SequenceFormat format) {
  return format == SequenceFormat::Y4m ? read_y4m(path) : read_raw(path);
}

void write_sequence(const std::filesystem::path& path, SequenceFormat format, const Sequence& frames) {
  for (const auto& f : frames) {
    if (f.width() != frames[0].width() || f.height() != frames[0].height())
      throw DataError("frames of differing dimensions");
  }
  if (format == SequenceFormat::Y4m) {
    write_y4m(path, frames);
  } else {
    write_raw(path, frames);
  }
}

SyntheticSpec read_synthetic_spec(const std::filesystem::path& path) {
  auto kv = read_key_values(path);
  SyntheticSpec s;
  s.width = kv_int(kv, "width", s.width);
  s.height = kv_int(kv, "height", s.height);
  s.num_frames = kv_int(kv, "frames", s.num_frames);
  s.vx = kv_double(kv, "vx", s.vx);
  s.vy = kv_double(kv, "vy", s.vy);
  s.texture_seed = static_cast<std::uint64_t>(kv_int(kv, "seed", static_cast<long>(s.texture_seed)));
  if (kv.count("occluder_size")) {
    Occluder o;
    o.size = kv_int(kv, "occluder_size");
    o.vx = kv_double(kv, "occluder_vx", 0.0);
    o.vy = kv_double(kv, "occluder_vy", 0.0);
    s.occluder = o;
  }
  return s;
}

std::vector<double> synthetic_texture(int width, int height, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> noise(static_cast<std::size_t>(width) * height);
  for (auto& v : noise) v = unit_uniform(rng);
  auto tex = box5_wrap(box5_wrap(noise, width, height), width, height);
  auto [lo, hi] = std::minmax_element(tex.begin(), tex.end());
  double mn = *lo;
  double range = std::max(*hi - mn, 1e-12);
  for (auto& v : tex) v = (v - mn) / range;
  return tex;
}

Sequence generate_synthetic(const SyntheticSpec& spec) {
  check_dims(spec.width, spec.height);
  if (spec.num_frames < 1) throw DataError("num_frames must be >= 1");
  if (std::abs(spec.vx) > spec.width / 4.0 || std::abs(spec.vy) > spec.width / 4.0)
    throw DataError("velocity exceeds width/4 per frame");

  const int w = spec.width;
  const int h = spec.height;
  auto tex = quantized_texture(w, h, spec.texture_seed);
  std::vector<double> patch;
  if (spec.occluder) {
    if (spec.occluder->size < 1 || spec.occluder->size > std::min(w, h)) throw DataError("bad occluder size");
    patch = quantized_texture(w, h, spec.texture_seed ^ 0x9e3779b97f4a7c15ULL);
  }

  Sequence seq;
  seq.reserve(spec.num_frames);
  for (int t = 0; t < spec.num_frames; ++t) {
    Frame f(w, h);
    const double ox = t * spec.vx;
    const double oy = t * spec.vy;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) f.at(x, y) = to_sample(wrapped_bilinear(tex, w, h, x - ox, y - oy));
    if (spec.occluder) {
      const auto& o = *spec.occluder;
      double px = (w - o.size) / 2.0 + t * o.vx;
      double py = (h - o.size) / 2.0 + t * o.vy;
      long bx = std::lround(std::floor(px));
      long by = std::lround(std::floor(py));
      for (int j = 0; j < o.size; ++j) {
        for (int i = 0; i < o.size; ++i) {
          int x = static_cast<int>(((bx + i) % w + w) % w);
          int y = static_cast<int>(((by + j) % h + h) % h);
          f.at(x, y) = static_cast<std::uint8_t>(patch[static_cast<std::size_t>(j) * w + i]);
        }
      }
    }
    seq.push_back(std::move(f));
  }
  return seq;
}

double mse(const Frame& a, const Frame& b) {
  if (a.width() != b.width() || a.height() != b.height()) throw DataError("dimension mismatch");
  auto sa = a.samples();
  auto sb = b.samples();
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    int d = static_cast<int>(sa[i]) - static_cast<int>(sb[i]);
    acc += static_cast<std::uint64_t>(d * d);
  }
  return sa.empty() ? 0.0 : static_cast<double>(acc) / static_cast<double>(sa.size());
}

double psnr_from_mse(double m) {
  if (m <= 0.0) return 99.0;
  return std::min(99.0, 10.0 * std::log10(255.0 * 255.0 / m));
}

double psnr(const Frame& a, const Frame& b) { return psnr_from_mse(mse(a, b)); }

}  // namespace omra
