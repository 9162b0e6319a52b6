#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "omra/error.hpp"
#include "omra/frame.hpp"

using namespace omra;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "omra_test_frame";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("frame dimensions must be multiples of 16") {
  CHECK_THROWS_AS(Frame(20, 16), DataError);
  CHECK_THROWS_AS(Frame(8, 8), DataError);
  CHECK_NOTHROW(Frame(16, 32));
}

TEST_CASE("raw planar: constant single frame") {
  auto path = scratch("const.yraw");
  {
    std::ofstream(path.string() + ".hdr") << "width=16\nheight=16\nframes=1\n";
    std::ofstream out(path, std::ios::binary);
    std::string payload(256, static_cast<char>(128));
    out << payload;
  }
  auto seq = read_sequence(path, SequenceFormat::RawPlanar);
  REQUIRE(seq.size() == 1);
  for (auto s : seq[0].samples()) CHECK(s == 128);
}

TEST_CASE("raw planar: truncated payload") {
  auto path = scratch("short.yraw");
  std::ofstream(path.string() + ".hdr") << "width=16\nheight=16\nframes=2\n";
  {
    std::ofstream out(path, std::ios::binary);
    out << std::string(256 + 10, 'a');
  }
  CHECK_THROWS_WITH_AS(read_sequence(path, SequenceFormat::RawPlanar), "truncated payload", DataError);
}

TEST_CASE("raw planar: malformed header and bad dimensions") {
  auto path = scratch("bad.yraw");
  std::ofstream(path, std::ios::binary) << std::string(24 * 16, 'a');
  std::ofstream(path.string() + ".hdr") << "width=24\nheight=16\nframes=1\n";
  CHECK_THROWS_AS(read_sequence(path, SequenceFormat::RawPlanar), DataError);
  std::ofstream(path.string() + ".hdr") << "width=abc\n";
  CHECK_THROWS_AS(read_sequence(path, SequenceFormat::RawPlanar), DataError);
}

TEST_CASE("y4m: 4:2:0 input keeps luma only") {
  auto path = scratch("in.y4m");
  {
    std::ofstream out(path, std::ios::binary);
    out << "YUV4MPEG2 W16 H16 F30:1 Ip A1:1 C420jpeg\n";
    for (int f = 0; f < 3; ++f) {
      out << "FRAME\n" << std::string(256, static_cast<char>(10 + f)) << std::string(128, static_cast<char>(200));
    }
  }
  auto seq = read_sequence(path, SequenceFormat::Y4m);
  REQUIRE(seq.size() == 3);
  CHECK(seq[2].at(5, 5) == 12);
  CHECK(seq[0].width() == 16);
}

TEST_CASE("y4m: truncated frame") {
  auto path = scratch("trunc.y4m");
  {
    std::ofstream out(path, std::ios::binary);
    out << "YUV4MPEG2 W16 H16 C420jpeg\nFRAME\n" << std::string(300, 'x');
  }
  CHECK_THROWS_AS(read_sequence(path, SequenceFormat::Y4m), DataError);
}

TEST_CASE("sequence round-trips bit-exactly through both formats") {
  SyntheticSpec spec;
  spec.width = 32;
  spec.height = 48;
  spec.num_frames = 4;
  spec.vx = 1.25;
  spec.vy = -0.5;
  spec.texture_seed = 7;
  auto frames = generate_synthetic(spec);
  for (auto fmt : {SequenceFormat::RawPlanar, SequenceFormat::Y4m}) {
    auto path = scratch(fmt == SequenceFormat::Y4m ? "rt.y4m" : "rt.yraw");
    write_sequence(path, fmt, frames);
    CHECK(read_sequence(path, fmt) == frames);
  }
}

TEST_CASE("synthetic: zero velocity gives identical frames") {
  SyntheticSpec spec;
  spec.width = 64;
  spec.height = 64;
  spec.num_frames = 5;
  auto seq = generate_synthetic(spec);
  for (const auto& f : seq) CHECK(f == seq[0]);
}

TEST_CASE("synthetic: integer velocity is a wrapped shift") {
  SyntheticSpec spec;
  spec.width = 64;
  spec.height = 32;
  spec.num_frames = 2;
  spec.vx = 2;
  auto seq = generate_synthetic(spec);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 64; ++x) CHECK(seq[1].at(x, y) == seq[0].at((x - 2 + 64) % 64, y));
}

TEST_CASE("synthetic: half-pel velocity equals bilinear resample of frame 0") {
  SyntheticSpec spec;
  spec.width = 48;
  spec.height = 32;
  spec.num_frames = 2;
  spec.vx = 1.5;
  auto seq = generate_synthetic(spec);
  // frame1(x) = frame0 at x - 1.5: equal weights on x-2 and x-1, halves round up.
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 48; ++x) {
      int a = seq[0].at((x - 2 + 48) % 48, y);
      int b = seq[0].at((x - 1 + 48) % 48, y);
      CHECK(seq[1].at(x, y) == (a + b + 1) / 2);
    }
}

TEST_CASE("synthetic: deterministic per seed, different across seeds") {
  SyntheticSpec spec;
  spec.width = 32;
  spec.height = 32;
  spec.num_frames = 3;
  spec.vx = 3;
  spec.occluder = Occluder{8, -1.0, 2.0};
  CHECK(generate_synthetic(spec) == generate_synthetic(spec));
  auto other = spec;
  other.texture_seed = 2;
  CHECK(generate_synthetic(spec) != generate_synthetic(other));
}

TEST_CASE("synthetic: texture spans the full range") {
  SyntheticSpec spec;
  spec.width = 64;
  spec.height = 64;
  spec.num_frames = 1;
  auto f = generate_synthetic(spec)[0];
  auto [lo, hi] = std::minmax_element(f.samples().begin(), f.samples().end());
  CHECK(*lo == 0);
  CHECK(*hi == 255);
}

TEST_CASE("synthetic: velocity bound") {
  SyntheticSpec spec;
  spec.width = 32;
  spec.height = 32;
  spec.vx = 9;
  CHECK_THROWS_AS(generate_synthetic(spec), DataError);
}

TEST_CASE("mse and psnr") {
  Frame a(16, 16, 100);
  Frame b(16, 16, 116);
  CHECK(mse(a, a) == 0.0);
  CHECK(psnr(a, a) == 99.0);
  CHECK(mse(a, b) == 256.0);
  CHECK(mse(b, a) == 256.0);
  CHECK(psnr(a, b) == doctest::Approx(24.048403955560610).epsilon(1e-12));
  CHECK_THROWS_AS(mse(a, Frame(32, 16)), DataError);
}

TEST_CASE("mse is symmetric and zero only for equal frames") {
  SyntheticSpec spec;
  spec.width = 32;
  spec.height = 32;
  spec.num_frames = 6;
  spec.vx = 0.75;
  auto seq = generate_synthetic(spec);
  for (std::size_t i = 0; i < seq.size(); ++i)
    for (std::size_t j = 0; j < seq.size(); ++j) {
      CHECK(mse(seq[i], seq[j]) == mse(seq[j], seq[i]));
      CHECK((mse(seq[i], seq[j]) == 0.0) == (seq[i] == seq[j]));
    }
}
