#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "omra/cli.hpp"
#include "omra/error.hpp"

namespace fs = std::filesystem;
using omra::cli::run;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

class Scratch {
 public:
  explicit Scratch(const std::string& name) : dir_(fs::temp_directory_path() / ("omra_cli_" + name)) {
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  ~Scratch() { fs::remove_all(dir_); }
  std::string path(const std::string& f) const { return (dir_ / f).string(); }
  std::string write(const std::string& f, const std::string& text) const {
    std::ofstream(dir_ / f) << text;
    return path(f);
  }

 private:
  fs::path dir_;
};

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("help documents every flag") {
  const std::map<std::string, std::vector<std::string>> flags{
      {"gen", {"--spec", "--out", "--seed", "--config"}},
      {"label", {"--in", "--gop", "--intra", "--rates", "--out", "--search-range", "--block-size", "--half-pel"}},
      {"train",
       {"--dataset", "--mode", "--out", "--epochs", "--batch-size", "--lr", "--momentum", "--gamma", "--alpha",
        "--lambda-s", "--loss-log", "--seed"}},
      {"encode",
       {"--in", "--variant", "--max-layer", "--models", "--out", "--log", "--search-log", "--complexity",
        "--rdpoints", "--name", "--recon", "--gop", "--intra", "--q", "--lambda", "--rate-point"}},
      {"eval", {"--in", "--recon", "--out"}},
      {"bdrate", {"--anchor", "--test", "--anchor-variant", "--test-variant", "--csv"}},
      {"report", {"--logs", "--oracle", "--complexity", "--rdpoints", "--anchor", "--out"}},
  };
  for (const auto& [cmd, expected] : flags) {
    const auto r = call({cmd, "--help"});
    CHECK(r.code == 0);
    for (const auto& f : expected) {
      INFO(cmd << " " << f);
      CHECK(r.out.find(f + " ") != std::string::npos);
    }
  }
  CHECK(call({"--help"}).code == 0);
}

TEST_CASE("exit codes") {
  Scratch s("codes");
  CHECK(call({}).code == omra::cli::kUsage);
  CHECK(call({"frobnicate"}).code == omra::cli::kUsage);
  CHECK(call({"encode", "--bogus"}).code == omra::cli::kUsage);
  CHECK(call({"encode", "--variant", "co"}).code == omra::cli::kUsage);
  CHECK(call({"gen", "--spec", s.path("missing.spec"), "--out", s.path("x.yuv")}).code == omra::cli::kData);

  const std::string spec = s.write("a.spec", "width=32\nheight=32\nframes=5\nvx=1\n");
  REQUIRE(call({"gen", "--spec", spec, "--out", s.path("a.yuv")}).code == 0);
  // Classifier variants without models are a usage error.
  CHECK(call({"encode", "--in", s.path("a.yuv"), "--variant", "mu", "--gop", "4", "--intra", "4", "--out",
              s.path("a.bin")})
            .code == omra::cli::kUsage);
  CHECK(call({"encode", "--in", s.path("a.yuv"), "--variant", "fixed3", "--gop", "4", "--intra", "4", "--out",
              s.path("a.bin")})
            .code == omra::cli::kUsage);

  std::ofstream(s.path("broken.ds")) << "nope";
  CHECK(call({"train", "--dataset", s.path("broken.ds"), "--mode", "mu", "--out", s.path("m")}).code ==
        omra::cli::kData);
}

TEST_CASE("divergence exits with code 3") {
  Scratch s("diverge");
  const std::string spec = s.write("a.spec", "width=64\nheight=64\nframes=9\nvx=5\n");
  REQUIRE(call({"gen", "--spec", spec, "--out", s.path("a.yuv")}).code == 0);
  REQUIRE(call({"label", "--in", s.path("a.yuv"), "--gop", "8", "--intra", "8", "--rates", "16:1", "--out",
                s.path("d.ds")})
              .code == 0);
  const auto r = call({"train", "--dataset", s.path("d.ds"), "--mode", "mu", "--out", s.path("m"), "--lr", "1e200",
                       "--epochs", "3"});
  CHECK(r.code == omra::cli::kDivergence);
}

TEST_CASE("config file fills unset flags and flags win") {
  Scratch s("config");
  const std::string spec = s.write("a.spec", "width=32\nheight=32\nframes=5\nvx=1\n");
  REQUIRE(call({"gen", "--spec", spec, "--out", s.path("a.yuv")}).code == 0);
  const std::string cfg = s.write("enc.cfg", "# encode settings\nvariant=fixed8\ngop=4\nintra=4\nq=10\n");
  REQUIRE(call({"encode", "--config", cfg, "--in", s.path("a.yuv"), "--out", s.path("a.bin"), "--log",
                s.path("a.csv")})
              .code == 0);
  CHECK(slurp(s.path("a.csv")).find(",fixed8,") != std::string::npos);
  REQUIRE(call({"encode", "--config", cfg, "--variant", "fixed2", "--in", s.path("a.yuv"), "--out", s.path("b.bin"),
                "--log", s.path("b.csv")})
              .code == 0);
  CHECK(slurp(s.path("b.csv")).find(",fixed2,") != std::string::npos);

  const std::string bad = s.write("bad.cfg", "nonsense=1\n");
  CHECK(call({"encode", "--config", bad, "--in", s.path("a.yuv"), "--variant", "fixed1", "--out", s.path("c.bin")})
            .code == omra::cli::kUsage);
}

TEST_CASE("encode then eval on a static sequence") {
  Scratch s("static");
  const std::string spec = s.write("still.spec", "width=64\nheight=64\nframes=9\nvx=0\nvy=0\nseed=2\n");
  REQUIRE(call({"gen", "--spec", spec, "--out", s.path("still.yuv")}).code == 0);
  REQUIRE(call({"encode", "--in", s.path("still.yuv"), "--variant", "fixed1", "--gop", "8", "--intra", "8", "--q",
                "6", "--lambda", "6", "--out", s.path("s.bin")})
              .code == 0);
  const auto r = call({"eval", "--in", s.path("still.yuv"), "--recon", s.path("s.bin")});
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "poc,bits,mse,psnr");
  int frames = 0;
  bool summary = false;
  while (std::getline(lines, line)) {
    if (line.rfind("summary,", 0) == 0) {
      summary = true;
      CHECK(std::count(line.begin(), line.end(), ',') == 3);
    } else {
      ++frames;
    }
  }
  CHECK(frames == 9);
  CHECK(summary);
}

TEST_CASE("bdrate on identical curves prints 0.0") {
  Scratch s("bd");
  const std::string csv = s.write("rd.csv",
                                  "sequence,variant,q_step,bpp,psnr\n"
                                  "a,fixed1,24,0.1,30\na,fixed1,16,0.2,33\na,fixed1,10,0.4,36\na,fixed1,6,0.8,39\n");
  const auto r = call({"bdrate", "--anchor", csv, "--test", csv});
  CHECK(r.code == 0);
  CHECK(r.out == "0.0\n");
  const std::string bad = s.write("bad.csv", "sequence,variant,q_step,bpp,psnr\na,x,1,0.1,30\n");
  CHECK(call({"bdrate", "--anchor", csv, "--test", bad}).code == omra::cli::kData);
}

TEST_CASE("full pipeline runs and is deterministic") {
  Scratch s("pipeline");
  const std::string spec = s.write("fast.spec", "width=128\nheight=128\nframes=33\nvx=6\nvy=1\nseed=5\n");
  REQUIRE(call({"gen", "--spec", spec, "--out", s.path("fast.yuv")}).code == 0);
  REQUIRE(call({"label", "--in", s.path("fast.yuv"), "--gop", "32", "--intra", "32", "--rates", "16:1", "6:6",
                "--out", s.path("d.ds")})
              .code == 0);
  for (const char* model : {"m1", "m2"})
    REQUIRE(call({"train", "--dataset", s.path("d.ds"), "--mode", "mu", "--epochs", "2", "--seed", "9", "--out",
                  s.path(model)})
                .code == 0);
  CHECK(slurp(s.path("m1")) == slurp(s.path("m2")));

  for (const char* tag : {"a", "b"}) {
    const std::string t = tag;
    REQUIRE(call({"encode", "--in", s.path("fast.yuv"), "--variant", "co", "--models", s.path("m1"), "--out",
                  s.path(t + ".bin"), "--log", s.path(t + ".csv"), "--complexity", s.path(t + "_cx.csv")})
                .code == 0);
  }
  CHECK(slurp(s.path("a.bin")) == slurp(s.path("b.bin")));
  CHECK(slurp(s.path("a.csv")) == slurp(s.path("b.csv")));

  REQUIRE(call({"encode", "--in", s.path("fast.yuv"), "--variant", "exhaustive", "--out", s.path("ex.bin"), "--log",
                s.path("ex.csv")})
              .code == 0);
  const auto rep = call({"report", "--logs", s.path("a.csv"), "--oracle", s.path("ex.csv"), "--complexity",
                         s.path("a_cx.csv"), "--out", s.path("report")});
  CHECK(rep.code == 0);
  CHECK(fs::exists(s.path("report/confusion.csv")));
  CHECK(fs::exists(s.path("report/complexity.csv")));
  CHECK(rep.out.find("pred=1 set=") != std::string::npos);
}
