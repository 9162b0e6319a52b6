#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "omra/error.hpp"
#include "omra/eval.hpp"
#include "omra/random.hpp"
#include "support.hpp"

using namespace omra;
using omra::testing::moving;

namespace {

RdCurve curve(std::vector<double> rates, std::vector<double> psnrs) {
  RdCurve c;
  for (std::size_t i = 0; i < rates.size(); ++i) c.points.push_back({rates[i], psnrs[i]});
  return c;
}

// Samples both interpolants on a fine grid and integrates with the trapezoid rule.
double trapezoid_bd_rate(const RdCurve& anchor, const RdCurve& test, int samples) {
  auto interp = [](const RdCurve& c) {
    std::vector<double> q, r;
    for (const auto& p : sorted_by_rate(c).points) {
      q.push_back(p.quality);
      r.push_back(std::log10(p.rate));
    }
    return Pchip(q, r);
  };
  const Pchip a = interp(anchor), t = interp(test);
  double lo = std::max(anchor.points.front().quality, test.points.front().quality);
  double hi = std::min(anchor.points.back().quality, test.points.back().quality);
  const double h = (hi - lo) / samples;
  double sum = 0.0;
  for (int i = 0; i <= samples; ++i) {
    const double x = lo + i * h;
    const double w = (i == 0 || i == samples) ? 0.5 : 1.0;
    sum += w * (t(x) - a(x));
  }
  return (std::pow(10.0, sum * h / (hi - lo)) - 1.0) * 100.0;
}

RdCurve random_curve(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> step_r(0.3, 1.0), step_q(0.5, 4.0);
  RdCurve c;
  double r = std::uniform_real_distribution<double>(0.02, 0.1)(rng);
  double q = std::uniform_real_distribution<double>(26, 32)(rng);
  for (int i = 0; i < 4; ++i) {
    c.points.push_back({r, q});
    r *= 1.0 + step_r(rng);
    q += step_q(rng);
  }
  return c;
}

}  // namespace

TEST_CASE("pchip matches reference values") {
  // Frozen from an independent monotone Hermite implementation.
  std::vector<double> x{30, 33, 35.5, 38};
  std::vector<double> y{std::log10(0.05), std::log10(0.11), std::log10(0.2), std::log10(0.42)};
  Pchip p(x, y);
  CHECK(p(31.7) == doctest::Approx(-1.1028864399528204).epsilon(1e-12));
  CHECK(p(37.2) == doctest::Approx(-0.4869041519688006).epsilon(1e-12));
  CHECK(p.integral(30, 38) == doctest::Approx(-6.8148004080907452).epsilon(1e-12));
  CHECK(p.integral(31, 36.5) == doctest::Approx(-4.8541104299843907).epsilon(1e-12));
  const std::vector<double> slopes{0.11975142237382007, 0.10859996199673483, 0.11502511144417173,
                                   0.14140411473920028};
  for (int i = 0; i < 4; ++i) CHECK(p.slopes()[i] == doctest::Approx(slopes[i]).epsilon(1e-12));
  for (int i = 0; i < 4; ++i) CHECK(p(x[i]) == doctest::Approx(y[i]).epsilon(1e-14));
}

TEST_CASE("pchip stays monotone between monotone nodes") {
  Pchip p({0, 1, 2, 3, 4}, {0, 0.1, 5, 5.1, 9});
  double prev = p(0);
  for (int i = 1; i <= 400; ++i) {
    const double v = p(i * 0.01);
    CHECK(v >= prev - 1e-12);
    prev = v;
  }
  CHECK(p.integral(1, 3) == doctest::Approx(p.integral(1, 2) + p.integral(2, 3)));
  CHECK(p.integral(3, 1) == doctest::Approx(-p.integral(1, 3)));
}

TEST_CASE("bd_rate basic identities") {
  const RdCurve a = curve({0.05, 0.11, 0.2, 0.42}, {30, 33, 35.5, 38});
  CHECK(bd_rate(a, a) == 0.0);
  CHECK(format_percent(bd_rate(a, a)) == "0.0");

  RdCurve halved = a;
  for (auto& p : halved.points) p.rate *= 0.5;
  CHECK(bd_rate(a, halved) == doctest::Approx(-50.0).epsilon(1e-12));
  CHECK(bd_rate(halved, a) == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(format_percent(-50.0) == "-50.0");
  CHECK(format_percent(-12.34567) == "-12.3457");

  // Frozen from the same reference interpolant.
  const RdCurve b = curve({0.04, 0.1, 0.24, 0.5}, {29, 32, 36, 39});
  CHECK(bd_rate(a, b) == doctest::Approx(9.421620266201991).epsilon(1e-10));
}

TEST_CASE("bd_rate agrees with trapezoid re-integration") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 10; ++i) {
    RdCurve a = random_curve(rng);
    RdCurve b = a;
    std::uniform_real_distribution<double> f(0.6, 1.3), dq(-1.0, 1.0);
    for (auto& p : b.points) {
      p.rate *= f(rng);
      p.quality += dq(rng);
    }
    b = sorted_by_rate(b);
    try {
      validate(b);
    } catch (const DataError&) {
      b = a;
      for (auto& p : b.points) p.rate *= 0.8;
    }
    const double analytic = bd_rate(a, b);
    const double numeric = trapezoid_bd_rate(a, b, 1000);
    CHECK(std::abs(analytic - numeric) <= 0.001 * std::max(1.0, std::abs(numeric)));
  }
}

TEST_CASE("bd_rate rejects bad curves") {
  const RdCurve a = curve({0.05, 0.11, 0.2, 0.42}, {30, 33, 35.5, 38});
  CHECK_THROWS_AS(bd_rate(a, curve({0.1, 0.2, 0.3}, {30, 31, 32})), DataError);
  CHECK_THROWS_AS(bd_rate(a, curve({0.1, 0.2, 0.3, 0.4}, {30, 32, 31, 33})), DataError);
  CHECK_THROWS_AS(bd_rate(a, curve({0.1, 0.2, 0.3, 0.4}, {40, 41, 42, 43})), DataError);
  CHECK_THROWS_AS(bd_rate(a, curve({0.0, 0.2, 0.3, 0.4}, {30, 31, 32, 33})), DataError);
}

TEST_CASE("confusion counts and conditionals") {
  std::vector<std::pair<int, int>> pairs{{1, 1}, {1, 2}, {1, 2}, {1, 2}};
  const auto m = confusion(pairs);
  const auto cond = m.conditionals();
  REQUIRE(cond[0]);
  CHECK((*cond[0])[1] == 0.75);
  CHECK(!cond[1]);

  std::vector<std::pair<int, int>> perfect{{1, 1}, {2, 2}, {4, 4}, {8, 8}, {8, 8}};
  const auto pc = confusion(perfect).conditionals();
  for (int r = 0; r < kNumFactors; ++r) {
    REQUIRE(pc[r]);
    double sum = 0;
    for (int c = 0; c < kNumFactors; ++c) sum += (*pc[r])[c];
    CHECK(std::abs(sum - 1.0) <= 1e-12);
    CHECK((*pc[r])[r] == 1.0);
  }

  std::vector<std::pair<int, int>> bad{{3, 1}};
  CHECK_THROWS_AS(confusion(bad), DataError);
  CHECK_THROWS_AS(confusion(std::span<const std::pair<int, int>>{}), DataError);
}

TEST_CASE("candidate sets from conditionals") {
  Conditionals c;
  c[0] = std::array<double, 4>{0.3125, 0.6875, 0, 0};
  c[1] = std::array<double, 4>{0, 0, 1, 0};
  c[2] = std::array<double, 4>{0.25, 0.25, 0.25, 0.25};
  const auto sets = derive_candidate_sets(c);
  CHECK(sets.at(1) == std::vector<int>{1, 2});
  CHECK(sets.at(2) == std::vector<int>{4});
  CHECK(sets.at(4) == std::vector<int>{1, 2});
  CHECK(sets.at(8) == std::vector<int>{8});

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Conditionals r;
    std::array<double, 4> row{};
    double sum = 0;
    for (auto& v : row) sum += (v = unit_uniform(rng));
    for (auto& v : row) v /= sum;
    r[trial % 4] = row;
    const auto s = derive_candidate_sets(r).at(kDownsampleFactors[trial % 4]);
    CHECK(s.size() <= 2);
    int better = 0;
    for (int j = 0; j < 4; ++j) better += row[j] > row[trial % 4];
    if (better < 2) CHECK(std::find(s.begin(), s.end(), kDownsampleFactors[trial % 4]) != s.end());
  }
}

TEST_CASE("temporal complexity") {
  Sequence still(3, Frame(32, 32, 90));
  CHECK(temporal_complexity(still) == 0.0);
  Sequence flicker{Frame(32, 32, 0), Frame(32, 32, 255), Frame(32, 32, 0)};
  CHECK(temporal_complexity(flicker) == 1.0);
  CHECK(temporal_complexity(moving(64, 64, 5, 1, 0, 3)) < temporal_complexity(moving(64, 64, 5, 4, 0, 3)));
  CHECK_THROWS_AS(temporal_complexity(Sequence{Frame(16, 16)}), DataError);
}

TEST_CASE("mac catalog examples") {
  ComplexityLedger l;
  l.add({MacKind::BilinearWarp, 64 * 64});
  CHECK(l.total() == 16384);
  ComplexityLedger s;
  s.add({MacKind::BlockSearch, 64, 8, 8});
  CHECK(s.total() == 1183744);
  CHECK(TinyCnn(CnnShape{3, 64, {16, 32, 64}, 4}).forward_macs() ==
        9 * 3 * 16 * 32 * 32 + 9 * 16 * 32 * 16 * 16 + 9 * 32 * 64 * 8 * 8 + 64 * 4);
}

TEST_CASE("sequence ledger is the sum of frame ledgers") {
  const Sequence seq = moving(64, 64, 9, 3, 1, 4);
  GopConfig gop{8, 8, 9};
  for (const char* name : {"fixed2", "memc", "exhaustive"}) {
    const auto r = encode_sequence(seq, gop, default_rate_ladder()[1], parse_variant(name));
    ComplexityLedger sum;
    for (const auto& f : r.frame_macs) sum += f;
    CHECK(sum == r.macs);
    CHECK(r.macs.pixels == 9u * 64 * 64);
    CHECK(r.macs.kmac_per_pixel() == doctest::Approx(r.macs.total() / (1000.0 * 64 * 64 * 9)));
  }
}

TEST_CASE("quality evaluation agrees between container and result") {
  const Sequence seq = moving(64, 64, 9, 2, 0, 8);
  GopConfig gop{8, 8, 9};
  const auto r = encode_sequence(seq, gop, default_rate_ladder()[2], parse_variant("memc"));
  const auto a = evaluate_result(seq, r);
  const auto b = evaluate_container(seq, r.container);
  REQUIRE(a.frames.size() == 9);
  for (std::size_t i = 0; i < 9; ++i) {
    CHECK(a.frames[i].bits == b.frames[i].bits);
    CHECK(a.frames[i].mse == b.frames[i].mse);
  }
  CHECK(a.bpp == b.bpp);
  CHECK(a.psnr == doctest::Approx(psnr_from_mse(a.mse)));
  std::ostringstream out;
  write_quality_csv(out, a);
  CHECK(out.str().rfind("poc,bits,mse,psnr\n", 0) == 0);
  CHECK(out.str().find("summary,") != std::string::npos);
}

TEST_CASE("ladder curve and report csv round trips") {
  const Sequence seq = moving(64, 64, 5, 1, 1, 2);
  GopConfig gop{4, 4, 5};
  const auto ladder = default_rate_ladder();
  const auto run = run_ladder(seq, gop, ladder, parse_variant("fixed1"));
  REQUIRE(run.curve.points.size() == ladder.size());
  CHECK_NOTHROW(validate(run.curve));

  std::vector<RdRow> rows;
  for (std::size_t i = 0; i < ladder.size(); ++i)
    rows.push_back({"seq", "fixed1", ladder[i].q_step, run.curve.points[i].rate, run.curve.points[i].quality});
  std::stringstream rd;
  write_rdpoints(rd, rows);
  const auto back = read_rdpoints(rd);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].bpp == rows[i].bpp);
    CHECK(back[i].psnr == rows[i].psnr);
  }
  const auto curves = curves_by_key(back);
  CHECK(bd_rate(curves.at({"seq", "fixed1"}), run.curve) == 0.0);

  std::vector<std::pair<std::string, ComplexityLedger>> cx{{"fixed1", run.macs}};
  std::stringstream cs;
  write_complexity_csv(cs, cx);
  const auto cback = read_complexity_csv(cs);
  REQUIRE(cback.size() == 1);
  CHECK(cback[0].second.macs == run.macs.macs);
  CHECK(cback[0].second.pixels == run.macs.pixels);

  std::istringstream bad("variant,category,macs,kmac_per_pixel\nx,nonsense,1,0\n");
  CHECK_THROWS_AS(read_complexity_csv(bad), DataError);
}
