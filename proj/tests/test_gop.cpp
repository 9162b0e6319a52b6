#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "omra/error.hpp"
#include "omra/gop.hpp"

using namespace omra;

namespace {

const FrameSlot& slot_of(const std::vector<FrameSlot>& s, int poc) {
  return *std::find_if(s.begin(), s.end(), [poc](const FrameSlot& x) { return x.poc == poc; });
}

}  // namespace

TEST_CASE("five-frame training GOP") {
  auto s = build_schedule({4, 4, 5});
  REQUIRE(s.size() == 5);
  CHECK(s[0].poc == 0);
  CHECK(s[1].poc == 4);
  CHECK(s[0].is_intra());
  CHECK(s[1].is_intra());
  const auto& mid = slot_of(s, 2);
  CHECK(mid.temporal_layer == 1);
  CHECK(mid.ref_past == 0);
  CHECK(mid.ref_future == 4);
  CHECK(mid.k == 2);
  for (int poc : {1, 3}) {
    CHECK(slot_of(s, poc).temporal_layer == 2);
    CHECK(slot_of(s, poc).k == 1);
  }
}

TEST_CASE("33-frame GOP of 32") {
  GopConfig cfg{32, 32, 33};
  auto s = build_schedule(cfg);
  const auto& mid = slot_of(s, 16);
  CHECK(mid.temporal_layer == 1);
  CHECK(mid.ref_past == 0);
  CHECK(mid.ref_future == 32);
  CHECK(mid.k == 16);
  std::set<int> layers;
  for (const auto& x : s)
    if (!x.is_intra()) layers.insert(x.temporal_layer);
  CHECK(layers == std::set<int>{1, 2, 3, 4, 5});
  CHECK(num_b_layers(cfg) == 5);
}

TEST_CASE("97 frames, intra period 32") {
  auto s = build_schedule({32, 32, 97});
  std::vector<int> intras;
  for (const auto& x : s)
    if (x.is_intra()) intras.push_back(x.poc);
  std::sort(intras.begin(), intras.end());
  CHECK(intras == std::vector<int>{0, 32, 64, 96});
}

TEST_CASE("temporal_layer_of") {
  GopConfig cfg{32, 32, 33};
  CHECK(temporal_layer_of(16, cfg) == 1);
  CHECK(temporal_layer_of(1, cfg) == 5);
  CHECK(temporal_layer_of(0, cfg) == 0);
  CHECK_THROWS_AS(temporal_layer_of(33, cfg), DataError);
  CHECK_THROWS_AS(temporal_layer_of(-1, cfg), DataError);
}

TEST_CASE("invalid configurations") {
  CHECK_THROWS_AS(build_schedule({3, 3, 10}), DataError);
  CHECK_THROWS_AS(build_schedule({64, 64, 10}), DataError);
  CHECK_THROWS_AS(build_schedule({8, 12, 10}), DataError);
  CHECK_THROWS_AS(build_schedule({8, 8, 0}), DataError);
}

TEST_CASE("truncated tail keeps the equidistant B contract") {
  auto s = build_schedule({32, 32, 45});  // tail of 12 frames after poc 32
  for (const auto& x : s) {
    if (x.is_intra()) continue;
    CHECK(x.poc * 2 == x.ref_past + x.ref_future);
  }
  CHECK(slot_of(s, 44).is_intra());
}

TEST_CASE("exhaustive schedule scan up to 200 frames") {
  for (int gop : {2, 4, 8, 16, 32}) {
    for (int mult : {1, 2}) {
      for (int n = 1; n <= 200; ++n) {
        GopConfig cfg{gop, gop * mult, n};
        auto s = build_schedule(cfg);
        REQUIRE(s.size() == static_cast<std::size_t>(n));
        std::map<int, std::size_t> position;
        for (std::size_t i = 0; i < s.size(); ++i) position[s[i].poc] = i;
        // Permutation of 0..n-1.
        REQUIRE(position.size() == static_cast<std::size_t>(n));
        REQUIRE(position.begin()->first == 0);
        REQUIRE(position.rbegin()->first == n - 1);
        for (std::size_t i = 0; i < s.size(); ++i) {
          const auto& x = s[i];
          if (x.is_intra()) {
            REQUIRE(x.temporal_layer == 0);
            continue;
          }
          REQUIRE(x.ref_past < x.poc);
          REQUIRE(x.poc < x.ref_future);
          REQUIRE(x.poc * 2 == x.ref_past + x.ref_future);
          REQUIRE(x.k == x.poc - x.ref_past);
          REQUIRE(x.k == (x.ref_future - x.ref_past) / 2);
          REQUIRE(x.temporal_layer >= 1);
          REQUIRE(x.temporal_layer <= num_b_layers(cfg));
          REQUIRE((1 << (num_b_layers(cfg) - x.temporal_layer)) == x.k);
          // References precede the frame in coding order.
          REQUIRE(position[x.ref_past] < i);
          REQUIRE(position[x.ref_future] < i);
        }
      }
    }
  }
}

TEST_CASE("full GOP layer histogram") {
  for (int gop : {2, 4, 8, 16, 32}) {
    GopConfig cfg{gop, gop, gop + 1};
    std::map<int, int> hist;
    for (const auto& x : build_schedule(cfg))
      if (!x.is_intra()) ++hist[x.temporal_layer];
    CHECK(static_cast<int>(hist.size()) == num_b_layers(cfg));
    for (auto [layer, count] : hist) CHECK(count == (1 << (layer - 1)));
  }
}

TEST_CASE("schedule csv") {
  std::ostringstream out;
  write_schedule_csv(out, build_schedule({2, 2, 3}));
  CHECK(out.str() == "poc,kind,layer,ref_past,ref_future,k\n0,intra,0,-1,-1,0\n2,intra,0,-1,-1,0\n1,bframe,1,0,2,1\n");
}
