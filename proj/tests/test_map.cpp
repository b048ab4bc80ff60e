#include "faster/kernels.hpp"
#include "faster/map.hpp"

#include "generators.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <sstream>

using namespace faster;

namespace {

// 10 x 3 x 3 metre cells; voxel (0, 1, 1) is centred at (-4.5, 0, 0).
SlidingGrid lineGrid() { return SlidingGrid(1.0, Index3(10, 3, 3), Vec3::Zero(), 0.0); }

DepthScan singleRay(const Vec3& origin, const Vec3& dir, double range, bool hit) {
  DepthScan s;
  s.origin = origin;
  s.max_range = 20.0;
  s.rays.push_back({dir.normalized(), range, hit});
  return s;
}

std::vector<VoxelState> states(const SlidingGrid& g) {
  std::vector<VoxelState> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v[i] = g.at(i);
  return v;
}

DepthScan randomScan(gen::Rng& rng, const SlidingGrid& g, int rays) {
  DepthScan s;
  const Vec3 lo = g.origin(), hi = g.extentMax();
  s.origin = lo + (hi - lo).cwiseProduct(Vec3(gen::uniform(rng, 0.2, 0.8), gen::uniform(rng, 0.2, 0.8),
                                               gen::uniform(rng, 0.2, 0.8)));
  s.max_range = gen::uniform(rng, 3, 25);
  for (int i = 0; i < rays; ++i) {
    Vec3 d = gen::uniformVec(rng, -1, 1);
    if (d.norm() < 1e-3) d = Vec3::UnitX();
    const bool hit = gen::uniform(rng, 0, 1) < 0.6;
    s.rays.push_back({d.normalized(), hit ? gen::uniform(rng, 0.0, s.max_range) : s.max_range, hit});
  }
  return s;
}

}  // namespace

TEST_CASE("grid construction and indexing") {
  SlidingGrid g(0.5, Index3(4, 6, 8), Vec3(0.26, -0.1, 1.0), 0.3);
  CHECK(g.center().isApprox(Vec3(0.5, 0.0, 1.0)));
  CHECK(g.origin().isApprox(Vec3(-0.5, -1.5, -1.0)));
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g.linear(g.unlinear(i)) == i);
  CHECK(g.voxelOf(Vec3(-0.5, -1.5, -1.0)).value() == Index3(0, 0, 0));
  CHECK_FALSE(g.voxelOf(g.extentMax()).has_value());
  CHECK_THROWS_AS(SlidingGrid(0.0, Index3(1, 1, 1), Vec3::Zero(), 0), std::invalid_argument);
  CHECK_THROWS_AS(SlidingGrid(1.0, Index3(0, 1, 1), Vec3::Zero(), 0), std::invalid_argument);
  CHECK_THROWS_AS(SlidingGrid(1.0, Index3(1, 1, 1), Vec3::Zero(), -1), std::invalid_argument);
}

TEST_CASE("fuse_scan examples") {
  SUBCASE("empty scan leaves the grid Unknown") {
    SlidingGrid g = lineGrid();
    DepthScan s;
    s.origin = Vec3(-4.5, 0, 0);
    CHECK(fuse_scan(g, s));
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g.at(i) == VoxelState::Unknown);
  }
  SUBCASE("axis-aligned ray hitting at 5 voxels") {
    SlidingGrid g = lineGrid();
    REQUIRE(fuse_scan(g, singleRay(Vec3(-4.5, 0, 0), Vec3::UnitX(), 5.0, true)));
    for (int x = 0; x < 10; ++x) {
      const VoxelState want = x < 5 ? VoxelState::FreeKnown : (x == 5 ? VoxelState::OccupiedKnown : VoxelState::Unknown);
      CHECK(g.at(Index3(x, 1, 1)) == want);
    }
    int known = 0;
    for (std::size_t i = 0; i < g.size(); ++i) known += g.at(i) != VoxelState::Unknown;
    CHECK(known == 6);
  }
  SUBCASE("a later ray passing through a hit voxel does not free it") {
    SlidingGrid g = lineGrid();
    DepthScan s = singleRay(Vec3(-4.5, 0, 0), Vec3::UnitX(), 8.0, true);
    s.rays.push_back({Vec3::UnitX(), 3.0, true});
    REQUIRE(fuse_scan(g, s));
    CHECK(g.at(Index3(3, 1, 1)) == VoxelState::OccupiedKnown);
    CHECK(g.at(Index3(8, 1, 1)) == VoxelState::OccupiedKnown);
    CHECK(g.at(Index3(5, 1, 1)) == VoxelState::FreeKnown);
    // And across scans.
    REQUIRE(fuse_scan(g, singleRay(Vec3(-4.5, 0, 0), Vec3::UnitX(), 9.0, false)));
    CHECK(g.at(Index3(3, 1, 1)) == VoxelState::OccupiedKnown);
  }
  SUBCASE("sensor outside the extent is rejected") {
    SlidingGrid g = lineGrid();
    const auto before = states(g);
    CHECK_FALSE(fuse_scan(g, singleRay(Vec3(50, 0, 0), Vec3::UnitX(), 1.0, true)));
    CHECK(states(g) == before);
  }
}

TEST_CASE("fuse_scan matches the ray-marching oracle on random scans") {
  gen::Rng rng(1234);
  for (int trial = 0; trial < 100; ++trial) {
    SlidingGrid g(1.0, Index3(32, 32, 32), Vec3::Zero(), 0.0);
    auto expect = states(g);
    for (int k = 0; k < 2; ++k) {
      const DepthScan s = randomScan(rng, g, 40);
      expect = oracle::fuse(expect, g.dims(), g.resolution(), g.origin(), s);
      REQUIRE(fuse_scan(g, s));
    }
    REQUIRE(states(g) == expect);
  }
}

TEST_CASE("fusion is idempotent and keeps the label partition") {
  gen::Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    SlidingGrid g(0.5, Index3(24, 20, 16), Vec3::Zero(), 0.4);
    const DepthScan s = randomScan(rng, g, 60);
    fuse_scan(g, s);
    const auto once = states(g);
    fuse_scan(g, s);
    CHECK(states(g) == once);
    for (auto c : g.cells()) CHECK(c <= 2);
  }
}

TEST_CASE("recenter") {
  gen::Rng rng(5);
  SlidingGrid g(1.0, Index3(12, 10, 8), Vec3::Zero(), 0.0);
  for (int k = 0; k < 3; ++k) fuse_scan(g, randomScan(rng, g, 80));
  const SlidingGrid before = g;

  SUBCASE("same centre is the identity") {
    recenter(g, g.center());
    CHECK(g == before);
  }
  SUBCASE("shift by the full extent empties the grid") {
    recenter(g, g.center() + Vec3(12, 0, 0));
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g.at(i) == VoxelState::Unknown);
  }
  SUBCASE("one-voxel shift matches a world-coordinate lookup") {
    recenter(g, g.center() + Vec3(1, 0, 0));
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Vec3 c = g.voxelCenter(g.unlinear(i));
      const auto old = before.voxelOf(c);
      CHECK(g.at(i) == (old ? before.at(*old) : VoxelState::Unknown));
    }
  }
}

TEST_CASE("recenter soundness against a large static map") {
  gen::Rng rng(77);
  // The big map shares the lattice and covers every extent visited.
  SlidingGrid big(1.0, Index3(64, 64, 64), Vec3::Zero(), 0.0);
  auto world = states(big);
  SlidingGrid g(1.0, Index3(16, 16, 16), Vec3::Zero(), 0.0);
  for (int step = 0; step < 40; ++step) {
    const DepthScan s = randomScan(rng, g, 30);
    // Rays clipped to the small extent are a subset of the big map's rays.
    DepthScan clipped = s;
    fuse_scan(g, s);
    world = oracle::fuse(world, big.dims(), 1.0, big.origin(), clipped);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const VoxelState st = g.at(i);
      if (st == VoxelState::Unknown) continue;
      const Index3 w = big.voxelOf(g.voxelCenter(g.unlinear(i))).value();
      const VoxelState truth = world[big.linear(w)];
      CHECK(truth != VoxelState::Unknown);
      if (st == VoxelState::OccupiedKnown) CHECK(truth == VoxelState::OccupiedKnown);
    }
    recenter(g, g.center() + Vec3(gen::uniformInt(rng, -3, 3), gen::uniformInt(rng, -3, 3), gen::uniformInt(rng, -2, 2)));
  }
}

TEST_CASE("classify examples") {
  SlidingGrid g(0.2, Index3(40, 40, 10), Vec3::Zero(), 0.3);
  g.fill(VoxelState::FreeKnown);
  const Index3 occ(30, 20, 5);
  g.set(occ, VoxelState::OccupiedKnown);
  g.refreshDistances();
  CHECK(classify(g, Vec3(100, 0, 0), true) == VoxelState::Unknown);
  CHECK(classify(g, Vec3(100, 0, 0), false) == VoxelState::Unknown);
  // Free voxel centre, far from the occupied one and the boundary.
  const Vec3 far = g.voxelCenter(Index3(15, 20, 5));
  CHECK((far - g.voxelCenter(occ)).norm() >= 10 * 0.3);
  CHECK(classify(g, far, true) == VoxelState::FreeKnown);
  const Vec3 near = g.voxelCenter(occ) + Vec3(0, 0.9 * 0.3, 0).normalized() * 0.9 * 0.3;
  CHECK(classify(g, near, true) == VoxelState::OccupiedKnown);
  CHECK(classify(g, near, false) == VoxelState::FreeKnown);
  // Close to the boundary of the extent.
  CHECK(classify(g, g.origin() + Vec3(4.0, 4.0, 0.1), true) == VoxelState::Unknown);
  g.setInflationRadius(0.0);
  CHECK(classify(g, near, true) == VoxelState::FreeKnown);
}

TEST_CASE("classify matches the brute-force scan") {
  gen::Rng rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    SlidingGrid g = gen::randomTriGrid(rng, 12, 0.25, 0.05, 0.05, gen::uniform(rng, 0.0, 0.6));
    for (int k = 0; k < 300; ++k) {
      const Vec3 p = gen::uniformVec(rng, -1.7, 1.7);
      REQUIRE(classify(g, p, true) == oracle::classify(g, p));
    }
    // Voxel centres exercise the exact-distance ties.
    for (int k = 0; k < 100; ++k) {
      const Vec3 p = g.voxelCenter(Index3(gen::uniformInt(rng, 0, 11), gen::uniformInt(rng, 0, 11), gen::uniformInt(rng, 0, 11)));
      REQUIRE(classify(g, p, true) == oracle::classify(g, p));
    }
  }
}

TEST_CASE("classify refuses stale distance fields") {
  SlidingGrid g(1.0, Index3(4, 4, 4), Vec3::Zero(), 0.5);
  g.set(Index3(1, 1, 1), VoxelState::FreeKnown);
  CHECK_THROWS_AS(classify(g, Vec3::Zero(), true), std::logic_error);
}

TEST_CASE("nearest_cell") {
  SlidingGrid g(0.5, Index3(10, 10, 10), Vec3::Zero(), 0.0);
  CHECK_FALSE(nearest_cell(g, Vec3::Zero(), StateSet{VoxelState::OccupiedKnown}).has_value());
  g.fill(VoxelState::FreeKnown);
  const Index3 o(7, 2, 4);
  g.set(o, VoxelState::OccupiedKnown);
  g.refreshDistances();
  const Vec3 q(0.1, 0.2, -0.3);
  auto n = nearest_cell(g, q, StateSet{VoxelState::OccupiedKnown});
  REQUIRE(n);
  CHECK(n->position.isApprox(g.voxelCenter(o)));
  CHECK(n->distance == doctest::Approx((g.voxelCenter(o) - q).norm()).epsilon(1e-12));
  auto z = nearest_cell(g, g.voxelCenter(o), StateSet{VoxelState::OccupiedKnown});
  REQUIRE(z);
  CHECK(z->distance == 0.0);

  gen::Rng rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    SlidingGrid r = gen::randomTriGrid(rng, 10, 0.3, 0.03, 0.03, 0.0);
    for (int k = 0; k < 100; ++k) {
      const Vec3 p = gen::uniformVec(rng, -1.4, 1.4);
      double best = oracle::kInf;
      for (std::size_t i = 0; i < r.size(); ++i)
        if (r.at(i) == VoxelState::OccupiedKnown) best = std::min(best, (r.voxelCenter(r.unlinear(i)) - p).norm());
      auto got = nearest_cell(r, p, StateSet{VoxelState::OccupiedKnown});
      if (best == oracle::kInf) {
        CHECK_FALSE(got.has_value());
      } else {
        REQUIRE(got);
        CHECK(got->distance == doctest::Approx(best).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("distance_to_cells matches a brute-force box distance") {
  gen::Rng rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    SlidingGrid g = gen::randomTriGrid(rng, 10, 0.3, 0.04, 0.0, 0.0);
    g.setInflationRadius(0.0);
    for (int k = 0; k < 100; ++k) {
      const Vec3 p = gen::uniformVec(rng, -1.4, 1.4);
      double best = oracle::kInf;
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.at(i) != VoxelState::OccupiedKnown) continue;
        const Vec3 lo = g.origin() + g.unlinear(i).cast<double>() * g.resolution();
        const Vec3 hi = (lo.array() + g.resolution()).matrix();
        best = std::min(best, (p - p.cwiseMax(lo).cwiseMin(hi)).norm());
      }
      const double got = distance_to_cells(g, p, StateSet{VoxelState::OccupiedKnown}, false);
      if (best == oracle::kInf)
        CHECK(got == oracle::kInf);
      else
        CHECK(got == doctest::Approx(best).epsilon(1e-12));
    }
  }
}

TEST_CASE("markFreeSphere and fenceAltitude") {
  SlidingGrid g(0.5, Index3(10, 10, 10), Vec3::Zero(), 0.0);
  g.markFreeSphere(Vec3::Zero(), 0.9);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const bool in = g.voxelCenter(g.unlinear(i)).norm() <= 0.9;
    CHECK((g.at(i) == VoxelState::FreeKnown) == in);
  }
  g.fenceAltitude(-1.0, 1.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double z = g.voxelCenter(g.unlinear(i)).z();
    if (z < -1.0 || z > 1.0) CHECK(g.at(i) == VoxelState::OccupiedKnown);
    else CHECK(g.at(i) != VoxelState::OccupiedKnown);
  }
}

TEST_CASE("grid dump golden text and round trip") {
  SlidingGrid g(1.0, Index3(2, 2, 1), Vec3::Zero(), 0.0);
  g.set(Index3(0, 0, 0), VoxelState::FreeKnown);
  g.set(Index3(1, 0, 0), VoxelState::FreeKnown);
  g.set(Index3(1, 1, 0), VoxelState::OccupiedKnown);
  std::ostringstream out;
  dump_grid(g, out);
  std::istringstream golden(out.str());
  std::string header_and_runs;
  std::getline(golden, header_and_runs, '\0');
  CHECK(header_and_runs.find("1 2 2 1 0 0 0") == 0);
  CHECK(header_and_runs.find("2F 1U 1O") != std::string::npos);
  std::istringstream in(out.str());
  const SlidingGrid back = load_grid(in, 0.0);
  CHECK(back == g);

  gen::Rng rng(3);
  const SlidingGrid r = gen::randomTriGrid(rng, 9, 0.2, 0.3, 0.3, 0.1);
  std::stringstream ss;
  dump_grid(r, ss);
  CHECK(load_grid(ss, 0.1) == r);
}

TEST_CASE("distance transform: serial, parallel and brute force agree") {
  gen::Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const Index3 dims(gen::uniformInt(rng, 1, 9), gen::uniformInt(rng, 1, 9), gen::uniformInt(rng, 1, 9));
    std::vector<std::uint8_t> seed(static_cast<std::size_t>(dims.prod()));
    for (auto& s : seed) s = gen::uniform(rng, 0, 1) < 0.1;
    std::vector<double> a, b;
    kernels::squaredDistanceTransformSerial(seed, dims, a);
    kernels::squaredDistanceTransformParallel(seed, dims, b);
    CHECK(a == b);
    for (std::size_t i = 0; i < seed.size(); ++i) {
      const Index3 v(static_cast<int>(i % dims.x()), static_cast<int>((i / dims.x()) % dims.y()),
                     static_cast<int>(i / (dims.x() * dims.y())));
      double best = oracle::kInf;
      for (std::size_t j = 0; j < seed.size(); ++j) {
        if (!seed[j]) continue;
        const Index3 w(static_cast<int>(j % dims.x()), static_cast<int>((j / dims.x()) % dims.y()),
                       static_cast<int>(j / (dims.x() * dims.y())));
        best = std::min(best, static_cast<double>((v - w).squaredNorm()));
      }
      CHECK(a[i] == best);
    }
  }
}

TEST_CASE("Monte-Carlo counting: serial and parallel agree") {
  const auto pred = [](const Vec3& p) { return p.norm() < 1.0; };
  const Vec3 lo(-1, -1, -1), hi(1, 1, 1);
  const auto s = kernels::countSamples(lo, hi, 50000, 9, pred, kernels::Exec::Serial);
  const auto p = kernels::countSamples(lo, hi, 50000, 9, pred, kernels::Exec::Parallel);
  CHECK(s == p);
  CHECK(8.0 * static_cast<double>(s) / 50000.0 == doctest::Approx(4.18879).epsilon(0.02));
}
