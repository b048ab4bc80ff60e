#include "faster/experiments.hpp"
#include "faster/sim.hpp"

#include "generators.hpp"

#include <doctest.h>

#include <numbers>

using namespace faster;

namespace {

Box boxAround(const Vec3& c, const Vec3& half) { return Box{c - half, c + half}; }

// Hollow cube of wall thickness 0.3 around `c` with inner half-size `h`.
std::vector<Box> shell(const Vec3& c, double h) {
  std::vector<Box> out;
  const double t = 0.3;
  for (int k = 0; k < 3; ++k)
    for (int s : {-1, 1}) {
      Vec3 half = Vec3::Constant(h + t);
      half[k] = t / 2;
      Vec3 centre = c;
      centre[k] += s * (h + t / 2);
      out.push_back(boxAround(centre, half));
    }
  return out;
}

const DepthScan::Ray& centralRay(const DepthScan& s, double yaw) {
  const Vec3 fwd(std::cos(yaw), std::sin(yaw), 0);
  const DepthScan::Ray* best = &s.rays.front();
  for (const auto& r : s.rays)
    if (r.direction.dot(fwd) > best->direction.dot(fwd)) best = &r;
  return *best;
}

}  // namespace

TEST_CASE("ray primitives") {
  const Box b{Vec3(2, -1, -1), Vec3(3, 1, 1)};
  CHECK(rayBox(b, Vec3::Zero(), Vec3::UnitX()).value() == doctest::Approx(2.0));
  CHECK_FALSE(rayBox(b, Vec3::Zero(), -Vec3::UnitX()).has_value());
  CHECK_FALSE(rayBox(b, Vec3::Zero(), Vec3::UnitY()).has_value());
  const Cylinder c{4, 0, 0.5};
  CHECK(rayCylinder(c, Vec3::Zero(), Vec3::UnitX()).value() == doctest::Approx(3.5));
  const Vec3 d = Vec3(1, 0.1, 0).normalized();
  // |o + t d - c|^2 = r^2 in the x-y plane.
  const double bq = -2 * 4 * d.x(), cq = 16 - 0.25, aq = d.x() * d.x() + d.y() * d.y();
  const double want = (-bq - std::sqrt(bq * bq - 4 * aq * cq)) / (2 * aq);
  CHECK(rayCylinder(c, Vec3::Zero(), d).value() == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("World clearance") {
  World w;
  w.boxes.push_back(Box{Vec3(1, -1, -1), Vec3(2, 1, 1)});
  w.cylinders.push_back(Cylinder{-3, 0, 0.5});
  CHECK(w.clearance(Vec3(0, 0, 0)) == doctest::Approx(1.0));
  CHECK(w.clearance(Vec3(1.5, 0, 0)) == 0.0);
  CHECK(w.clearance(Vec3(-3, 2, 0)) == doctest::Approx(1.5));
}

TEST_CASE("render_scan examples") {
  const SensorModel sensor;
  const Vec3 pose(0, 0, 1.5);
  SUBCASE("no obstacles: every ray misses") {
    const DepthScan s = render_scan(World{}, pose, 0.3, sensor);
    REQUIRE_FALSE(s.rays.empty());
    for (const auto& r : s.rays) CHECK_FALSE(r.hit);
  }
  SUBCASE("box 3 m ahead: central ray hits the near face") {
    World w;
    w.boxes.push_back(boxAround(Vec3(3.5, 0, 1.5), Vec3(0.5, 1, 1)));
    const DepthScan s = render_scan(w, pose, 0.0, sensor);
    const auto& r = centralRay(s, 0.0);
    REQUIRE(r.hit);
    CHECK(r.range == doctest::Approx(3.0 / r.direction.x()).epsilon(1e-12));
  }
  SUBCASE("obstacle behind the sensor is not seen") {
    World w;
    w.boxes.push_back(boxAround(Vec3(-3.5, 0, 1.5), Vec3(0.5, 1, 1)));
    for (const auto& r : render_scan(w, pose, 0.0, sensor).rays) CHECK_FALSE(r.hit);
  }
  SUBCASE("serial and parallel rendering agree") {
    const World f = make_forest(ForestParams{}, 5);
    const DepthScan a = render_scan(f, f.start, 0.4, sensor, kernels::Exec::Serial);
    const DepthScan b = render_scan(f, f.start, 0.4, sensor, kernels::Exec::Parallel);
    REQUIRE(a.rays.size() == b.rays.size());
    for (std::size_t i = 0; i < a.rays.size(); ++i) {
      CHECK(a.rays[i].hit == b.rays[i].hit);
      CHECK(a.rays[i].range == b.rays[i].range);
    }
  }
  SUBCASE("rays span the field of view") {
    const DepthScan s = render_scan(World{}, pose, 1.0, sensor);
    double lo = 10, hi = -10;
    for (const auto& r : s.rays) {
      const double a = std::remainder(std::atan2(r.direction.y(), r.direction.x()) - 1.0, 2 * std::numbers::pi);
      lo = std::min(lo, a);
      hi = std::max(hi, a);
    }
    CHECK(lo >= -sensor.horizontal_fov / 2 - 1e-9);
    CHECK(hi <= sensor.horizontal_fov / 2 + 1e-9);
  }
}

TEST_CASE("world generators") {
  const double infl = EpisodeConfig{}.inflationRadius();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const World f = make_forest(ForestParams{}, seed);
    CHECK(f.clearance(f.start) >= 2 * infl);
    CHECK(f.clearance(f.goal) >= 2 * infl);
    const World g = make_forest(ForestParams{}, seed);
    REQUIRE(g.cylinders.size() == f.cylinders.size());
    for (std::size_t i = 0; i < f.cylinders.size(); ++i) CHECK(g.cylinders[i].x == f.cylinders[i].x);
  }
  // Density: obstacles per square metre of the field.
  const World f = make_forest(ForestParams{}, 1);
  CHECK(static_cast<double>(f.cylinders.size()) / (25.0 * 25.0) == doctest::Approx(0.1).epsilon(0.1));
  const World c = make_corner(CornerParams{}, 2);
  REQUIRE(c.landmark.has_value());
  CHECK(c.clearance(c.start) >= 2 * infl);
  CHECK(c.clearance(c.goal) >= 2 * infl);
  const World b = make_bugtrap(BugtrapParams{});
  CHECK(b.clearance(b.start) >= 2 * infl);
  const World r = make_rooms(RoomsParams{}, 1);
  CHECK(r.clearance(r.goal) >= 2 * infl);
}

TEST_CASE("episode: empty world, goal 10 m away") {
  World w;
  w.start = Vec3(0, 0, 1.5);
  w.goal = Vec3(10, 0, 1.5);
  EpisodeConfig ep;
  ep.record_trajectory = true;
  std::vector<std::pair<double, Vec3>> planned;
  const auto m = run_episode(w, PlannerConfig{}, SensorModel{}, w.goal, ep,
                             [&](double t, const SlidingGrid&, const CommittedTrajectory& prev, const PlannerState&,
                                 const ReplanOutcome&) { planned.push_back({t, prev.sampleAt(t).x}); });
  CHECK(m.reached_goal);
  CHECK(m.collisions == 0);
  CHECK(m.distance >= 10.0 - 2 * 0.2);
  CHECK(m.distance <= 10.0 * 1.05);
  // Perfect tracking: the vehicle sits on the active commitment.
  int matched = 0;
  for (const auto& [t, x] : planned)
    for (const auto& s : m.trajectory)
      if (std::abs(s.t - t) < 1e-9) {
        CHECK((s.s.x - x).norm() <= 1e-9);
        ++matched;
      }
  CHECK(matched > 0);
}

TEST_CASE("episode: goal sealed inside a box") {
  World w;
  w.start = Vec3(0, 0, 1.5);
  w.goal = Vec3(6, 0, 1.5);
  w.boxes = shell(w.goal, 1.5);
  EpisodeConfig ep;
  ep.max_time = 12;
  const auto m = run_episode(w, PlannerConfig{}, SensorModel{}, w.goal, ep);
  CHECK_FALSE(m.reached_goal);
  CHECK(m.collisions == 0);
  CHECK(m.min_true_clearance >= 0);
}

TEST_CASE("episode determinism and fallback closure") {
  Scenario sc;
  sc.episode.record_trajectory = true;
  const World w = sc.makeWorld(3);
  std::optional<CommittedTrajectory> kept;
  int keeps = 0, checked = 0;
  const auto hook = [&](double, const SlidingGrid&, const CommittedTrajectory& prev, const PlannerState&,
                        const ReplanOutcome& out) {
    if (kept) {
      CHECK(prev.identical(*kept));
      ++checked;
    }
    kept.reset();
    if (!out.committed) {
      ++keeps;
      kept = prev;
    }
  };
  const auto a = run_episode(w, sc.planner, sc.sensor, w.goal, sc.episode, hook);
  const auto b = run_episode(w, sc.planner, sc.sensor, w.goal, sc.episode);
  CHECK(a.reached_goal == b.reached_goal);
  CHECK(a.flight_time == b.flight_time);
  CHECK(a.distance == b.distance);
  CHECK(a.max_speed == b.max_speed);
  CHECK(a.cycles == b.cycles);
  CHECK(a.commits == b.commits);
  REQUIRE(a.trajectory.size() == b.trajectory.size());
  for (std::size_t i = 0; i < a.trajectory.size(); ++i) CHECK(a.trajectory[i].s.x == b.trajectory[i].s.x);
  CHECK(a.collisions == 0);
  INFO("keeps " << keeps);
  CHECK(checked == keeps - (kept ? 1 : 0));
}

TEST_CASE("configuration validation") {
  EpisodeConfig ep;
  CHECK(ep.inflationRadius() == doctest::Approx(0.2 + std::sqrt(3.0) * 0.2));
  ep.sim_step = 0;
  CHECK_THROWS(ep.validate());
  SensorModel s;
  s.horizontal_fov = 4.0;
  CHECK_THROWS(s.validate());
  s = SensorModel{};
  s.range = 0;
  CHECK_THROWS(s.validate());
}
