#include "faster/replan.hpp"

#include "generators.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace faster;

namespace {

SlidingGrid openGrid() {
  SlidingGrid g(0.2, Index3(100, 100, 15), Vec3(0, 0, 1.5), 0.2 + std::sqrt(3.0) * 0.2);
  g.fill(VoxelState::FreeKnown);
  g.refreshDistances();
  return g;
}

JerkSpline constantVelocity(const Vec3& x0, const Vec3& v, int N, double dt) {
  State s = State::at(x0);
  s.v = v;
  return integrate_jerks(s, std::vector<Vec3>(static_cast<std::size_t>(N), Vec3::Zero()), dt, 0.0);
}

CommittedTrajectory moving() {
  CommittedTrajectory c;
  const JerkSpline s = constantVelocity(Vec3::Zero(), Vec3(1, 0.5, 0), 10, 0.2);
  c.pieces.push_back({s, 0.0, s.tEnd()});
  return c;
}

}  // namespace

TEST_CASE("select_A") {
  const CommittedTrajectory c = moving();
  SUBCASE("zero offset is the current reference") {
    const auto [A, t] = select_A(c, 0.7, 0.0);
    CHECK(t == doctest::Approx(0.7));
    CHECK((A.x - Vec3(0.7, 0.35, 0)).norm() <= 1e-12);
  }
  SUBCASE("past the end is the terminal stop state") {
    const auto [A, t] = select_A(c, 1.5, 5.0);
    CHECK(A.v.norm() == 0.0);
    CHECK(A.a.norm() == 0.0);
    CHECK((A.x - Vec3(2.0, 1.0, 0)).norm() <= 1e-12);
    (void)t;
  }
  SUBCASE("mid-trajectory equals direct sampling") {
    const auto [A, t] = select_A(c, 0.3, 0.45);
    const State s = sample(c.pieces[0].spline, 0.75);
    CHECK((A.x - s.x).norm() <= 1e-12);
    CHECK((A.v - s.v).norm() <= 1e-12);
    CHECK(t == doctest::Approx(0.75));
  }
}

TEST_CASE("project_goal") {
  const SlidingGrid g = openGrid();
  const Vec3 A = g.center();
  CHECK(project_goal(Vec3(3, 1, 1.5), A, g, 0.4) == Vec3(3, 1, 1.5));
  const Vec3 G = project_goal(Vec3(100, 0, 1.5), A, g, 0.4);
  CHECK(G.x() == doctest::Approx(g.extentMax().x() - 0.4));
  CHECK(G.y() == doctest::Approx(0.0));
  const Vec3 out(50, 50, 1.5);
  CHECK(project_goal(out, out, g, 0.4) == out);
}

TEST_CASE("select_R") {
  SUBCASE("no H: the end of Whole") {
    const JerkSpline w = constantVelocity(Vec3::Zero(), Vec3(2, 0, 0), 10, 0.1);
    CHECK(select_R(w, std::nullopt, 0, 5, 0.01).second == doctest::Approx(w.tEnd()));
  }
  SUBCASE("2 m/s towards H with a_max 5: admissible until |dx| reaches 0.4") {
    const JerkSpline w = constantVelocity(Vec3::Zero(), Vec3(2, 0, 0), 20, 0.1);
    const Vec3 H(2.5, 0.3, 0);
    const auto [R, t_R] = select_R(w, H, 1.25, 5.0, 0.01);
    // At t = 1 the gap is 0.5 > 4 / 10; the condition fails once 2.5 - 2t <= 0.4.
    CHECK(t_R >= 1.0);
    CHECK(t_R < 1.05);
    CHECK(t_R > 1.05 - 0.01 - 1e-9);
    CHECK(R.x.x() == doctest::Approx(2 * t_R));
  }
  SUBCASE("moving away from H: always admissible") {
    const JerkSpline w = constantVelocity(Vec3::Zero(), Vec3(-4, 0, 0), 10, 0.1);
    const auto [R, t_R] = select_R(w, Vec3(0.1, 0.1, 0), w.tEnd(), 5.0, 0.01);
    CHECK(t_R > w.tEnd() - 0.01 - 1e-9);
  }
  SUBCASE("at rest: admissible wherever the offset is nonzero") {
    const JerkSpline w = constantVelocity(Vec3::Zero(), Vec3::Zero(), 10, 0.1);
    CHECK(select_R(w, Vec3(0.5, -0.5, 0), w.tEnd(), 5.0, 0.01).second > w.tEnd() - 0.01 - 1e-9);
  }
}

TEST_CASE("replan_once: open space commits a safe stopping trajectory") {
  const SlidingGrid g = openGrid();
  PlannerConfig cfg;
  PlannerState ps;
  const Vec3 start(0, 0, 1.5), goal(6, 2, 1.5);
  const CommittedTrajectory prev = CommittedTrajectory::hold(start, 0.0);
  const ReplanOutcome out = replan_once(ps, g, prev, goal, 0.0, cfg, 1.0, 0.05);
  REQUIRE(out.committed);
  CHECK(out.reason == KeepReason::None);
  CHECK(ps.k == 1);
  const CommittedTrajectory& c = out.trajectory;
  // Contiguous pieces.
  for (std::size_t i = 1; i < c.pieces.size(); ++i) CHECK(c.pieces[i].begin == doctest::Approx(c.pieces[i - 1].end));
  // Ends stopped.
  const State end = sample(c.pieces.back().spline, c.pieces.back().end);
  CHECK(end.v.norm() <= 1e-6);
  CHECK(end.a.norm() <= 1e-6);
  // Collision-free against the map, checked at 1000 samples.
  for (int i = 0; i <= 1000; ++i) {
    const double t = c.tBegin() + (c.tEnd() - c.tBegin()) * i / 1000.0;
    CHECK(classify(g, c.sampleAt(t).x, true) == VoxelState::FreeKnown);
  }
  // Continuity wherever one piece hands over to the next.
  for (std::size_t i = 1; i < c.pieces.size(); ++i) {
    const State l = sample(c.pieces[i - 1].spline, c.pieces[i - 1].end);
    const State r = sample(c.pieces[i].spline, c.pieces[i].begin);
    CHECK((l.x - r.x).norm() <= 1e-6);
    CHECK((l.v - r.v).norm() <= 1e-6);
    CHECK((l.a - r.a).norm() <= 1e-6);
  }
}

TEST_CASE("replan_once: prefix to R avoids Unknown and the junction is smooth") {
  SlidingGrid g = openGrid();
  // Unknown beyond x = 3.
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.voxelCenter(g.unlinear(i)).x() > 3.0) g.set(i, VoxelState::Unknown);
  g.refreshDistances();
  PlannerConfig cfg;
  PlannerState ps;
  const Vec3 start(-2, 0, 1.5);
  CommittedTrajectory prev = CommittedTrajectory::hold(start, 0.0);
  const ReplanOutcome out = replan_once(ps, g, prev, Vec3(8, 0, 1.5), 0.0, cfg, 1.0, 0.05);
  REQUIRE(out.committed);
  REQUIRE(out.H.has_value());
  REQUIRE(out.safe.has_value());
  const CommittedTrajectory& c = out.trajectory;
  for (double t = c.t_A; t <= c.t_R; t += 0.005) CHECK(classify(g, c.sampleAt(t).x, true) != VoxelState::Unknown);
  for (double t = c.tBegin(); t <= c.tEnd(); t += 0.005)
    CHECK(classify(g, c.sampleAt(t).x, true) != VoxelState::OccupiedKnown);
  // The Safe piece starts exactly where Whole is cut.
  const State w = sample(*out.whole, c.t_R);
  const State s = sample(*out.safe, c.t_R);
  CHECK((w.x - s.x).norm() <= 1e-6);
  CHECK((w.v - s.v).norm() <= 1e-6);
  CHECK((w.a - s.a).norm() <= 1e-6);
  // Safe stays in known-free space.
  for (double t = out.safe->t0; t <= out.safe->tEnd(); t += 0.005)
    CHECK(classify(g, sample(*out.safe, t).x, true) == VoxelState::FreeKnown);
}

TEST_CASE("replan_once: a wall blocking everything keeps the previous plan") {
  SlidingGrid g = openGrid();
  for (std::size_t i = 0; i < g.size(); ++i)
    if (std::abs(g.voxelCenter(g.unlinear(i)).x() - 2.0) < 0.25) g.set(i, VoxelState::OccupiedKnown);
  g.refreshDistances();
  PlannerConfig cfg;
  PlannerState ps;
  const CommittedTrajectory prev = CommittedTrajectory::hold(Vec3(0, 0, 1.5), 0.0);
  const ReplanOutcome out = replan_once(ps, g, prev, Vec3(6, 0, 1.5), 0.0, cfg, 1.0, 0.05);
  CHECK_FALSE(out.committed);
  CHECK(out.reason == KeepReason::OptInfeasible);
  CHECK(ps.k == 0);
}

TEST_CASE("replan_once: zero time budget is overtime") {
  const SlidingGrid g = openGrid();
  PlannerConfig cfg;
  PlannerState ps;
  const CommittedTrajectory prev = CommittedTrajectory::hold(Vec3(0, 0, 1.5), 0.0);
  const ReplanOutcome out = replan_once(ps, g, prev, Vec3(6, 0, 1.5), 0.0, cfg, 0.0, 0.05);
  CHECK_FALSE(out.committed);
  CHECK(out.reason == KeepReason::Overtime);
  // Without an override the measured time is used.
  PlannerState ps2;
  CHECK(replan_once(ps2, g, prev, Vec3(6, 0, 1.5), 0.0, cfg, 0.0).reason == KeepReason::Overtime);
}

TEST_CASE("replan_once is deterministic") {
  const SlidingGrid g = openGrid();
  PlannerConfig cfg;
  PlannerState a, b;
  const CommittedTrajectory prev = CommittedTrajectory::hold(Vec3(0, 0, 1.5), 0.0);
  const auto x = replan_once(a, g, prev, Vec3(5, -3, 1.5), 0.0, cfg, 1.0, 0.05);
  const auto y = replan_once(b, g, prev, Vec3(5, -3, 1.5), 0.0, cfg, 1.0, 0.05);
  REQUIRE(x.committed);
  CHECK(x.trajectory.identical(y.trajectory));
  CHECK(x.nodes_whole == y.nodes_whole);
}

TEST_CASE("CommittedTrajectory helpers") {
  const CommittedTrajectory h = CommittedTrajectory::hold(Vec3(1, 2, 3), 4.0);
  CHECK(h.sampleAt(100).x == Vec3(1, 2, 3));
  CHECK(h.identical(h));
  const CommittedTrajectory c = moving();
  const CommittedTrajectory w = c.window(0.5, 10);
  CHECK(w.tBegin() == 0.5);
  CHECK(w.tEnd() == doctest::Approx(2.0));
  CHECK_FALSE(w.identical(c));
  const State past = c.sampleAt(10);
  CHECK(past.v.norm() == 0.0);
}

TEST_CASE("PlannerConfig validation") {
  PlannerConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.N_safe = 0;
  CHECK_THROWS(cfg.validate());
  cfg = PlannerConfig{};
  cfg.r_backoff_steps = -1;
  CHECK_THROWS(cfg.validate());
  cfg = PlannerConfig{};
  cfg.alpha = 0.5;
  CHECK_THROWS(cfg.validate());
}
