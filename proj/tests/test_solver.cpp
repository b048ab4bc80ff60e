#include "faster/solver.hpp"

#include "criteria.hpp"

#include <doctest.h>

#include <sstream>

using namespace faster;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

QpProblem scalar(double h, double g) {
  QpProblem p;
  p.H = MatrixXd::Constant(1, 1, h);
  p.g = VectorXd::Constant(1, g);
  p.Aeq = MatrixXd(0, 1);
  p.beq = VectorXd(0);
  p.Ain = MatrixXd(0, 1);
  p.bin = VectorXd(0);
  return p;
}

void collect(void* ctx, double bound, const std::vector<signed char>& fixed) {
  static_cast<std::vector<std::pair<double, std::vector<signed char>>>*>(ctx)->push_back({bound, fixed});
}

}  // namespace

TEST_CASE("solve_qp examples") {
  SUBCASE("min x^2 subject to x >= 1") {
    QpProblem p = scalar(2.0, 0.0);
    p.Ain = MatrixXd::Constant(1, 1, -1.0);
    p.bin = VectorXd::Constant(1, -1.0);
    const auto r = solve_qp(p);
    REQUIRE(r.ok());
    CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.objective == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.mu_in(0) == doctest::Approx(2.0));
  }
  SUBCASE("contradictory bounds") {
    QpProblem p = scalar(2.0, 0.0);
    p.Ain = MatrixXd(2, 1);
    p.Ain << 1, -1;
    p.bin = VectorXd(2);
    p.bin << 0, -1;
    CHECK(solve_qp(p).status == QpStatus::Infeasible);
  }
  SUBCASE("inconsistent shapes are rejected") {
    QpProblem p = scalar(2.0, 0.0);
    p.g = VectorXd::Zero(2);
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    gen::Rng rng(1);
    QpProblem q = gen::randomQp(rng, 3, 1, 1);
    q.H(0, 1) += 1.0;
    CHECK_THROWS_AS(q.validate(), std::invalid_argument);
  }
}

TEST_CASE("equality QPs match the closed-form KKT solve") {
  const auto t = criteria::qpEquality(50, 7);
  INFO("worst " << t.worst);
  CHECK(t.passed == t.total);
}

TEST_CASE("inequality QPs satisfy KKT") {
  const auto t = criteria::qpInequality(50, 8);
  INFO("worst " << t.worst);
  CHECK(t.passed == t.total);
  // The library's own residual report agrees with the recomputed one.
  gen::Rng rng(3);
  const auto p = gen::randomQp(rng, 6, 1, 10);
  const auto r = solve_qp(p);
  REQUIRE(r.ok());
  CHECK(kkt_residuals(p, r).max() == doctest::Approx(oracle::kkt(p, r.x, r.lambda_eq, r.mu_in).max()).epsilon(1e-6));
}

TEST_CASE("MIQP with a single polyhedron reduces to one QP") {
  gen::Rng rng(12);
  const auto inst = gen::randomMiqp(rng, 3, 1);
  const auto s = solve_miqp(inst.problem);
  REQUIRE(s.status == MiqpStatus::Optimal);
  for (auto v : s.values) CHECK(v == 1);
  const auto q = solve_qp(oracle::fixedQp(inst.problem, std::vector<std::uint8_t>(3, 1)));
  REQUIRE(q.ok());
  CHECK(s.objective == doctest::Approx(q.objective).epsilon(1e-9));
}

TEST_CASE("MIQP toy corridor matches enumeration") {
  gen::Rng rng(13);
  const auto inst = gen::randomMiqp(rng, 3, 2);
  const auto en = oracle::enumerate(inst.problem);
  const auto s = solve_miqp(inst.problem);
  REQUIRE(en.feasible);
  REQUIRE(s.status == MiqpStatus::Optimal);
  CHECK(s.objective == doctest::Approx(en.objective).epsilon(1e-6));
}

TEST_CASE("MIQP vs enumeration on random instances") {
  const auto t = criteria::miqpVsEnumeration(15, 14);
  INFO("worst " << t.worst << ", " << t.note);
  CHECK(t.passed == t.total);
}

TEST_CASE("MIQP with the final state outside every polyhedron is infeasible") {
  gen::Rng rng(15);
  auto inst = gen::randomMiqp(rng, 4, 2);
  inst.fc.position = Vec3(50, 0, 0);
  const auto p = build_miqp(inst.x0, inst.fc, inst.corridor, 4, inst.dt, inst.limits);
  const auto s = solve_miqp(p);
  CHECK(s.status == MiqpStatus::Infeasible);
  CHECK_FALSE(s.usable());
}

TEST_CASE("node relaxation bounds never exceed the subtree optimum") {
  gen::Rng rng(16);
  int nodes = 0;
  for (int trial = 0; trial < 4; ++trial) {
    const auto inst = gen::randomMiqp(rng, 4, 2);
    std::vector<std::pair<double, std::vector<signed char>>> seen;
    solve_miqp_observed(inst.problem, MiqpOptions{}, std::nullopt, collect, &seen);
    for (const auto& [bound, fixed] : seen) {
      const auto sub = oracle::enumerate(inst.problem, fixed);
      if (!sub.feasible) continue;
      ++nodes;
      CHECK(bound <= sub.objective + 1e-9 * std::max(1.0, std::abs(sub.objective)));
    }
  }
  CHECK(nodes > 0);
}

TEST_CASE("warm start changes the search but not the optimum") {
  gen::Rng rng(18);
  for (int trial = 0; trial < 8; ++trial) {
    const int N = gen::uniformInt(rng, 3, 4), P = gen::uniformInt(rng, 2, 3);
    const auto inst = gen::randomMiqp(rng, N, P);
    const auto cold = solve_miqp(inst.problem);
    std::vector<int> warm(static_cast<std::size_t>(N));
    for (auto& w : warm) w = gen::uniformInt(rng, 0, P - 1);
    const auto hot = solve_miqp(inst.problem, MiqpOptions{}, warm);
    CHECK(cold.status == hot.status);
    if (cold.status == MiqpStatus::Optimal)
      CHECK(hot.objective == doctest::Approx(cold.objective).epsilon(1e-9));
  }
}

TEST_CASE("MIQP determinism, budget and text round trip") {
  gen::Rng rng(19);
  const auto inst = gen::randomMiqp(rng, 4, 3);
  const auto a = solve_miqp(inst.problem);
  const auto b = solve_miqp(inst.problem);
  CHECK(a.nodes_explored == b.nodes_explored);
  CHECK(a.values == b.values);
  CHECK(a.x == b.x);

  MiqpOptions tight;
  tight.budget = 1;
  const auto t = solve_miqp(inst.problem, tight);
  CHECK(t.nodes_explored <= 1);
  CHECK(t.status != MiqpStatus::Optimal);

  std::stringstream ss;
  dump_miqp(inst.problem, ss);
  const MiqpProblem back = load_miqp(ss);
  CHECK(back.binaries() == inst.problem.binaries());
  CHECK(back.covers == inst.problem.covers);
  CHECK(back.base.H == inst.problem.base.H);
  CHECK(back.base.Ain == inst.problem.base.Ain);
  const auto c = solve_miqp(back);
  CHECK(c.objective == a.objective);
}
