#pragma once

#include "faster/decomp.hpp"
#include "faster/solver.hpp"
#include "faster/types.hpp"

#include <array>
#include <optional>
#include <vector>

namespace faster {

/// x(tau) = a tau^3 + b tau^2 + c tau + d per axis, tau in [0, dt].
struct Cubic {
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();
  Vec3 c = Vec3::Zero();
  Vec3 d = Vec3::Zero();

  Vec3 pos(double t) const { return ((a * t + b) * t + c) * t + d; }
  Vec3 vel(double t) const { return (3.0 * a * t + 2.0 * b) * t + c; }
  Vec3 acc(double t) const { return 6.0 * a * t + 2.0 * b; }
  Vec3 jerk() const { return 6.0 * a; }
};

struct JerkSpline {
  std::vector<Cubic> intervals;
  double dt = 0.0;
  double t0 = 0.0;

  int N() const { return static_cast<int>(intervals.size()); }
  double tEnd() const { return t0 + dt * N(); }
  double duration() const { return dt * N(); }
  /// Sum over intervals of |j_n|^2 dt.
  double jerkCost() const;
};

/// Builds the spline obtained by integrating constant jerks from `x0`.
JerkSpline integrate_jerks(const State& x0, const std::vector<Vec3>& jerks, double dt, double t0);

std::array<Vec3, 4> control_points(const Cubic& interval, double dt);

/// State at absolute time t. Outside the domain the nearest endpoint is used
/// and `clamped` (if given) is set.
State sample(const JerkSpline& spline, double t, bool* clamped = nullptr);

/// Largest |v|, |a| (per axis, at knots) and |j| over the spline.
struct LimitUsage {
  double v = 0.0;
  double a = 0.0;
  double j = 0.0;
  double v_between_knots = 0.0;
};
LimitUsage limit_usage(const JerkSpline& spline, int samples_per_interval = 20);

enum class FinalMode { FixedStop, FreeStop };

struct FinalCondition {
  FinalMode mode = FinalMode::FixedStop;
  Vec3 position = Vec3::Zero();

  static FinalCondition fixedStop(const Vec3& p) { return {FinalMode::FixedStop, p}; }
  static FinalCondition freeStop() { return {FinalMode::FreeStop, Vec3::Zero()}; }
};

/// Assembles the interval-allocation MIQP. Variables are the 3N jerks laid
/// out per axis (x jerks, then y, then z); states are eliminated by forward
/// integration. Binary id n*P + p ties interval n to polyhedron p.
MiqpProblem build_miqp(const State& x_init, const FinalCondition& final_condition, const Corridor& corridor, int N,
                       double dt, const Limits& limits);

/// Jerks (per interval) from a solution vector of build_miqp.
std::vector<Vec3> jerks_from_solution(const Eigen::VectorXd& x, int N);

/// f * max over axes of the constant-input times, divided by N. Each time
/// solves the motion from the initial state with v_max, a_max or j_max applied
/// towards the target.
double dt_lower_bound(const State& x_init, const Vec3& x_final_pos, const Limits& limits, int N, double f);

/// Rough time to bring the initial state to rest, per axis: null the
/// acceleration at j_max, then the velocity at a_max. Largest over axes.
double braking_time(const State& x_init, const Limits& limits);

struct LineSearchInput {
  State x_init;
  FinalCondition final_condition;
  const Corridor* corridor = nullptr;
  int N = 10;
  Limits limits;
  double t0 = 0.0;
  /// Position used by the dt heuristic.
  Vec3 dt_target = Vec3::Zero();
  MiqpOptions miqp;
  std::optional<std::vector<int>> warm;
  /// Floor on the horizon N * dt / f (0 = none).
  double min_horizon = 0.0;
};

struct LineSearchResult {
  JerkSpline spline;
  double f = 1.0;
  MiqpSolution solution;
  int trials = 0;
  double solve_ms = 0.0;
};

/// Lattice over f in [max(1, f_prev - gamma), f_prev + gamma_prime]; the
/// first factor with a usable MIQP solution wins.
std::vector<double> factor_lattice(double f_prev, double gamma, double gamma_prime, int n_steps = 6);
std::optional<LineSearchResult> line_search_solve(const LineSearchInput& in, double f_prev, double gamma,
                                                  double gamma_prime, int n_steps = 6);

}  // namespace faster
