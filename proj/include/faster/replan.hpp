#pragma once

#include "faster/decomp.hpp"
#include "faster/global_path.hpp"
#include "faster/map.hpp"
#include "faster/traj.hpp"

#include <optional>
#include <string>
#include <vector>

namespace faster {

struct PlannerConfig {
  double alpha = 1.25;
  double alpha0 = 15.0 * 3.14159265358979323846 / 180.0;
  double gamma = 0.5;
  double gamma_prime = 1.0;
  int line_search_steps = 6;
  double r = 8.0;
  double l_max = 4.0;
  int p_max = 2;
  int N_whole = 10;
  int N_safe = 7;
  Limits limits;
  double eps = 0.0;  // <= 0 means half the map resolution
  double goal_margin_voxels = 2.0;
  double local_box = 2.0;
  /// Extra clearance added to the map inflation for search and
  /// decomposition, so the seeds never sit on obstacle points.
  double planning_margin = 0.1;
  double dt0 = 0.1;
  int node_budget = 300;
  double goal_snap = 1.0;
  /// Alternative R rule: t_R = t_A + beta * previous replanning time.
  bool use_beta_rule = false;
  double beta = 1.5;
  /// When the Safe problem from R is infeasible, bisect [t_A, t_R] this many
  /// times for the latest feasible R (then try R = A).
  int r_backoff_steps = 3;
  /// Ablations.
  bool plan_in_unknown = true;
  bool use_safe = true;

  void validate() const;
  double epsFor(const SlidingGrid& grid) const { return eps > 0 ? eps : 0.5 * grid.resolution(); }
};

/// Executed trajectory: contiguous time windows over splines.
struct CommittedTrajectory {
  struct Piece {
    JerkSpline spline;
    double begin = 0.0;
    double end = 0.0;
  };
  std::vector<Piece> pieces;
  double t_A = 0.0;
  double t_R = 0.0;
  double t_F = 0.0;
  int k = 0;

  static CommittedTrajectory hold(const Vec3& position, double t);
  double tBegin() const { return pieces.front().begin; }
  double tEnd() const { return pieces.back().end; }
  /// State at t; past the end it is the terminal stop state (v = a = 0).
  State sampleAt(double t) const;
  /// Copy restricted to [t0, t1] (t1 clamped to the end).
  CommittedTrajectory window(double t0, double t1) const;
  bool identical(const CommittedTrajectory& other) const;
};

enum class KeepReason { None, OptInfeasible, PrefixHitsUnknown, Overtime };
const char* reasonName(KeepReason r);

struct StageTimings {
  double jps = 0.0;
  double decomp_whole = 0.0;
  double miqp_whole = 0.0;
  double decomp_safe = 0.0;
  double miqp_safe = 0.0;
  double total = 0.0;
};

/// Bookkeeping carried between replanning cycles.
struct PlannerState {
  int k = 0;
  double f_whole = 1.0;
  double f_safe = 1.0;
  double last_replan_time = -1.0;  // Delta t_{k-1}; < 0 before the first cycle
  std::optional<GridPath> prev_jps;
  std::optional<std::vector<int>> warm_whole;
  std::optional<std::vector<int>> warm_safe;
};

struct ReplanOutcome {
  bool committed = false;
  KeepReason reason = KeepReason::None;
  CommittedTrajectory trajectory;  // valid when committed
  StageTimings timings;
  double f_whole = 0.0;
  double f_safe = 0.0;
  double delta_t = 0.0;
  GridPath jps;
  GridPath jps_in;
  DirectionChoice direction;
  Corridor poly_whole;
  Corridor poly_safe;
  std::optional<JerkSpline> whole;
  std::optional<JerkSpline> safe;
  State A;
  Vec3 G = Vec3::Zero();
  std::optional<Vec3> H, R, E, F;
  double t_R = 0.0;
  /// Largest speed on the A->R piece of the new commitment.
  double speed_A_to_R = 0.0;
  int nodes_whole = 0;
  int nodes_safe = 0;
};

/// A = prev(now + delta_t), or the terminal stop state past its end.
std::pair<State, double> select_A(const CommittedTrajectory& prev, double now, double delta_t);

/// Projects G_term onto the extent along A -> G_term, pulled in by margin.
Vec3 project_goal(const Vec3& G_term, const Vec3& A, const SlidingGrid& grid, double margin);

/// Stopping-distance rule on x and y. `H` is the first Whole point in the
/// unknown space and `t_H` its time (ignored when H is empty).
std::pair<State, double> select_R(const JerkSpline& whole, const std::optional<Vec3>& H, double t_H, double a_max,
                                  double sample_step);

/// Runs one planning cycle. `elapsed_override` replaces the measured wall
/// time (fixed-latency simulation).
ReplanOutcome replan_once(PlannerState& state, const SlidingGrid& grid, const CommittedTrajectory& prev,
                          const Vec3& G_term, double now, const PlannerConfig& cfg, double time_budget,
                          std::optional<double> elapsed_override = std::nullopt);

}  // namespace faster
