#include "faster/replan.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace faster {

namespace {

using Clock = std::chrono::steady_clock;

double msSince(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct TimedPolyline {
  GridPath path;
  std::vector<double> times;
};

// Samples a spline over [t0, t1] so that consecutive points are at most
// `chord` apart.
TimedPolyline densify(const JerkSpline& s, double t0, double t1, double chord) {
  TimedPolyline out;
  const double vmax = std::max(1e-3, std::sqrt(3.0) * limit_usage(s, 10).v_between_knots);
  const double step = std::max(1e-4, std::min(s.dt / 10.0, chord / vmax));
  for (double t = t0;; t += step) {
    const double tt = std::min(t, t1);
    out.path.vertices.push_back(sample(s, tt).x);
    out.times.push_back(tt);
    if (tt >= t1) break;
  }
  if (out.path.size() == 1) {
    out.path.vertices.push_back(out.path.vertices.front());
    out.times.push_back(t1);
  }
  return out;
}

// Time at which a point found on the polyline is reached.
double timeOfPoint(const TimedPolyline& poly, const Vec3& p) {
  const auto& v = poly.path.vertices;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    const Vec3 d = v[i + 1] - v[i];
    const double len2 = d.squaredNorm();
    const double t = len2 > 0 ? std::clamp((p - v[i]).dot(d) / len2, 0.0, 1.0) : 0.0;
    if ((v[i] + t * d - p).norm() <= 1e-9) return poly.times[i] + t * (poly.times[i + 1] - poly.times[i]);
  }
  return poly.times.front();
}

bool segmentFree(const SlidingGrid& grid, const Vec3& a, const Vec3& b) {
  const double step = 0.25 * grid.resolution();
  const int n = std::max(1, static_cast<int>(std::ceil((b - a).norm() / step)));
  for (int i = 0; i <= n; ++i)
    if (classify(grid, a + (b - a) * (static_cast<double>(i) / n), true) != VoxelState::FreeKnown) return false;
  return true;
}

// Farthest sample of a -> b reached before leaving known-free space
// (a itself when the first step already leaves it).
Vec3 lastFreeAlong(const SlidingGrid& grid, const Vec3& a, const Vec3& b) {
  const double step = 0.25 * grid.resolution();
  const int n = std::max(1, static_cast<int>(std::ceil((b - a).norm() / step)));
  Vec3 last = a;
  for (int i = 1; i <= n; ++i) {
    const Vec3 p = a + (b - a) * (static_cast<double>(i) / n);
    if (classify(grid, p, true) != VoxelState::FreeKnown) break;
    last = p;
  }
  return last;
}

// Seed path for the safe corridor: R, then the known-free part of JPS_in
// beyond R's projection while it stays collision-free, ending at the last
// free point of the first blocked segment.
GridPath safeSeed(const SlidingGrid& plan_grid, const GridPath& jps_in, const Vec3& R, double eps) {
  GridPath free = jps_in;
  if (auto hit = find_intersection(jps_in, plan_grid, {VoxelState::Unknown, VoxelState::OccupiedKnown}, eps, true)) {
    GridPath cut;
    const auto& v = jps_in.vertices;
    cut.vertices.push_back(v.front());
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
      const Vec3 d = v[i + 1] - v[i];
      const double len2 = d.squaredNorm();
      const double t = len2 > 0 ? std::clamp((*hit - v[i]).dot(d) / len2, 0.0, 1.0) : 0.0;
      if ((v[i] + t * d - *hit).norm() <= 1e-9) {
        cut.vertices.push_back(*hit);
        break;
      }
      cut.vertices.push_back(v[i + 1]);
    }
    free = simplify(cut);
  }
  GridPath seed{{R}};
  const double remaining = free.lengthFrom(R);
  const double total = free.length();
  const double s_R = total - remaining;
  double arc = 0.0;
  for (std::size_t i = 1; i < free.size(); ++i) {
    arc += (free.vertices[i] - free.vertices[i - 1]).norm();
    if (arc <= s_R + 1e-9) continue;
    if (!segmentFree(plan_grid, seed.back(), free.vertices[i])) {
      const Vec3 p = lastFreeAlong(plan_grid, seed.back(), free.vertices[i]);
      if ((p - seed.back()).norm() > 1e-9) seed.vertices.push_back(p);
      break;
    }
    seed.vertices.push_back(free.vertices[i]);
  }
  seed = simplify(seed);
  return seed;
}

bool samplesAvoid(const SlidingGrid& grid, const JerkSpline& s, double t0, double t1, StateSet bad) {
  const TimedPolyline p = densify(s, t0, t1, 0.25 * grid.resolution());
  for (const Vec3& x : p.path.vertices)
    if (bad.contains(classify(grid, x, true))) return false;
  return true;
}

JerkSpline holdSpline(const Vec3& x, double t0) {
  return integrate_jerks(State::at(x), {Vec3::Zero()}, 1e-3, t0);
}

}  // namespace

void PlannerConfig::validate() const {
  if (!(alpha >= 1.0)) throw std::invalid_argument("planner: alpha must be >= 1");
  if (!(r > 0)) throw std::invalid_argument("planner: r must be positive");
  if (p_max < 1) throw std::invalid_argument("planner: p_max must be >= 1");
  if (N_whole < 1 || N_safe < 1) throw std::invalid_argument("planner: N must be >= 1");
  if (!(l_max > 0)) throw std::invalid_argument("planner: l_max must be positive");
  if (gamma < 0 || gamma_prime < 0) throw std::invalid_argument("planner: gamma spans must be >= 0");
  if (!(dt0 > 0)) throw std::invalid_argument("planner: dt0 must be positive");
  if (node_budget < 1) throw std::invalid_argument("planner: node budget must be >= 1");
  if (beta < 1.0) throw std::invalid_argument("planner: beta must be >= 1");
  if (r_backoff_steps < 0) throw std::invalid_argument("planner: r_backoff_steps must be >= 0");
  limits.validate();
}

const char* reasonName(KeepReason r) {
  switch (r) {
    case KeepReason::None:
      return "commit";
    case KeepReason::OptInfeasible:
      return "opt_infeasible";
    case KeepReason::PrefixHitsUnknown:
      return "prefix_hits_unknown";
    case KeepReason::Overtime:
      return "overtime";
  }
  return "?";
}

CommittedTrajectory CommittedTrajectory::hold(const Vec3& position, double t) {
  CommittedTrajectory c;
  c.pieces.push_back(Piece{holdSpline(position, t), t, t});
  c.t_A = c.t_R = c.t_F = t;
  return c;
}

State CommittedTrajectory::sampleAt(double t) const {
  if (pieces.empty()) throw std::logic_error("committed trajectory is empty");
  if (t >= tEnd()) {
    const Piece& last = pieces.back();
    return State::at(sample(last.spline, last.end).x);
  }
  if (t <= tBegin()) return sample(pieces.front().spline, pieces.front().begin);
  for (const Piece& p : pieces)
    if (t <= p.end) return sample(p.spline, t);
  return sample(pieces.back().spline, t);
}

CommittedTrajectory CommittedTrajectory::window(double t0, double t1) const {
  CommittedTrajectory out = *this;
  out.pieces.clear();
  t1 = std::min(t1, tEnd());
  for (const Piece& p : pieces) {
    const double b = std::max(p.begin, t0), e = std::min(p.end, t1);
    if (e > b) out.pieces.push_back(Piece{p.spline, b, e});
  }
  return out;
}

bool CommittedTrajectory::identical(const CommittedTrajectory& o) const {
  if (pieces.size() != o.pieces.size() || t_A != o.t_A || t_R != o.t_R || t_F != o.t_F || k != o.k) return false;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const Piece &a = pieces[i], &b = o.pieces[i];
    if (a.begin != b.begin || a.end != b.end || a.spline.dt != b.spline.dt || a.spline.t0 != b.spline.t0 ||
        a.spline.N() != b.spline.N())
      return false;
    for (int n = 0; n < a.spline.N(); ++n) {
      const Cubic &x = a.spline.intervals[static_cast<std::size_t>(n)], &y = b.spline.intervals[static_cast<std::size_t>(n)];
      if (x.a != y.a || x.b != y.b || x.c != y.c || x.d != y.d) return false;
    }
  }
  return true;
}

std::pair<State, double> select_A(const CommittedTrajectory& prev, double now, double delta_t) {
  const double t = now + std::max(0.0, delta_t);
  return {prev.sampleAt(t), t};
}

Vec3 project_goal(const Vec3& G_term, const Vec3& A, const SlidingGrid& grid, double margin) {
  if (grid.contains(G_term)) return G_term;
  const Vec3 d = G_term - A;
  if (d.norm() == 0.0) return A;
  const Vec3 lo = grid.origin().array() + margin, hi = grid.extentMax().array() - margin;
  // Largest s in [0, 1] keeping A + s d inside the shrunk box.
  double s = 1.0;
  for (int k = 0; k < 3; ++k) {
    if (d[k] > 0) s = std::min(s, (hi[k] - A[k]) / d[k]);
    if (d[k] < 0) s = std::min(s, (lo[k] - A[k]) / d[k]);
  }
  return A + std::max(0.0, s) * d;
}

std::pair<State, double> select_R(const JerkSpline& whole, const std::optional<Vec3>& H, double t_H, double a_max,
                                  double sample_step) {
  if (!H) return {sample(whole, whole.tEnd()), whole.tEnd()};
  if (!(sample_step > 0)) throw std::invalid_argument("select_R: sample step must be positive");
  std::pair<State, double> best{sample(whole, whole.t0), whole.t0};
  const double t_end = std::min(t_H, whole.tEnd());
  for (double t = whole.t0; t < t_end; t += sample_step) {
    const State s = sample(whole, t);
    bool ok = true;
    for (int j = 0; j < 2 && ok; ++j) {
      const double delta = (*H)[j] - s.x[j];
      const double v = s.v[j];
      const double sign = (v * delta > 0) - (v * delta < 0);
      ok = sign * v * v / (2.0 * std::abs(a_max)) < std::abs(delta);
    }
    if (ok) best = {s, t};
  }
  return best;
}

ReplanOutcome replan_once(PlannerState& state, const SlidingGrid& grid, const CommittedTrajectory& prev,
                          const Vec3& G_term, double now, const PlannerConfig& cfg, double time_budget,
                          std::optional<double> elapsed_override) {
  cfg.validate();
  const auto t_begin = Clock::now();
  ReplanOutcome out;
  out.delta_t = state.last_replan_time < 0 ? cfg.dt0 : cfg.alpha * state.last_replan_time;
  auto finish = [&](KeepReason reason) -> ReplanOutcome& {
    out.timings.total = msSince(t_begin);
    const double elapsed = elapsed_override ? *elapsed_override : out.timings.total / 1000.0;
    if (reason == KeepReason::None && elapsed > time_budget) reason = KeepReason::Overtime;
    out.reason = reason;
    out.committed = reason == KeepReason::None;
    state.last_replan_time = elapsed;
    if (!out.committed) {
      out.trajectory = CommittedTrajectory{};
      return out;
    }
    state.k += 1;
    out.trajectory.k = state.k;
    state.f_whole = out.f_whole;
    if (out.safe && cfg.use_safe && cfg.plan_in_unknown) state.f_safe = out.f_safe;
    state.prev_jps = out.jps;
    return out;
  };
  if (elapsed_override && *elapsed_override > time_budget) return finish(KeepReason::Overtime);

  const double res = grid.resolution();
  const double eps = cfg.epsFor(grid);
  auto [A, t_A] = select_A(prev, now, out.delta_t);
  out.A = A;
  out.G = project_goal(G_term, A.x, grid, cfg.goal_margin_voxels * res);

  SlidingGrid plan_grid = grid;
  plan_grid.setInflationRadius(grid.inflationRadius() + cfg.planning_margin);

  // Global direction.
  auto t0 = Clock::now();
  auto jps_a = jps_search(plan_grid, A.x, out.G, JpsOptions{std::numeric_limits<double>::infinity(), cfg.goal_snap, true});
  if (!jps_a) {
    out.timings.jps = msSince(t0);
    return finish(KeepReason::OptInfeasible);
  }
  out.jps = *jps_a;
  out.direction.chosen = *jps_a;
  if (state.prev_jps && !state.prev_jps->empty()) {
    const GridPath prev_rr = reroot(*state.prev_jps, A.x);
    const Vec3 C = path_sphere_exit(*jps_a, A.x, cfg.r).value_or(jps_a->back());
    const Vec3 D = path_sphere_exit(prev_rr, A.x, cfg.r).value_or(prev_rr.back());
    const Vec3 u = C - A.x, w = D - A.x;
    double angle = 0.0;
    if (u.norm() > 0 && w.norm() > 0) angle = std::acos(std::clamp(u.dot(w) / (u.norm() * w.norm()), -1.0, 1.0));
    out.direction.angle_cad = angle;
    if (angle > cfg.alpha0) {
      if (auto jps_b = repair_previous(prev_rr, plan_grid, A.x, out.G, eps)) {
        out.direction = choose_direction(*jps_a, *jps_b, A, out.G, cfg.r, cfg.alpha0, cfg.limits, cfg.N_whole);
        out.jps = out.direction.chosen;
      }
    }
  }
  out.jps = shortcut_path(out.jps, plan_grid, {VoxelState::OccupiedKnown});
  out.jps_in = split_and_truncate(clip_to_sphere(out.jps, A.x, cfg.r), cfg.l_max, cfg.p_max);
  out.timings.jps = msSince(t0);

  // Whole trajectory.
  t0 = Clock::now();
  const StateSet obstacles_whole = cfg.plan_in_unknown ? StateSet{VoxelState::OccupiedKnown}
                                                       : StateSet{VoxelState::OccupiedKnown, VoxelState::Unknown};
  GridPath whole_seed = cfg.plan_in_unknown ? out.jps_in : safeSeed(plan_grid, out.jps_in, A.x, eps);
  whole_seed = split_and_truncate(whole_seed, cfg.l_max, cfg.p_max);
  out.E = whole_seed.back();
  out.poly_whole = decompose(plan_grid, whole_seed, obstacles_whole, cfg.local_box);
  out.timings.decomp_whole = msSince(t0);

  t0 = Clock::now();
  LineSearchInput win;
  win.x_init = A;
  win.final_condition = FinalCondition::fixedStop(*out.E);
  win.corridor = &out.poly_whole;
  win.N = cfg.N_whole;
  win.limits = cfg.limits;
  win.t0 = t_A;
  win.dt_target = *out.E;
  win.min_horizon = braking_time(A, cfg.limits);
  win.miqp.budget = cfg.node_budget;
  win.warm = state.warm_whole;
  auto whole = line_search_solve(win, state.f_whole, cfg.gamma, cfg.gamma_prime, cfg.line_search_steps);
  out.timings.miqp_whole = msSince(t0);
  if (!whole) return finish(KeepReason::OptInfeasible);
  out.whole = whole->spline;
  out.f_whole = whole->f;
  out.nodes_whole = whole->solution.nodes_explored;

  CommittedTrajectory next = prev.window(now, t_A);
  const double covered = next.pieces.empty() ? now : next.pieces.back().end;
  if (covered < t_A) next.pieces.push_back({holdSpline(A.x, covered), covered, t_A});
  next.t_A = t_A;
  const JerkSpline& W = whole->spline;

  const bool with_safe = cfg.use_safe && cfg.plan_in_unknown;
  if (!with_safe) {
    // Ablations commit the whole trajectory directly.
    if (!samplesAvoid(grid, W, W.t0, W.tEnd(), {VoxelState::OccupiedKnown}))
      return finish(KeepReason::PrefixHitsUnknown);
    out.R = W.intervals.back().pos(W.dt);
    out.t_R = W.tEnd();
    next.pieces.push_back({W, t_A, W.tEnd()});
    next.t_R = next.t_F = W.tEnd();
    out.F = out.R;
  } else {
    const TimedPolyline dense = densify(W, W.t0, W.tEnd(), 0.5 * res);
    out.H = find_intersection(dense.path, grid, {VoxelState::Unknown, VoxelState::OccupiedKnown}, eps, true);
    const double t_H = out.H ? timeOfPoint(dense, *out.H) : W.tEnd();
    std::pair<State, double> Rs;
    if (cfg.use_beta_rule && out.H) {
      const double t = std::min(t_A + cfg.beta * std::max(out.delta_t / cfg.alpha, cfg.dt0), t_H);
      Rs = {sample(W, t), t};
    } else {
      Rs = select_R(W, out.H, t_H, cfg.limits.a_max, W.dt / 10.0);
    }
    if (!samplesAvoid(grid, W, t_A, Rs.second, {VoxelState::Unknown, VoxelState::OccupiedKnown}))
      return finish(KeepReason::PrefixHitsUnknown);

    // Safe stage from R. When it is infeasible, R backs off towards A.
    auto solveSafe = [&](const State& R, double t_R) -> bool {
      out.R = R.x;
      out.t_R = t_R;
      if (!out.H) {
        out.safe = holdSpline(R.x, t_R);
        out.F = R.x;
        out.f_safe = state.f_safe;
        return true;
      }
      auto ts = Clock::now();
      GridPath seed = split_and_truncate(safeSeed(plan_grid, out.jps_in, R.x, eps), cfg.l_max, cfg.p_max);
      out.poly_safe = decompose(plan_grid, seed, {VoxelState::OccupiedKnown, VoxelState::Unknown}, cfg.local_box);
      out.timings.decomp_safe += msSince(ts);

      ts = Clock::now();
      LineSearchInput sin;
      sin.x_init = R;
      sin.final_condition = FinalCondition::freeStop();
      sin.corridor = &out.poly_safe;
      sin.N = cfg.N_safe;
      sin.limits = cfg.limits;
      sin.t0 = t_R;
      Vec3 stop = R.x;
      for (int k = 0; k < 3; ++k) stop[k] += R.v[k] * std::abs(R.v[k]) / (2.0 * cfg.limits.a_max);
      sin.dt_target = stop;
      sin.min_horizon = braking_time(R, cfg.limits);
      sin.miqp.budget = cfg.node_budget;
      sin.warm = state.warm_safe;
      auto safe = line_search_solve(sin, state.f_safe, cfg.gamma, cfg.gamma_prime, cfg.line_search_steps);
      out.timings.miqp_safe += msSince(ts);
      if (!safe) return false;
      if (!samplesAvoid(grid, safe->spline, safe->spline.t0, safe->spline.tEnd(),
                        {VoxelState::Unknown, VoxelState::OccupiedKnown}))
        return false;
      out.safe = safe->spline;
      out.f_safe = safe->f;
      out.nodes_safe = safe->solution.nodes_explored;
      out.F = safe->spline.intervals.back().pos(safe->spline.dt);
      state.warm_safe = safe->solution.assignment;
      return true;
    };
    bool found = solveSafe(Rs.first, Rs.second);
    if (!found && out.H && cfg.r_backoff_steps > 0) {
      // Bisect for the latest feasible R on [t_A, t_R]; the last feasible
      // candidate's results are restored at the end.
      double lo = t_A, hi = Rs.second;
      ReplanOutcome best;
      bool have = false;
      for (int i = 0; i < cfg.r_backoff_steps; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (solveSafe(sample(W, mid), mid)) {
          lo = mid;
          best = out;
          have = true;
        } else {
          hi = mid;
        }
      }
      if (!have) have = solveSafe(sample(W, t_A), t_A);
      else {
        const auto timings = out.timings;
        out = std::move(best);
        out.timings = timings;
      }
      found = have;
    }
    if (!found) return finish(KeepReason::OptInfeasible);
    if (out.t_R > t_A) next.pieces.push_back({W, t_A, out.t_R});
    next.pieces.push_back({*out.safe, out.t_R, out.safe->tEnd()});
    next.t_R = out.t_R;
    next.t_F = out.safe->tEnd();
  }
  state.warm_whole = whole->solution.assignment;
  for (double t = t_A; t <= out.t_R; t += W.dt / 10.0) out.speed_A_to_R = std::max(out.speed_A_to_R, sample(W, t).v.norm());
  out.speed_A_to_R = std::max(out.speed_A_to_R, sample(W, out.t_R).v.norm());
  out.trajectory = std::move(next);
  return finish(KeepReason::None);
}

}  // namespace faster
