#include "faster/sim.hpp"

#include <cmath>
#include <stdexcept>

namespace faster {

void EpisodeConfig::validate() const {
  if (!(sim_step > 0)) throw std::invalid_argument("episode: sim_step must be positive");
  if (!(planner_latency > 0)) throw std::invalid_argument("episode: planner_latency must be positive");
  if (!(max_time > 0)) throw std::invalid_argument("episode: max_time must be positive");
  if (!(vehicle_radius >= 0)) throw std::invalid_argument("episode: vehicle_radius must be >= 0");
  if (!(resolution > 0)) throw std::invalid_argument("episode: resolution must be positive");
  if ((dims.array() < 1).any()) throw std::invalid_argument("episode: dims must be >= 1");
  if (!(altitude_band >= 0)) throw std::invalid_argument("episode: altitude_band must be >= 0");
  if (collision_substeps < 1) throw std::invalid_argument("episode: collision_substeps must be >= 1");
}

double EpisodeConfig::inflationRadius() const {
  return inflation > 0 ? inflation : vehicle_radius + std::sqrt(3.0) * resolution;
}

EpisodeMetrics run_episode(const World& world, const PlannerConfig& cfg, const SensorModel& sensor,
                           const Vec3& G_term, const EpisodeConfig& ep, const CycleHook& hook) {
  ep.validate();
  cfg.validate();
  sensor.validate();
  EpisodeMetrics m;

  // The map keeps a fixed vertical band around the start altitude.
  const double z0 = world.start.z();
  auto mapCenter = [&](const Vec3& p) { return Vec3(p.x(), p.y(), z0); };
  const double infl = ep.inflationRadius();
  SlidingGrid grid(ep.resolution, ep.dims, mapCenter(world.start), infl);
  auto fence = [&] {
    if (ep.altitude_band > 0) grid.fenceAltitude(z0 - ep.altitude_band, z0 + ep.altitude_band);
  };
  fence();
  // The vehicle starts in a known-free bubble (up to the true clearance).
  grid.markFreeSphere(world.start, std::min(ep.start_free_radius, world.clearance(world.start)));

  CommittedTrajectory committed = CommittedTrajectory::hold(world.start, 0.0);
  PlannerState ps;
  DepthScan scan;
  const Vec3 to_goal = G_term - world.start;
  double yaw = std::atan2(to_goal.y(), to_goal.x());
  double next_replan = 0.0;
  std::optional<Vec3> heading_target;
  int commits_since_volume = 0;
  const double eps = cfg.epsFor(grid);

  auto checkClearance = [&](const Vec3& p) {
    const double c = world.clearance(p) - ep.vehicle_radius;
    m.min_true_clearance = std::min(m.min_true_clearance, c);
    return c >= 0.0;
  };

  if (!checkClearance(world.start)) {
    m.collisions = 1;
    return m;
  }
  const long long steps = static_cast<long long>(std::floor(ep.max_time / ep.sim_step + 1e-9));
  Vec3 last = world.start;
  for (long long i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) * ep.sim_step;
    if (i > 0) {
      const double t_prev = t - ep.sim_step;
      bool hit = false;
      for (int j = 1; j <= ep.collision_substeps && !hit; ++j) {
        const Vec3 p = committed.sampleAt(t_prev + ep.sim_step * j / ep.collision_substeps).x;
        m.distance += (p - last).norm();
        last = p;
        hit = !checkClearance(p);
      }
      if (hit) {
        m.collisions = 1;
        m.flight_time = t;
        break;
      }
    }
    const State s = committed.sampleAt(t);
    m.max_speed = std::max(m.max_speed, s.v.norm());
    if (ep.record_trajectory) m.trajectory.push_back({t, s, yaw});
    if ((s.x - G_term).norm() < 2.0 * ep.resolution && s.v.norm() < 0.1) {
      m.reached_goal = true;
      m.flight_time = t;
      break;
    }
    if (i == steps) {
      m.timed_out = true;
      m.flight_time = t;
      break;
    }

    // Yaw towards M, else along the velocity.
    if (heading_target && (*heading_target - s.x).head<2>().norm() > 1e-3)
      yaw = std::atan2(heading_target->y() - s.x.y(), heading_target->x() - s.x.x());
    else if (s.v.head<2>().norm() > 0.1)
      yaw = std::atan2(s.v.y(), s.v.x());
    render_scan_into(world, s.x, yaw, sensor, scan, kernels::Exec::Parallel);
    recenter(grid, mapCenter(s.x), false);
    fence();
    fuse_scan(grid, scan, false);

    if (t + 1e-9 < next_replan) continue;
    // Distance fields are rebuilt once per planning cycle.
    if (!grid.distancesFresh()) grid.refreshDistances();
    const double budget = ps.last_replan_time < 0 ? cfg.dt0 : cfg.alpha * ps.last_replan_time;
    PlannerState before;
    if (hook) before = ps;
    std::optional<double> override;
    if (!ep.wallclock) override = ep.planner_latency;
    ReplanOutcome out = replan_once(ps, grid, committed, G_term, t, cfg, budget, override);
    ++m.cycles;
    m.replan_ms.push_back(out.timings.total);
    switch (out.reason) {
      case KeepReason::None:
        ++m.commits;
        m.miqp_ms.push_back(out.timings.miqp_whole + out.timings.miqp_safe);
        break;
      case KeepReason::OptInfeasible:
        ++m.keep_opt_infeasible;
        break;
      case KeepReason::PrefixHitsUnknown:
        ++m.keep_prefix_unknown;
        break;
      case KeepReason::Overtime:
        ++m.keep_overtime;
        break;
    }
    if (hook) hook(t, grid, committed, before, out);
    if (out.committed) committed = out.trajectory;

    // Heading target: the first unknown point on the latest global path.
    const GridPath* latest = !out.jps.empty() ? &out.jps : (ps.prev_jps ? &*ps.prev_jps : nullptr);
    heading_target.reset();
    if (latest && !latest->empty())
      heading_target = find_intersection(*latest, grid, StateSet{VoxelState::Unknown}, eps);

    CycleRecord rec;
    bool want_volume = false;
    if (out.committed && ep.volume_every > 0 && ++commits_since_volume >= ep.volume_every) {
      commits_since_volume = 0;
      want_volume = true;
    }
    if (want_volume) {
      const std::uint64_t vseed = static_cast<std::uint64_t>(i) * 7919u + 17u;
      rec.vol_whole = corridor_volume(out.poly_whole, ep.volume_samples, vseed);
      if (!out.poly_safe.polys.empty()) {
        rec.vol_safe = corridor_volume(out.poly_safe, ep.volume_samples, vseed + 1);
        rec.vol_safe_unknown = corridor_volume_in_states(out.poly_safe, grid, StateSet{VoxelState::Unknown},
                                                         ep.volume_samples, vseed + 2);
      }
    }
    if (ep.record_cycles || want_volume) {
      rec.time = t;
      if (ep.record_cycles) rec.outcome = std::move(out);
      m.records.push_back(std::move(rec));
    }

    double wait = ep.planner_latency;
    if (ep.wallclock) wait = std::max(ep.sim_step, ps.last_replan_time);
    next_replan = t + wait;
  }
  return m;
}

}  // namespace faster
