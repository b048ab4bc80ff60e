#include "faster/experiments.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace faster {

std::vector<MetricsRow> run_seeds(const Scenario& sc, const std::vector<std::uint64_t>& seeds, int threads,
                                  const std::string& label) {
  std::vector<MetricsRow> rows(seeds.size());
  auto job = [&](std::size_t i) {
    const World w = sc.makeWorld(seeds[i]);
    rows[i].scenario = label.empty() ? sc.world : label;
    rows[i].seed = seeds[i];
    rows[i].metrics = run_episode(w, sc.planner, sc.sensor, w.goal, sc.episode);
  };
  if (threads <= 1 || seeds.size() <= 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i) job(i);
    return rows;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const int n = std::min<int>(threads, static_cast<int>(seeds.size()));
  for (int t = 0; t < n; ++t)
    pool.emplace_back([&] {
      omp_set_num_threads(1);
      for (std::size_t i = next++; i < seeds.size(); i = next++) job(i);
    });
  for (auto& th : pool) th.join();
  return rows;
}

std::vector<SafeAblationRow> ablate_safe(const Scenario& sc, const std::vector<double>& v_max,
                                         const std::vector<std::uint64_t>& seeds, int threads) {
  std::vector<SafeAblationRow> out;
  for (double v : v_max)
    for (bool with_safe : {true, false}) {
      Scenario s = sc;
      s.planner.limits.v_max = v;
      s.planner.use_safe = with_safe;
      SafeAblationRow row;
      row.v_max = v;
      row.with_safe = with_safe;
      for (const MetricsRow& r : run_seeds(s, seeds, threads)) {
        ++row.episodes;
        row.crashes += r.metrics.collisions > 0;
        row.reached += r.metrics.reached_goal;
      }
      out.push_back(row);
    }
  return out;
}

namespace {

struct WindowSpeed {
  double mean = 0.0;
  double peak = 0.0;
};

// Mean (path length over duration) and peak speed of a spline on [t0, t1].
// Past the spline's end the vehicle is at rest.
WindowSpeed windowSpeed(const JerkSpline& s, double t0, double t1) {
  WindowSpeed out;
  const double end = std::min(t1, s.tEnd());
  const int n = std::max(1, static_cast<int>(std::ceil((end - t0) / (s.dt / 20.0))));
  double length = 0.0;
  Vec3 last = sample(s, t0).x;
  for (int i = 0; i <= n; ++i) {
    const State x = sample(s, t0 + (end - t0) * i / n);
    out.peak = std::max(out.peak, x.v.norm());
    length += (x.x - last).norm();
    last = x.x;
  }
  if (t1 > t0) out.mean = length / (t1 - t0);
  return out;
}

}  // namespace

PlanspaceComparison compare_plan_spaces(const Scenario& sc, std::uint64_t seed, double min_speed_frac,
                                        double landmark_radius) {
  const World w = sc.makeWorld(seed);
  Scenario full = sc;
  full.planner.plan_in_unknown = true;
  full.planner.use_safe = true;
  PlannerConfig free_cfg = full.planner;
  free_cfg.plan_in_unknown = false;
  PlanspaceComparison cmp;
  const double v_min = min_speed_frac * full.planner.limits.v_max;
  auto hook = [&](double t, const SlidingGrid& grid, const CommittedTrajectory& prev, const PlannerState& before,
                  const ReplanOutcome& o) {
    if (cmp.matched || !o.committed || !o.H || o.A.v.norm() < v_min || !(o.t_R > o.trajectory.t_A)) return;
    if (w.landmark && (o.A.x - *w.landmark).head<2>().norm() > landmark_radius) return;
    cmp.matched = true;
    cmp.time = t;
    const double window = o.t_R - o.trajectory.t_A;
    const WindowSpeed full_speed = windowSpeed(*o.whole, o.trajectory.t_A, o.t_R);
    cmp.speed_full = full_speed.mean;
    cmp.peak_full = full_speed.peak;
    PlannerState st = before;
    const double budget = st.last_replan_time < 0 ? free_cfg.dt0 : free_cfg.alpha * st.last_replan_time;
    const ReplanOutcome f = replan_once(st, grid, prev, w.goal, t, free_cfg, budget, full.episode.planner_latency);
    cmp.free_only_committed = f.committed;
    if (f.committed && f.whole) {
      const double t_A = f.trajectory.t_A;
      const WindowSpeed free_speed = windowSpeed(*f.whole, t_A, t_A + window);
      cmp.speed_free_only = free_speed.mean;
      cmp.peak_free_only = free_speed.peak;
    }
  };
  run_episode(w, full.planner, full.sensor, w.goal, full.episode, hook);
  return cmp;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto dots = item.find("..");
    try {
      if (dots == std::string::npos) {
        out.push_back(std::stoull(item));
      } else {
        const std::uint64_t a = std::stoull(item.substr(0, dots)), b = std::stoull(item.substr(dots + 2));
        if (b < a) throw std::invalid_argument("descending range");
        for (std::uint64_t s = a; s <= b; ++s) out.push_back(s);
      }
    } catch (const std::exception&) {
      throw std::invalid_argument("bad seed list '" + text + "'");
    }
  }
  if (out.empty()) throw std::invalid_argument("empty seed list");
  return out;
}

}  // namespace faster
