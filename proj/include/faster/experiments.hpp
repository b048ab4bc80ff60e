#pragma once

#include "faster/config.hpp"
#include "faster/run_log.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace faster {

/// Runs one episode per seed, fanned over `threads` workers. Rows come
/// back in seed order and do not depend on the thread count.
std::vector<MetricsRow> run_seeds(const Scenario& sc, const std::vector<std::uint64_t>& seeds, int threads,
                                  const std::string& label = "");

struct SafeAblationRow {
  double v_max = 0.0;
  bool with_safe = true;
  int episodes = 0;
  int crashes = 0;
  int reached = 0;
};

/// Crash counts with and without the Safe trajectory for each v_max.
std::vector<SafeAblationRow> ablate_safe(const Scenario& sc, const std::vector<double>& v_max,
                                         const std::vector<std::uint64_t>& seeds, int threads);

struct PlanspaceComparison {
  bool matched = false;
  double time = 0.0;
  /// Mean speed (path length / duration) of each Whole trajectory over
  /// [t_A, t_A + w], with w = t_R - t_A of the unknown-space plan.
  double speed_full = 0.0;
  double speed_free_only = 0.0;
  /// Peak speeds over the same window.
  double peak_full = 0.0;
  double peak_free_only = 0.0;
  bool free_only_committed = false;
};

/// Runs the scenario with planning in F and U. At the first committed cycle
/// whose Whole trajectory enters unknown space while the vehicle moves at
/// least `min_speed_frac` * v_max (and, if the world has a landmark, with A
/// within `landmark_radius` of it in x-y), replans the same snapshot with
/// the free-space-only planner and compares A->R speeds.
PlanspaceComparison compare_plan_spaces(const Scenario& sc, std::uint64_t seed, double min_speed_frac = 0.5,
                                        double landmark_radius = 3.0);

std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace faster
