#pragma once

#include "faster/kernels.hpp"
#include "faster/map.hpp"
#include "faster/replan.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace faster {

struct Box {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();
};

/// Vertical cylinder with axis (x, y) spanning [z_lo, z_hi].
struct Cylinder {
  double x = 0.0;
  double y = 0.0;
  double radius = 0.0;
  double z_lo = -100.0;
  double z_hi = 100.0;
};

struct World {
  std::string name;
  std::vector<Box> boxes;
  std::vector<Cylinder> cylinders;
  Vec3 start = Vec3::Zero();
  Vec3 goal = Vec3::Zero();
  /// Feature the plan-space comparison is matched at (the corner).
  std::optional<Vec3> landmark;

  /// Euclidean distance to the nearest obstacle surface; 0 inside one.
  double clearance(const Vec3& p) const;
  /// First hit distance along unit `dir` within `max_range`.
  std::optional<double> raycast(const Vec3& origin, const Vec3& dir, double max_range) const;
};

std::optional<double> rayBox(const Box& b, const Vec3& origin, const Vec3& dir);
std::optional<double> rayCylinder(const Cylinder& c, const Vec3& origin, const Vec3& dir);

struct ForestParams {
  double density = 0.1;  // obstacles per square metre
  double length = 25.0;
  double width = 25.0;
  double r_min = 0.15;
  double r_max = 0.35;
  double altitude = 1.5;
  /// Free radius kept around start and goal.
  double keep_out = 1.5;
};
World make_forest(const ForestParams& p, std::uint64_t seed);

struct CornerParams {
  /// The wall block occupies x <= corner_x, y >= wall_y.
  double corner_x = 6.0;
  double wall_y = 1.5;
  /// Start distance before the corner, along the wall.
  double approach = 16.0;
  bool hidden_cylinder = true;
  double cylinder_radius = 0.4;
  /// Cylinder centre relative to the corner (corner_x, wall_y).
  double cylinder_dx = 3.0;
  double cylinder_dy = 2.5;
  double altitude = 1.5;
};
/// `seed` jitters the hidden cylinder and the goal by a few centimetres.
World make_corner(const CornerParams& p, std::uint64_t seed);

struct BugtrapParams {
  double opening = 1.0;
  double size = 4.0;
  double thickness = 0.3;
  double altitude = 1.5;
};
World make_bugtrap(const BugtrapParams& p);

struct RoomsParams {
  int rooms = 3;
  double room_length = 6.0;
  double width = 8.0;
  double door = 1.4;
  double thickness = 0.3;
  double altitude = 1.5;
};
World make_rooms(const RoomsParams& p, std::uint64_t seed);

struct SensorModel {
  double horizontal_fov = 1.5707963267948966;
  double vertical_fov = 1.0471975511965976;
  double range = 10.0;
  double h_step = 0.008726646259971648;  // 0.5 deg
  double v_step = 0.017453292519943295;  // 1 deg

  void validate() const;
};

void render_scan_into(const World& world, const Vec3& pose, double yaw, const SensorModel& sensor, DepthScan& scan,
                      kernels::Exec exec);
DepthScan render_scan(const World& world, const Vec3& pose, double yaw, const SensorModel& sensor,
                      kernels::Exec exec = kernels::Exec::Parallel);

struct EpisodeConfig {
  double sim_step = 0.05;
  double planner_latency = 0.1;
  double max_time = 40.0;
  /// Collision radius against the true world.
  double vehicle_radius = 0.2;
  double resolution = 0.2;
  Index3 dims = Index3(100, 100, 15);
  /// Map inflation; <= 0 means vehicle_radius + sqrt(3) * resolution.
  double inflation = 0.0;
  /// Radius of the free region marked around the start (capped by the
  /// true clearance).
  double start_free_radius = 2.0;
  /// Voxels farther than this above or below the start altitude are
  /// treated as occupied (0 = no band).
  double altitude_band = 1.0;
  /// Wall-clock planner timing instead of the fixed latency.
  bool wallclock = false;
  /// Sub-samples per step for the collision check.
  int collision_substeps = 8;
  bool record_cycles = false;
  bool record_trajectory = false;
  /// Monte-Carlo corridor volumes every `volume_every` commits (0 = off).
  int volume_every = 0;
  std::size_t volume_samples = 20000;

  void validate() const;
  double inflationRadius() const;
};

struct CycleRecord {
  double time = 0.0;
  ReplanOutcome outcome;
  double vol_whole = -1.0;
  double vol_safe = -1.0;
  double vol_safe_unknown = -1.0;
};

struct TrajectorySample {
  double t = 0.0;
  State s;
  double yaw = 0.0;
};

struct EpisodeMetrics {
  bool reached_goal = false;
  bool timed_out = false;
  double flight_time = 0.0;
  double distance = 0.0;
  double max_speed = 0.0;
  double min_true_clearance = 1e9;
  int collisions = 0;
  int cycles = 0;
  int commits = 0;
  int keep_opt_infeasible = 0;
  int keep_prefix_unknown = 0;
  int keep_overtime = 0;
  std::vector<double> miqp_ms;  // Whole + Safe per committed cycle
  std::vector<double> replan_ms;
  std::vector<CycleRecord> records;
  std::vector<TrajectorySample> trajectory;
};

/// Called after every planning cycle with the grid snapshot it saw.
using CycleHook = std::function<void(double time, const SlidingGrid& grid, const CommittedTrajectory& prev,
                                     const PlannerState& before, const ReplanOutcome& outcome)>;

EpisodeMetrics run_episode(const World& world, const PlannerConfig& cfg, const SensorModel& sensor,
                           const Vec3& G_term, const EpisodeConfig& ep, const CycleHook& hook = {});

}  // namespace faster
