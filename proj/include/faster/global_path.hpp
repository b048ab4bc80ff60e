#pragma once

#include "faster/map.hpp"
#include "faster/types.hpp"

#include <optional>
#include <vector>

namespace faster {

/// Piece-wise linear path. Interior vertices sit on voxel centres; the first
/// and last vertex may be arbitrary continuous points.
struct GridPath {
  std::vector<Vec3> vertices;

  bool empty() const { return vertices.empty(); }
  std::size_t size() const { return vertices.size(); }
  const Vec3& front() const { return vertices.front(); }
  const Vec3& back() const { return vertices.back(); }
  double length() const;
  /// Length of the path from `point` (assumed on the path) to its end.
  double lengthFrom(const Vec3& point) const;
  GridPath reversed() const;
  /// Point at arc length `s` (clamped).
  Vec3 pointAt(double s) const;
};

/// Drops consecutive duplicates and merges collinear interior vertices.
GridPath simplify(const GridPath& path);

struct JpsOptions {
  /// The start snaps to the nearest traversable voxel within this distance.
  double start_snap = std::numeric_limits<double>::infinity();
  /// Same for the goal; 0 means the goal voxel itself must be traversable.
  double goal_snap = 0.0;
  /// Re-attach the continuous start/goal as first/last vertices.
  bool attach_endpoints = true;
};

/// Jump Point Search on the 26-connected voxel graph. Traversable voxels are
/// those whose inflated state is not OccupiedKnown (so Unknown counts as
/// free). Returns nullopt when no path exists.
std::optional<GridPath> jps_search(const SlidingGrid& grid, const Vec3& start, const Vec3& goal,
                                   const JpsOptions& options = {});

/// Sphere marching along `path` toward the first point within `eps` of a
/// voxel whose state is in `states`. Every path point strictly before the
/// returned one lies outside those voxels.
std::optional<Vec3> find_intersection(const GridPath& path, const SlidingGrid& grid, StateSet states, double eps,
                                      bool inflate = true);

/// First point along the path at distance exactly `radius` from `center`.
std::optional<Vec3> path_sphere_exit(const GridPath& path, const Vec3& center, double radius);

/// The part of `path` before its first exit from the sphere (whole path if
/// it never leaves). The exit point becomes the last vertex.
GridPath clip_to_sphere(const GridPath& path, const Vec3& center, double radius);

/// Line-of-sight shortcutting: from each kept vertex, jumps to the farthest
/// later vertex whose straight connection keeps more than the inflation
/// radius from every cell in `blocked` (checked conservatively on the
/// distance fields). Cells outside the extent count as Unknown.
GridPath shortcut_path(const GridPath& path, const SlidingGrid& grid, StateSet blocked);

/// `prev` restarted at the point closest to `root`, with `root` prepended.
GridPath reroot(const GridPath& prev, const Vec3& root);

/// Repairs the previous global path so it avoids newly seen obstacles by
/// searching A->I1, I1->I2 and I2->G, where I1/I2 are the first and last
/// intersections of `prev` with the inflated occupied space.
std::optional<GridPath> repair_previous(const GridPath& prev, const SlidingGrid& grid, const Vec3& A, const Vec3& G,
                                        double eps);

struct DirectionChoice {
  GridPath chosen;
  double cost_a = 0.0;
  double cost_b = 0.0;
  double angle_cad = 0.0;
  bool evaluated = false;
  bool chose_b = false;
};

/// Picks between the fresh path (a) and the repaired previous one (b) using
/// the time-to-go estimate N*dt + remaining length / v_max.
DirectionChoice choose_direction(const GridPath& jps_a, const GridPath& jps_b, const State& A, const Vec3& G,
                                 double r, double alpha0, const Limits& limits, int N);

}  // namespace faster
