#pragma once

#include "faster/global_path.hpp"
#include "faster/kernels.hpp"
#include "faster/map.hpp"

#include <Eigen/Dense>

#include <vector>

namespace faster {

using Normals = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

/// Convex polyhedron {x : A x <= c} with unit-norm rows.
struct Polyhedron {
  Normals A;
  Eigen::VectorXd c;
  Vec3 seed_start = Vec3::Zero();
  Vec3 seed_end = Vec3::Zero();
  Vec3 box_lo = Vec3::Zero();
  Vec3 box_hi = Vec3::Zero();

  int faces() const { return static_cast<int>(A.rows()); }
  void addFace(const Vec3& normal, double offset);
  /// Largest violation max_i(A_i x - c_i); <= 0 means inside.
  double violation(const Vec3& x) const;
  bool contains(const Vec3& x, double tol = 0.0) const { return violation(x) <= tol; }
};

enum class CorridorKind { Whole, Safe };

struct Corridor {
  std::vector<Polyhedron> polys;
  CorridorKind kind = CorridorKind::Whole;

  /// Bounding box of all polyhedron boxes.
  void bounds(Vec3& lo, Vec3& hi) const;
  bool contains(const Vec3& x, double tol = 0.0) const;
};

/// Splits segments longer than `l_max` into equal parts and keeps the first
/// `p_max` segments.
GridPath split_and_truncate(const GridPath& path, double l_max, int p_max);

/// Obstacle points used for one segment: centres of voxels whose inflated
/// state is in `states` inside the box [lo, hi].
std::vector<Vec3> collect_obstacles(const SlidingGrid& grid, StateSet states, const Vec3& lo, const Vec3& hi);

/// Ellipsoid-seeded polyhedron around segment a-b avoiding `obstacles`,
/// bounded by the box [lo, hi].
Polyhedron decompose_segment(const Vec3& a, const Vec3& b, const std::vector<Vec3>& obstacles, const Vec3& lo,
                             const Vec3& hi);

/// One polyhedron per path segment. `local_box` is the margin added around
/// each segment's bounding box. When Unknown is an obstacle state the boxes
/// are also clipped to the map extent.
Corridor decompose(const SlidingGrid& grid, const GridPath& path, StateSet obstacle_states, double local_box = 2.0);

/// Monte-Carlo volume of a polyhedron inside its box. With a grid, only
/// samples whose raw state is in `within` count.
double volume(const Polyhedron& poly, std::size_t samples, std::uint64_t seed,
              kernels::Exec exec = kernels::Exec::Parallel);
double volume_in_states(const Polyhedron& poly, const SlidingGrid& grid, StateSet within, std::size_t samples,
                        std::uint64_t seed, kernels::Exec exec = kernels::Exec::Parallel);

/// Monte-Carlo volume of a corridor (union of its polyhedra) inside the
/// bounding box of their boxes; optionally restricted to raw states.
double corridor_volume(const Corridor& corridor, std::size_t samples, std::uint64_t seed,
                       kernels::Exec exec = kernels::Exec::Parallel);
double corridor_volume_in_states(const Corridor& corridor, const SlidingGrid& grid, StateSet within,
                                 std::size_t samples, std::uint64_t seed,
                                 kernels::Exec exec = kernels::Exec::Parallel);

}  // namespace faster
