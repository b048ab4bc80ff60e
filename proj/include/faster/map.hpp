#pragma once

#include "faster/types.hpp"

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

namespace faster {

/// One synthetic depth measurement batch. Ranges are in metres; a ray whose
/// `hit` flag is false reached `max_range` without returning.
struct DepthScan {
  struct Ray {
    Vec3 direction = Vec3::UnitX();
    double range = 0.0;
    bool hit = false;
  };
  Vec3 origin = Vec3::Zero();
  double yaw = 0.0;
  double max_range = 10.0;
  double horizontal_fov = 1.5707963267948966;
  std::vector<Ray> rays;
};

/**
 * Body-centred sliding occupancy grid.
 *
 * Voxel (i, j, k) covers [origin + i*res, origin + (i+1)*res) per axis, with
 * origin = center - dims*res/2. The center always lies on the voxel lattice.
 * Everything outside the extent is Unknown.
 *
 * Inflation is realised at query time from two distance fields (to the
 * nearest OccupiedKnown voxel centre and to the nearest Unknown voxel centre
 * or the extent boundary), refreshed after every fusion or recenter.
 */
class SlidingGrid {
 public:
  SlidingGrid() = default;
  SlidingGrid(double resolution, const Index3& dims, const Vec3& center, double inflation_radius);

  double resolution() const { return res_; }
  const Index3& dims() const { return dims_; }
  const Vec3& center() const { return center_; }
  double inflationRadius() const { return inflation_; }
  /// Changes the inflation radius; the distance fields stay valid.
  void setInflationRadius(double r) {
    if (!(r >= 0)) throw std::invalid_argument("inflation radius must be >= 0");
    inflation_ = r;
  }
  Vec3 origin() const { return center_ - 0.5 * res_ * dims_.cast<double>(); }
  Vec3 extentMax() const { return center_ + 0.5 * res_ * dims_.cast<double>(); }
  std::size_t size() const { return cells_.size(); }

  bool contains(const Vec3& p) const;
  bool inBounds(const Index3& idx) const {
    return (idx.array() >= 0).all() && (idx.array() < dims_.array()).all();
  }
  /// Voxel of a point; nullopt outside the extent.
  std::optional<Index3> voxelOf(const Vec3& p) const;
  /// Voxel index without bounds checking (may be out of range).
  Index3 rawVoxelOf(const Vec3& p) const;
  Vec3 voxelCenter(const Index3& idx) const {
    return origin() + (idx.cast<double>().array() + 0.5).matrix() * res_;
  }
  std::size_t linear(const Index3& idx) const {
    return static_cast<std::size_t>(idx.x()) +
           static_cast<std::size_t>(dims_.x()) *
               (static_cast<std::size_t>(idx.y()) + static_cast<std::size_t>(dims_.y()) * static_cast<std::size_t>(idx.z()));
  }
  Index3 unlinear(std::size_t i) const;

  VoxelState at(const Index3& idx) const { return static_cast<VoxelState>(cells_[linear(idx)]); }
  VoxelState at(std::size_t i) const { return static_cast<VoxelState>(cells_[i]); }
  void set(const Index3& idx, VoxelState s) {
    cells_[linear(idx)] = static_cast<std::uint8_t>(s);
    dirty_ = true;
  }
  void set(std::size_t i, VoxelState s) {
    cells_[i] = static_cast<std::uint8_t>(s);
    dirty_ = true;
  }
  void fill(VoxelState s);

  /// Marks every voxel whose centre lies within `radius` of `p` FreeKnown
  /// (used to seed the map with the vehicle's own footprint).
  void markFreeSphere(const Vec3& p, double radius);

  /// Marks every voxel whose centre height is outside [z_lo, z_hi]
  /// OccupiedKnown (a virtual floor and ceiling).
  void fenceAltitude(double z_lo, double z_hi);

  /// Recomputes the inflation distance fields. Called by fuse_scan/recenter.
  void refreshDistances();
  bool distancesFresh() const { return !dirty_; }

  /// Distance from a voxel centre to the nearest OccupiedKnown voxel centre.
  double occupiedDistance(std::size_t i) const { return occ_dist_[i]; }
  /// Distance from a voxel centre to the nearest Unknown voxel centre or the
  /// extent boundary, whichever is closer.
  double unknownDistance(std::size_t i) const { return unk_dist_[i]; }
  /// Inflated state of a voxel, evaluated at its centre.
  VoxelState inflatedState(std::size_t i) const;
  VoxelState inflatedState(const Index3& idx) const { return inflatedState(linear(idx)); }

  /// Distance from `p` to the region outside the extent (0 if outside).
  double boundaryDistance(const Vec3& p) const;

  const std::vector<std::uint8_t>& cells() const { return cells_; }

  friend bool operator==(const SlidingGrid& a, const SlidingGrid& b) {
    return a.res_ == b.res_ && a.dims_ == b.dims_ && a.center_ == b.center_ && a.cells_ == b.cells_;
  }

 private:
  friend void recenter(SlidingGrid& grid, const Vec3& new_center, bool refresh);

  double res_ = 1.0;
  Index3 dims_ = Index3::Zero();
  Vec3 center_ = Vec3::Zero();
  double inflation_ = 0.0;
  std::vector<std::uint8_t> cells_;
  std::vector<double> occ_dist_;
  std::vector<double> unk_dist_;
  bool dirty_ = true;
};

/// Snaps a position to the voxel lattice of the given resolution.
Vec3 snapToLattice(const Vec3& p, double resolution);

/// Integrates a scan. Returns false (grid unchanged) if the sensor origin is
/// outside the extent. Free writes are applied before occupied writes, and
/// OccupiedKnown voxels are never downgraded.
bool fuse_scan(SlidingGrid& grid, const DepthScan& scan, bool refresh = true);

/// Moves the grid to `new_center` (snapped to the lattice). Voxels that stay
/// inside the extent keep their state; newly exposed ones are Unknown.
/// With `refresh` false the distance fields are left stale (a fusion that
/// follows immediately refreshes them).
void recenter(SlidingGrid& grid, const Vec3& new_center, bool refresh = true);

/// Voxel state at a point. With `inflate`, OccupiedKnown if any occupied voxel
/// centre lies within the inflation radius, else Unknown if any unknown voxel
/// centre (or the outside of the map) does, else the raw state.
VoxelState classify(const SlidingGrid& grid, const Vec3& point, bool inflate);

struct NearestCell {
  Vec3 position;
  double distance;
};

/// Exact nearest voxel centre whose state is in `states`. Unknown space
/// outside the extent counts with the distance to the extent boundary.
std::optional<NearestCell> nearest_cell(const SlidingGrid& grid, const Vec3& point, StateSet states,
                                        bool inflate = false);

/// Exact Euclidean distance from `point` to the union of voxel cubes whose
/// state is in `states` (0 when the point is inside one). +inf if none.
double distance_to_cells(const SlidingGrid& grid, const Vec3& point, StateSet states, bool inflate);

/// Text dump: header `res dx dy dz cx cy cz`, then run-length pairs
/// `<count><F|O|U>` in linear voxel order, whitespace separated.
void dump_grid(const SlidingGrid& grid, std::ostream& out);
SlidingGrid load_grid(std::istream& in, double inflation_radius = 0.0);

}  // namespace faster
