#include "faster/map.hpp"

#include "faster/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace faster {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Calls fn(idx) for every in-bounds voxel at Chebyshev distance exactly k
// from `c`. Returns false if the ring lies entirely outside the grid.
template <class Fn>
bool forEachRing(const SlidingGrid& grid, const Index3& c, int k, Fn&& fn) {
  const Index3& d = grid.dims();
  const int z0 = std::max(0, c.z() - k), z1 = std::min(d.z() - 1, c.z() + k);
  const int y0 = std::max(0, c.y() - k), y1 = std::min(d.y() - 1, c.y() + k);
  const int x0 = std::max(0, c.x() - k), x1 = std::min(d.x() - 1, c.x() + k);
  if (z0 > z1 || y0 > y1 || x0 > x1) return false;
  bool any = false;
  for (int z = z0; z <= z1; ++z) {
    const bool zface = std::abs(z - c.z()) == k;
    for (int y = y0; y <= y1; ++y) {
      const bool yface = std::abs(y - c.y()) == k;
      if (zface || yface) {
        for (int x = x0; x <= x1; ++x) {
          any = true;
          fn(Index3(x, y, z));
        }
      } else {
        if (c.x() - k >= 0) {
          any = true;
          fn(Index3(c.x() - k, y, z));
        }
        if (k > 0 && c.x() + k < d.x()) {
          any = true;
          fn(Index3(c.x() + k, y, z));
        }
      }
    }
  }
  return any || k == 0;
}

int maxRing(const SlidingGrid& grid, const Index3& c) {
  int m = 0;
  for (int a = 0; a < 3; ++a) m = std::max({m, std::abs(c[a]), std::abs(grid.dims()[a] - 1 - c[a])});
  return m;
}

Index3 clampIndex(const SlidingGrid& grid, const Index3& i) {
  return Index3(std::clamp(i.x(), 0, grid.dims().x() - 1), std::clamp(i.y(), 0, grid.dims().y() - 1),
                std::clamp(i.z(), 0, grid.dims().z() - 1));
}

double pointBoxDistance(const Vec3& p, const Vec3& lo, const Vec3& hi) {
  Vec3 d = (lo - p).cwiseMax(p - hi).cwiseMax(Vec3::Zero());
  return d.norm();
}

VoxelState stateFor(const SlidingGrid& grid, std::size_t i, bool inflate) {
  return inflate ? grid.inflatedState(i) : grid.at(i);
}

}  // namespace

Vec3 snapToLattice(const Vec3& p, double resolution) {
  return (p / resolution).array().round().matrix() * resolution;
}

SlidingGrid::SlidingGrid(double resolution, const Index3& dims, const Vec3& center, double inflation_radius)
    : res_(resolution), dims_(dims), center_(snapToLattice(center, resolution)), inflation_(inflation_radius) {
  if (!(resolution > 0)) throw std::invalid_argument("grid resolution must be positive");
  if ((dims.array() <= 0).any()) throw std::invalid_argument("grid dims must be positive");
  if (!(inflation_radius >= 0)) throw std::invalid_argument("inflation radius must be >= 0");
  cells_.assign(static_cast<std::size_t>(dims.prod()), static_cast<std::uint8_t>(VoxelState::Unknown));
  refreshDistances();
}

bool SlidingGrid::contains(const Vec3& p) const {
  const Vec3 lo = origin(), hi = extentMax();
  return (p.array() >= lo.array()).all() && (p.array() < hi.array()).all();
}

Index3 SlidingGrid::rawVoxelOf(const Vec3& p) const {
  Vec3 rel = (p - origin()) / res_;
  return Index3(static_cast<int>(std::floor(rel.x())), static_cast<int>(std::floor(rel.y())),
                static_cast<int>(std::floor(rel.z())));
}

std::optional<Index3> SlidingGrid::voxelOf(const Vec3& p) const {
  Index3 idx = rawVoxelOf(p);
  if (!inBounds(idx)) return std::nullopt;
  return idx;
}

Index3 SlidingGrid::unlinear(std::size_t i) const {
  const std::size_t nx = static_cast<std::size_t>(dims_.x());
  const std::size_t ny = static_cast<std::size_t>(dims_.y());
  return Index3(static_cast<int>(i % nx), static_cast<int>((i / nx) % ny), static_cast<int>(i / (nx * ny)));
}

void SlidingGrid::fill(VoxelState s) {
  std::fill(cells_.begin(), cells_.end(), static_cast<std::uint8_t>(s));
  dirty_ = true;
}

void SlidingGrid::markFreeSphere(const Vec3& p, double radius) {
  const int k = static_cast<int>(std::ceil(radius / res_)) + 1;
  const Index3 c = rawVoxelOf(p);
  for (int z = c.z() - k; z <= c.z() + k; ++z)
    for (int y = c.y() - k; y <= c.y() + k; ++y)
      for (int x = c.x() - k; x <= c.x() + k; ++x) {
        Index3 idx(x, y, z);
        if (!inBounds(idx)) continue;
        if ((voxelCenter(idx) - p).norm() <= radius && at(idx) != VoxelState::OccupiedKnown)
          set(idx, VoxelState::FreeKnown);
      }
  refreshDistances();
}

void SlidingGrid::fenceAltitude(double z_lo, double z_hi) {
  const std::size_t layer = static_cast<std::size_t>(dims_.x()) * static_cast<std::size_t>(dims_.y());
  const auto occ = static_cast<std::uint8_t>(VoxelState::OccupiedKnown);
  for (int z = 0; z < dims_.z(); ++z) {
    const double h = origin().z() + (z + 0.5) * res_;
    if (h >= z_lo && h <= z_hi) continue;
    auto first = cells_.begin() + static_cast<std::ptrdiff_t>(layer * static_cast<std::size_t>(z));
    if (std::any_of(first, first + static_cast<std::ptrdiff_t>(layer), [&](std::uint8_t c) { return c != occ; })) {
      std::fill(first, first + static_cast<std::ptrdiff_t>(layer), occ);
      dirty_ = true;
    }
  }
}

void SlidingGrid::refreshDistances() {
  const std::size_t n = cells_.size();
  std::vector<std::uint8_t> seed(n);
  for (std::size_t i = 0; i < n; ++i) seed[i] = cells_[i] == static_cast<std::uint8_t>(VoxelState::OccupiedKnown);
  kernels::squaredDistanceTransform(seed, dims_, occ_dist_);
  for (std::size_t i = 0; i < n; ++i) seed[i] = cells_[i] == static_cast<std::uint8_t>(VoxelState::Unknown);
  kernels::squaredDistanceTransform(seed, dims_, unk_dist_);
  std::size_t i = 0;
  for (int z = 0; z < dims_.z(); ++z) {
    const double bz = std::min(z + 0.5, dims_.z() - z - 0.5);
    for (int y = 0; y < dims_.y(); ++y) {
      const double byz = std::min({bz, y + 0.5, dims_.y() - y - 0.5});
      for (int x = 0; x < dims_.x(); ++x, ++i) {
        const double b = std::min({byz, x + 0.5, dims_.x() - x - 0.5});
        occ_dist_[i] = std::sqrt(occ_dist_[i]) * res_;
        unk_dist_[i] = std::min(std::sqrt(unk_dist_[i]), b) * res_;
      }
    }
  }
  dirty_ = false;
}

VoxelState SlidingGrid::inflatedState(std::size_t i) const {
  constexpr double tol = 1e-9;
  if (occ_dist_[i] <= inflation_ + tol) return VoxelState::OccupiedKnown;
  if (unk_dist_[i] <= inflation_ + tol) return VoxelState::Unknown;
  return at(i);
}

double SlidingGrid::boundaryDistance(const Vec3& p) const {
  if (!contains(p)) return 0.0;
  const Vec3 lo = origin(), hi = extentMax();
  return std::min((p - lo).minCoeff(), (hi - p).minCoeff());
}

// --------------------------------------------------------------------------
// Fusion

namespace {

// 3-D Bresenham between voxel indices a and b. The coordinate along each
// axis at driving step i is a + round_half_up(d * i / n).
template <class Fn>
void bresenham(const Index3& a, const Index3& b, Fn&& visit) {
  const Eigen::Matrix<std::int64_t, 3, 1> d = (b - a).cast<std::int64_t>();
  const std::int64_t n = d.cwiseAbs().maxCoeff();
  if (n == 0) {
    visit(a, true);
    return;
  }
  Eigen::Matrix<std::int64_t, 3, 1> num = Eigen::Matrix<std::int64_t, 3, 1>::Constant(n);
  Eigen::Matrix<std::int64_t, 3, 1> off = Eigen::Matrix<std::int64_t, 3, 1>::Zero();
  const std::int64_t den = 2 * n;
  for (std::int64_t i = 0; i <= n; ++i) {
    Index3 v = a + off.cast<int>();
    if (!visit(v, i == n)) return;
    for (int ax = 0; ax < 3; ++ax) {
      num[ax] += 2 * d[ax];
      while (num[ax] >= den * (off[ax] + 1)) ++off[ax];
      while (num[ax] < den * off[ax]) --off[ax];
    }
  }
}

}  // namespace

bool fuse_scan(SlidingGrid& grid, const DepthScan& scan, bool refresh) {
  auto start = grid.voxelOf(scan.origin);
  if (!start) return false;
  if (scan.rays.empty()) return true;

  std::vector<std::size_t> free_cells, occ_cells;
  for (const auto& ray : scan.rays) {
    const double range = ray.hit ? ray.range : scan.max_range;
    const Vec3 end = scan.origin + ray.direction * range;
    const Index3 target = grid.rawVoxelOf(end);
    bresenham(*start, target, [&](const Index3& v, bool last) {
      if (!grid.inBounds(v)) return false;
      if (last && ray.hit)
        occ_cells.push_back(grid.linear(v));
      else
        free_cells.push_back(grid.linear(v));
      return true;
    });
  }
  for (std::size_t i : free_cells)
    if (grid.at(i) != VoxelState::OccupiedKnown) grid.set(i, VoxelState::FreeKnown);
  for (std::size_t i : occ_cells) grid.set(i, VoxelState::OccupiedKnown);
  if (refresh) grid.refreshDistances();
  return true;
}

void recenter(SlidingGrid& grid, const Vec3& new_center, bool refresh) {
  const Vec3 snapped = snapToLattice(new_center, grid.res_);
  const Vec3 shift_m = (snapped - grid.center_) / grid.res_;
  const Index3 shift(static_cast<int>(std::lround(shift_m.x())), static_cast<int>(std::lround(shift_m.y())),
                     static_cast<int>(std::lround(shift_m.z())));
  if (shift == Index3::Zero()) {
    grid.center_ = snapped;
    return;
  }
  std::vector<std::uint8_t> next(grid.cells_.size(), static_cast<std::uint8_t>(VoxelState::Unknown));
  for (std::size_t i = 0; i < next.size(); ++i) {
    const Index3 old = grid.unlinear(i) + shift;
    if (grid.inBounds(old)) next[i] = grid.cells_[grid.linear(old)];
  }
  grid.cells_ = std::move(next);
  grid.center_ = snapped;
  grid.dirty_ = true;
  if (refresh) grid.refreshDistances();
}

// --------------------------------------------------------------------------
// Queries

namespace {

// Whether any voxel centre with raw state `s` lies within `r` of p, by a
// local exhaustive scan.
bool anyCenterWithin(const SlidingGrid& grid, const Vec3& p, VoxelState s, double r) {
  const double res = grid.resolution();
  const Vec3 lo = (p.array() - r).matrix() - grid.origin();
  const Vec3 hi = (p.array() + r).matrix() - grid.origin();
  const Index3 i0 = clampIndex(grid, Index3(static_cast<int>(std::floor(lo.x() / res - 0.5)),
                                            static_cast<int>(std::floor(lo.y() / res - 0.5)),
                                            static_cast<int>(std::floor(lo.z() / res - 0.5))));
  const Index3 i1 = clampIndex(grid, Index3(static_cast<int>(std::ceil(hi.x() / res)),
                                            static_cast<int>(std::ceil(hi.y() / res)),
                                            static_cast<int>(std::ceil(hi.z() / res))));
  const double r2 = (r + 1e-9) * (r + 1e-9);
  for (int z = i0.z(); z <= i1.z(); ++z)
    for (int y = i0.y(); y <= i1.y(); ++y)
      for (int x = i0.x(); x <= i1.x(); ++x) {
        Index3 idx(x, y, z);
        if (grid.at(idx) == s && (grid.voxelCenter(idx) - p).squaredNorm() <= r2) return true;
      }
  return false;
}

bool withinInflation(const SlidingGrid& grid, const Vec3& p, const Index3& idx, VoxelState s) {
  const double r = grid.inflationRadius();
  const std::size_t i = grid.linear(idx);
  const double field = s == VoxelState::OccupiedKnown ? grid.occupiedDistance(i) : grid.unknownDistance(i);
  const double e = (p - grid.voxelCenter(idx)).norm();
  if (s == VoxelState::Unknown && grid.boundaryDistance(p) <= r + 1e-9) return true;
  if (field - e > r + 1e-9) return false;
  if (field + e <= r) return true;
  return anyCenterWithin(grid, p, s, r);
}

}  // namespace

VoxelState classify(const SlidingGrid& grid, const Vec3& point, bool inflate) {
  auto idx = grid.voxelOf(point);
  if (!idx) return VoxelState::Unknown;
  if (!inflate) return grid.at(*idx);
  if (!grid.distancesFresh()) throw std::logic_error("classify: distance fields are stale");
  if (withinInflation(grid, point, *idx, VoxelState::OccupiedKnown)) return VoxelState::OccupiedKnown;
  if (withinInflation(grid, point, *idx, VoxelState::Unknown)) return VoxelState::Unknown;
  return grid.at(*idx);
}

std::optional<NearestCell> nearest_cell(const SlidingGrid& grid, const Vec3& point, StateSet states,
                                        bool inflate) {
  if (states.empty()) throw std::invalid_argument("nearest_cell: empty state set");
  std::optional<NearestCell> best;
  if (states.contains(VoxelState::Unknown)) {
    if (!grid.contains(point)) return NearestCell{point, 0.0};
    const Vec3 lo = grid.origin(), hi = grid.extentMax();
    double d = kInf;
    Vec3 proj = point;
    for (int a = 0; a < 3; ++a) {
      if (point[a] - lo[a] < d) {
        d = point[a] - lo[a];
        proj = point;
        proj[a] = lo[a];
      }
      if (hi[a] - point[a] < d) {
        d = hi[a] - point[a];
        proj = point;
        proj[a] = hi[a];
      }
    }
    best = NearestCell{proj, d};
  }
  const double res = grid.resolution();
  const Index3 c = clampIndex(grid, grid.rawVoxelOf(point));
  const int kmax = maxRing(grid, c);
  for (int k = 0; k <= kmax; ++k) {
    if (best && (k - 0.5) * res > best->distance) break;
    forEachRing(grid, c, k, [&](const Index3& idx) {
      const std::size_t i = grid.linear(idx);
      if (!states.contains(stateFor(grid, i, inflate))) return;
      const Vec3 center = grid.voxelCenter(idx);
      const double d = (center - point).norm();
      if (!best || d < best->distance) best = NearestCell{center, d};
    });
  }
  return best;
}

double distance_to_cells(const SlidingGrid& grid, const Vec3& point, StateSet states, bool inflate) {
  double best = kInf;
  if (states.contains(VoxelState::Unknown)) best = grid.boundaryDistance(point);
  if (best == 0.0) return 0.0;
  const double res = grid.resolution();
  const Index3 c = clampIndex(grid, grid.rawVoxelOf(point));
  const int kmax = maxRing(grid, c);
  int kstart = 0;
  if (!states.contains(VoxelState::FreeKnown) && grid.contains(point)) {
    // Skip rings that the distance fields prove empty.
    const std::size_t i = grid.linear(c);
    const double e = (point - grid.voxelCenter(c)).norm();
    const double hd = 0.5 * std::sqrt(3.0) * res;
    const double infl = inflate ? grid.inflationRadius() : 0.0;
    double lb = kInf;
    if (states.contains(VoxelState::OccupiedKnown)) lb = std::min(lb, grid.occupiedDistance(i) - e - hd - infl);
    if (states.contains(VoxelState::Unknown)) lb = std::min(lb, grid.unknownDistance(i) - e - hd - infl);
    if (lb >= best) return best;
    if (lb > 0) kstart = std::max(0, static_cast<int>(std::floor(lb / (std::sqrt(3.0) * res))) - 1);
  }
  for (int k = kstart; k <= kmax; ++k) {
    if ((k - 1) * res >= best) break;
    forEachRing(grid, c, k, [&](const Index3& idx) {
      const std::size_t i = grid.linear(idx);
      if (!states.contains(stateFor(grid, i, inflate))) return;
      const Vec3 lo = grid.origin() + idx.cast<double>() * res;
      const double d = pointBoxDistance(point, lo, (lo.array() + res).matrix());
      best = std::min(best, d);
    });
  }
  return best;
}

// --------------------------------------------------------------------------
// Dump format

void dump_grid(const SlidingGrid& grid, std::ostream& out) {
  std::ostringstream header;
  header.precision(17);
  header << grid.resolution() << ' ' << grid.dims().x() << ' ' << grid.dims().y() << ' ' << grid.dims().z() << ' '
         << grid.center().x() << ' ' << grid.center().y() << ' ' << grid.center().z();
  out << header.str() << '\n';
  const auto& cells = grid.cells();
  std::size_t i = 0, col = 0;
  while (i < cells.size()) {
    std::size_t j = i;
    while (j < cells.size() && cells[j] == cells[i]) ++j;
    out << (j - i) << stateChar(static_cast<VoxelState>(cells[i]));
    i = j;
    out << (++col % 16 == 0 || i == cells.size() ? '\n' : ' ');
  }
}

SlidingGrid load_grid(std::istream& in, double inflation_radius) {
  double res = 0;
  Index3 dims;
  Vec3 center;
  if (!(in >> res >> dims.x() >> dims.y() >> dims.z() >> center.x() >> center.y() >> center.z()))
    throw std::runtime_error("grid dump: bad header");
  SlidingGrid grid(res, dims, center, inflation_radius);
  std::size_t i = 0;
  std::string token;
  while (in >> token) {
    if (token.size() < 2) throw std::runtime_error("grid dump: bad run '" + token + "'");
    const VoxelState s = stateFromChar(token.back());
    const std::size_t count = std::stoull(token.substr(0, token.size() - 1));
    if (i + count > grid.size()) throw std::runtime_error("grid dump: too many voxels");
    for (std::size_t k = 0; k < count; ++k, ++i) grid.set(i, s);
  }
  if (i != grid.size()) throw std::runtime_error("grid dump: too few voxels");
  grid.refreshDistances();
  return grid;
}

}  // namespace faster
