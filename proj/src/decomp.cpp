#include "faster/decomp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace faster {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Ellipsoid E = {m + R diag(s) u : |u| <= 1}; s = (major, minor, minor).
struct Ellipsoid {
  Vec3 center;
  Eigen::Matrix3d R;
  Vec3 semi;

  Vec3 local(const Vec3& p) const { return R.transpose() * (p - center); }
  double metric2(const Vec3& p) const { return local(p).cwiseQuotient(semi).squaredNorm(); }
  Vec3 normalAt(const Vec3& p) const {
    const Vec3 q = local(p).cwiseQuotient(semi.cwiseProduct(semi));
    return (R * q).normalized();
  }
};

Eigen::Matrix3d frameAlong(const Vec3& u) {
  Vec3 helper = std::abs(u.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  Vec3 e2 = u.cross(helper).normalized();
  Vec3 e3 = u.cross(e2);
  Eigen::Matrix3d R;
  R.col(0) = u;
  R.col(1) = e2;
  R.col(2) = e3;
  return R;
}

Ellipsoid seedEllipsoid(const Vec3& a, const Vec3& b, const std::vector<Vec3>& obstacles, double cap) {
  Ellipsoid e;
  e.center = 0.5 * (a + b);
  const double len = (b - a).norm();
  if (len < 1e-9) {
    e.R = Eigen::Matrix3d::Identity();
    double r = cap;
    for (const Vec3& p : obstacles) r = std::min(r, (p - e.center).norm());
    r = std::max(r, 1e-6);
    e.semi = Vec3::Constant(r);
    return e;
  }
  e.R = frameAlong((b - a) / len);
  const double major = 0.5 * len;
  double minor = std::max(cap, major);
  for (const Vec3& p : obstacles) {
    const Vec3 q = e.local(p);
    const double along = q.x() / major;
    if (std::abs(along) >= 1.0) continue;
    const double rho = std::hypot(q.y(), q.z());
    minor = std::min(minor, rho / std::sqrt(1.0 - along * along));
  }
  e.semi = Vec3(major, std::max(minor, 1e-6), std::max(minor, 1e-6));
  return e;
}

}  // namespace

void Polyhedron::addFace(const Vec3& normal, double offset) {
  const Eigen::Index r = A.rows();
  A.conservativeResize(r + 1, Eigen::NoChange);
  c.conservativeResize(r + 1);
  A.row(r) = normal.transpose();
  c(r) = offset;
}

double Polyhedron::violation(const Vec3& x) const {
  if (A.rows() == 0) return -kInf;
  return (A * x - c).maxCoeff();
}

void Corridor::bounds(Vec3& lo, Vec3& hi) const {
  lo = Vec3::Constant(kInf);
  hi = Vec3::Constant(-kInf);
  for (const auto& p : polys) {
    lo = lo.cwiseMin(p.box_lo);
    hi = hi.cwiseMax(p.box_hi);
  }
}

bool Corridor::contains(const Vec3& x, double tol) const {
  for (const auto& p : polys)
    if (p.contains(x, tol)) return true;
  return false;
}

GridPath split_and_truncate(const GridPath& path, double l_max, int p_max) {
  if (!(l_max > 0)) throw std::invalid_argument("split_and_truncate: l_max must be positive");
  if (p_max < 1) throw std::invalid_argument("split_and_truncate: p_max must be >= 1");
  GridPath out;
  if (path.empty()) return out;
  out.vertices.push_back(path.front());
  for (std::size_t i = 1; i < path.size(); ++i) {
    const Vec3 a = path.vertices[i - 1], b = path.vertices[i];
    const int parts = std::max(1, static_cast<int>(std::ceil((b - a).norm() / l_max - 1e-12)));
    for (int k = 1; k <= parts; ++k)
      out.vertices.push_back(k == parts ? b : Vec3(a + (b - a) * (static_cast<double>(k) / parts)));
  }
  if (static_cast<int>(out.size()) > p_max + 1) out.vertices.resize(static_cast<std::size_t>(p_max) + 1);
  return out;
}

std::vector<Vec3> collect_obstacles(const SlidingGrid& grid, StateSet states, const Vec3& lo, const Vec3& hi) {
  std::vector<Vec3> out;
  const Index3 i0 = grid.rawVoxelOf(lo).cwiseMax(Index3::Zero());
  const Index3 i1 = grid.rawVoxelOf(hi).cwiseMin(grid.dims() - Index3::Ones());
  for (int z = i0.z(); z <= i1.z(); ++z)
    for (int y = i0.y(); y <= i1.y(); ++y)
      for (int x = i0.x(); x <= i1.x(); ++x) {
        const Index3 idx(x, y, z);
        if (!states.contains(grid.inflatedState(idx))) continue;
        const Vec3 p = grid.voxelCenter(idx);
        if ((p.array() >= lo.array()).all() && (p.array() <= hi.array()).all()) out.push_back(p);
      }
  return out;
}

Polyhedron decompose_segment(const Vec3& a, const Vec3& b, const std::vector<Vec3>& obstacles, const Vec3& lo,
                             const Vec3& hi) {
  Polyhedron poly;
  poly.seed_start = a;
  poly.seed_end = b;
  poly.box_lo = lo;
  poly.box_hi = hi;
  const Ellipsoid e = seedEllipsoid(a, b, obstacles, (hi - lo).norm());

  std::vector<Vec3> remaining = obstacles;
  while (!remaining.empty()) {
    std::size_t best = 0;
    double best_m = kInf;
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      const double m = e.metric2(remaining[i]);
      if (m < best_m) {
        best_m = m;
        best = i;
      }
    }
    const Vec3 p = remaining[best];
    Vec3 n = e.normalAt(p);
    if (!n.allFinite() || n.norm() == 0) n = (p - e.center).normalized();
    const double through = n.dot(p);
    const double seed_max = std::max(n.dot(a), n.dot(b));
    const double offset = through - std::min(1e-9, 0.5 * (through - seed_max));
    poly.addFace(n, offset);
    remaining.erase(std::remove_if(remaining.begin(), remaining.end(),
                                   [&](const Vec3& q) { return n.dot(q) > offset; }),
                    remaining.end());
  }
  for (int ax = 0; ax < 3; ++ax) {
    Vec3 u = Vec3::Zero();
    u[ax] = 1.0;
    poly.addFace(u, hi[ax]);
    poly.addFace(-u, -lo[ax]);
  }
  return poly;
}

Corridor decompose(const SlidingGrid& grid, const GridPath& path, StateSet obstacle_states, double local_box) {
  Corridor corridor;
  corridor.kind = obstacle_states.contains(VoxelState::Unknown) ? CorridorKind::Safe : CorridorKind::Whole;
  const bool clip = obstacle_states.contains(VoxelState::Unknown);
  const Vec3 ext_lo = grid.origin(), ext_hi = grid.extentMax();
  auto segment = [&](const Vec3& a, const Vec3& b) {
    Vec3 lo = a.cwiseMin(b).array() - local_box;
    Vec3 hi = a.cwiseMax(b).array() + local_box;
    if (clip) {
      lo = lo.cwiseMax(ext_lo);
      hi = hi.cwiseMin(ext_hi);
    }
    const auto obstacles = collect_obstacles(grid, obstacle_states, lo, hi);
    corridor.polys.push_back(decompose_segment(a, b, obstacles, lo, hi));
  };
  if (path.size() == 1) segment(path.front(), path.front());
  for (std::size_t i = 1; i < path.size(); ++i) segment(path.vertices[i - 1], path.vertices[i]);
  return corridor;
}

double volume(const Polyhedron& poly, std::size_t samples, std::uint64_t seed, kernels::Exec exec) {
  const double box = (poly.box_hi - poly.box_lo).prod();
  const std::size_t hits = kernels::countSamples(
      poly.box_lo, poly.box_hi, samples, seed, [&](const Vec3& p) { return poly.contains(p); }, exec);
  return box * static_cast<double>(hits) / static_cast<double>(samples);
}

double volume_in_states(const Polyhedron& poly, const SlidingGrid& grid, StateSet within, std::size_t samples,
                        std::uint64_t seed, kernels::Exec exec) {
  const double box = (poly.box_hi - poly.box_lo).prod();
  const std::size_t hits = kernels::countSamples(
      poly.box_lo, poly.box_hi, samples, seed,
      [&](const Vec3& p) { return poly.contains(p) && within.contains(classify(grid, p, false)); }, exec);
  return box * static_cast<double>(hits) / static_cast<double>(samples);
}

double corridor_volume(const Corridor& corridor, std::size_t samples, std::uint64_t seed, kernels::Exec exec) {
  if (corridor.polys.empty()) return 0.0;
  Vec3 lo, hi;
  corridor.bounds(lo, hi);
  const std::size_t hits =
      kernels::countSamples(lo, hi, samples, seed, [&](const Vec3& p) { return corridor.contains(p); }, exec);
  return (hi - lo).prod() * static_cast<double>(hits) / static_cast<double>(samples);
}

double corridor_volume_in_states(const Corridor& corridor, const SlidingGrid& grid, StateSet within,
                                 std::size_t samples, std::uint64_t seed, kernels::Exec exec) {
  if (corridor.polys.empty()) return 0.0;
  Vec3 lo, hi;
  corridor.bounds(lo, hi);
  const std::size_t hits = kernels::countSamples(
      lo, hi, samples, seed,
      [&](const Vec3& p) { return corridor.contains(p) && within.contains(classify(grid, p, false)); }, exec);
  return (hi - lo).prod() * static_cast<double>(hits) / static_cast<double>(samples);
}

}  // namespace faster
