#include "faster/global_path.hpp"
#include "faster/traj.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace faster {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Position on a polyline: segment index and the point itself.
struct Cursor {
  std::size_t seg = 0;  // the point lies on [v[seg], v[seg+1]]
  Vec3 point;
};

// Smallest t in [0, 1] with |p0 + t (p1 - p0) - c| = r, if any.
std::optional<double> firstSphereRoot(const Vec3& p0, const Vec3& p1, const Vec3& c, double r) {
  const Vec3 d = p1 - p0, m = p0 - c;
  const double a = d.squaredNorm();
  const double b = 2.0 * m.dot(d);
  const double cc = m.squaredNorm() - r * r;
  if (a == 0.0) return cc == 0.0 ? std::optional<double>(0.0) : std::nullopt;
  const double disc = b * b - 4 * a * cc;
  if (disc < 0) return std::nullopt;
  const double sq = std::sqrt(disc);
  const double t0 = (-b - sq) / (2 * a), t1 = (-b + sq) / (2 * a);
  if (t0 >= 0 && t0 <= 1) return t0;
  if (t1 >= 0 && t1 <= 1) return t1;
  return std::nullopt;
}

// First point from `from` onward at distance `r` from `center`.
std::optional<Cursor> sphereExit(const GridPath& path, const Cursor& from, const Vec3& center, double r) {
  const auto& v = path.vertices;
  for (std::size_t s = from.seg; s + 1 < v.size(); ++s) {
    const Vec3 p0 = s == from.seg ? from.point : v[s];
    if (auto t = firstSphereRoot(p0, v[s + 1], center, r)) return Cursor{s, p0 + *t * (v[s + 1] - p0)};
  }
  return std::nullopt;
}

// Lower bound of the distance from p to the set classified in `states`
// (inflate: balls of the inflation radius around voxel centres, plus the
// voxel cubes themselves and the band near the extent boundary). Returns 0
// when no bound is available.
double fieldLowerBound(const SlidingGrid& grid, const Vec3& p, StateSet states, bool inflate) {
  if (states.contains(VoxelState::FreeKnown) || !grid.contains(p)) return 0.0;
  const Index3 c = grid.rawVoxelOf(p);
  const std::size_t i = grid.linear(c);
  const double e = (p - grid.voxelCenter(c)).norm();
  const double half_diag = 0.5 * std::sqrt(3.0) * grid.resolution();
  const double slack = inflate ? std::max(grid.inflationRadius(), half_diag) : half_diag;
  double lb = kInf;
  if (states.contains(VoxelState::OccupiedKnown)) lb = std::min(lb, grid.occupiedDistance(i) - e - slack);
  if (states.contains(VoxelState::Unknown)) lb = std::min(lb, grid.unknownDistance(i) - e - slack);
  return std::max(0.0, lb);
}

// Distance from p to the classified set, exact up to the precedence rule
// (with inflation, Unknown balls overlapped by Occupied ones still count,
// which can only shrink the result).
double classifiedDistance(const SlidingGrid& grid, const Vec3& p, StateSet states, bool inflate) {
  const double lb = fieldLowerBound(grid, p, states, inflate);
  if (lb >= 3.0 * grid.resolution()) return lb;
  if (!inflate) return distance_to_cells(grid, p, states, false);
  // Inside the inflation balls or inside a voxel of a matching raw state.
  const double cubes = distance_to_cells(grid, p, states, false);
  auto near = nearest_cell(grid, p, states, false);
  if (!near) return cubes;
  return std::min(cubes, std::max(0.0, near->distance - grid.inflationRadius()));
}

// Exact first point of [p0, p1] classified in `states`, found by splitting
// the segment at every parameter where the classification can change.
std::optional<double> firstEntry(const SlidingGrid& grid, const Vec3& p0, const Vec3& p1, StateSet states,
                                 bool inflate) {
  std::vector<double> ts{0.0, 1.0};
  const Vec3 d = p1 - p0;
  const double res = grid.resolution();
  const double infl = inflate ? grid.inflationRadius() : 0.0;
  const Vec3 lo = grid.origin(), hi = grid.extentMax();
  auto planeHits = [&](int axis, double value) {
    if (d[axis] == 0.0) return;
    const double t = (value - p0[axis]) / d[axis];
    if (t > 0 && t < 1) ts.push_back(t);
  };
  for (int a = 0; a < 3; ++a) {
    for (double v : {lo[a], hi[a], lo[a] + infl, hi[a] - infl}) planeHits(a, v);
    if (d[a] != 0.0) {
      const double u0 = (std::min(p0[a], p1[a]) - lo[a]) / res;
      const double u1 = (std::max(p0[a], p1[a]) - lo[a]) / res;
      for (double k = std::ceil(u0); k <= u1; k += 1.0) planeHits(a, lo[a] + k * res);
    }
  }
  if (inflate) {
    const Vec3 blo = p0.cwiseMin(p1).array() - infl - res;
    const Vec3 bhi = p0.cwiseMax(p1).array() + infl + res;
    const Index3 i0 = grid.rawVoxelOf(blo).cwiseMax(Index3::Zero());
    const Index3 i1 = grid.rawVoxelOf(bhi).cwiseMin(grid.dims() - Index3::Ones());
    const double a2 = d.squaredNorm();
    for (int z = i0.z(); z <= i1.z(); ++z)
      for (int y = i0.y(); y <= i1.y(); ++y)
        for (int x = i0.x(); x <= i1.x(); ++x) {
          const Index3 idx(x, y, z);
          if (grid.at(idx) == VoxelState::FreeKnown || a2 == 0.0) continue;
          const Vec3 m = p0 - grid.voxelCenter(idx);
          const double b = 2.0 * m.dot(d), cc = m.squaredNorm() - infl * infl;
          const double disc = b * b - 4 * a2 * cc;
          if (disc < 0) continue;
          const double sq = std::sqrt(disc);
          for (double t : {(-b - sq) / (2 * a2), (-b + sq) / (2 * a2)})
            if (t > 0 && t < 1) ts.push_back(t);
        }
  }
  if (states.contains(classify(grid, p0, inflate))) return 0.0;
  std::sort(ts.begin(), ts.end());
  for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
    if (ts[k + 1] - ts[k] <= 0.0) continue;
    const Vec3 mid = p0 + 0.5 * (ts[k] + ts[k + 1]) * d;
    if (states.contains(classify(grid, mid, inflate))) return ts[k];
    const Vec3 end = p0 + ts[k + 1] * d;
    if (states.contains(classify(grid, end, inflate))) return ts[k + 1];
  }
  return std::nullopt;
}

// Advances `from` by arc length `s` (or to the path end).
Cursor advance(const GridPath& path, const Cursor& from, double s, bool& at_end) {
  const auto& v = path.vertices;
  Cursor c = from;
  at_end = false;
  while (c.seg + 1 < v.size()) {
    const double left = (v[c.seg + 1] - c.point).norm();
    if (s <= left && left > 0) {
      c.point += (v[c.seg + 1] - c.point) * (s / left);
      return c;
    }
    s -= left;
    c.point = v[c.seg + 1];
    if (c.seg + 2 >= v.size()) break;
    ++c.seg;
  }
  at_end = true;
  return c;
}

// Exact entry within arc length `window` from `from`.
std::optional<Vec3> entryWithin(const GridPath& path, const Cursor& from, double window, const SlidingGrid& grid,
                                StateSet states, bool inflate) {
  const auto& v = path.vertices;
  Cursor c = from;
  double left = window;
  while (c.seg + 1 < v.size() && left > 0) {
    const Vec3 seg_end = v[c.seg + 1];
    const double len = (seg_end - c.point).norm();
    const Vec3 stop = len > left ? Vec3(c.point + (seg_end - c.point) * (left / len)) : seg_end;
    if (auto t = firstEntry(grid, c.point, stop, states, inflate)) return Vec3(c.point + *t * (stop - c.point));
    left -= std::min(len, left);
    c.point = seg_end;
    ++c.seg;
  }
  return std::nullopt;
}

double polylineLength(const std::vector<Vec3>& v) {
  double s = 0;
  for (std::size_t i = 1; i < v.size(); ++i) s += (v[i] - v[i - 1]).norm();
  return s;
}

}  // namespace

double GridPath::length() const { return polylineLength(vertices); }

double GridPath::lengthFrom(const Vec3& point) const {
  if (vertices.size() < 2) return 0.0;
  double best = kInf, arc_best = 0.0, arc = 0.0;
  for (std::size_t i = 0; i + 1 < vertices.size(); ++i) {
    const Vec3 a = vertices[i], d = vertices[i + 1] - a;
    const double len = d.norm();
    const double t = len > 0 ? std::clamp((point - a).dot(d) / (len * len), 0.0, 1.0) : 0.0;
    const double dist = (a + t * d - point).norm();
    if (dist < best - 1e-12) {
      best = dist;
      arc_best = arc + t * len;
    }
    arc += len;
  }
  return arc - arc_best;
}

GridPath GridPath::reversed() const {
  GridPath r{vertices};
  std::reverse(r.vertices.begin(), r.vertices.end());
  return r;
}

Vec3 GridPath::pointAt(double s) const {
  if (vertices.empty()) throw std::logic_error("pointAt on empty path");
  bool end = false;
  return advance(*this, Cursor{0, vertices.front()}, std::max(0.0, s), end).point;
}

GridPath simplify(const GridPath& path) {
  GridPath out;
  for (const Vec3& p : path.vertices) {
    if (!out.vertices.empty() && (p - out.vertices.back()).norm() < 1e-12) continue;
    while (out.vertices.size() >= 2) {
      const Vec3& a = out.vertices[out.vertices.size() - 2];
      const Vec3& b = out.vertices.back();
      const Vec3 u = b - a, w = p - b;
      if (u.cross(w).norm() <= 1e-9 * u.norm() * w.norm() && u.dot(w) > 0)
        out.vertices.pop_back();
      else
        break;
    }
    out.vertices.push_back(p);
  }
  return out;
}

namespace {

// Distance from p to the nearest blocked voxel centre exceeds `need`.
bool pointClear(const SlidingGrid& grid, const Vec3& p, StateSet blocked, double need) {
  const auto v = grid.voxelOf(p);
  if (!v) return !blocked.contains(VoxelState::Unknown);
  const std::size_t i = grid.linear(*v);
  double field = std::numeric_limits<double>::infinity();
  if (blocked.contains(VoxelState::OccupiedKnown)) field = std::min(field, grid.occupiedDistance(i));
  if (blocked.contains(VoxelState::Unknown)) field = std::min(field, grid.unknownDistance(i));
  const double hd = 0.5 * std::sqrt(3.0) * grid.resolution();
  if (field - hd > need) return true;
  if (field + hd <= need) return false;
  const auto near = nearest_cell(grid, p, blocked, false);
  return !near || near->distance > need;
}

bool segmentClear(const SlidingGrid& grid, const Vec3& a, const Vec3& b, StateSet blocked) {
  const double res = grid.resolution();
  const double step = 0.25 * res;
  // Half a step covers the gap between samples; the rest keeps the seed
  // visibly away from the obstacle points used by the decomposition.
  const double need = grid.inflationRadius() + 0.5 * step + 0.25 * res;
  const double len = (b - a).norm();
  const int n = std::max(1, static_cast<int>(std::ceil(len / step)));
  for (int k = 0; k <= n; ++k)
    if (!pointClear(grid, a + (b - a) * (static_cast<double>(k) / n), blocked, need)) return false;
  return true;
}

}  // namespace

GridPath shortcut_path(const GridPath& path, const SlidingGrid& grid, StateSet blocked) {
  if (path.size() <= 2) return path;
  GridPath out;
  std::size_t i = 0;
  out.vertices.push_back(path.vertices[0]);
  while (i + 1 < path.size()) {
    std::size_t j = i + 1;
    for (std::size_t k = path.size() - 1; k > i + 1; --k)
      if (segmentClear(grid, path.vertices[i], path.vertices[k], blocked)) {
        j = k;
        break;
      }
    out.vertices.push_back(path.vertices[j]);
    i = j;
  }
  return out;
}

std::optional<Vec3> find_intersection(const GridPath& path, const SlidingGrid& grid, StateSet states, double eps,
                                      bool inflate) {
  if (!(eps > 0)) throw std::invalid_argument("find_intersection: eps must be positive");
  if (path.empty()) return std::nullopt;
  if (states.contains(classify(grid, path.front(), inflate))) return path.front();
  if (path.size() < 2) return std::nullopt;
  Cursor v{0, path.front()};
  while (true) {
    const double r = classifiedDistance(grid, v.point, states, inflate);
    if (r < eps) {
      // Close to the set: settle it with an exact local search, and keep
      // marching if the path only grazes it.
      const double window = 2.0 * eps;
      if (auto hit = entryWithin(path, v, window, grid, states, inflate)) return hit;
      bool end = false;
      v = advance(path, v, window, end);
      if (end) return std::nullopt;
      continue;
    }
    auto m = sphereExit(path, v, v.point, r);
    if (!m) return std::nullopt;
    v = *m;
  }
}

std::optional<Vec3> path_sphere_exit(const GridPath& path, const Vec3& center, double radius) {
  if (!(radius > 0)) throw std::invalid_argument("path_sphere_exit: radius must be positive");
  if (path.empty()) return std::nullopt;
  auto c = sphereExit(path, Cursor{0, path.front()}, center, radius);
  if (!c) return std::nullopt;
  return c->point;
}

GridPath clip_to_sphere(const GridPath& path, const Vec3& center, double radius) {
  if (path.empty()) return path;
  auto c = sphereExit(path, Cursor{0, path.front()}, center, radius);
  if (!c) return path;
  GridPath out;
  out.vertices.assign(path.vertices.begin(), path.vertices.begin() + static_cast<long>(c->seg) + 1);
  out.vertices.push_back(c->point);
  out = simplify(out);
  if (out.size() == 1) out.vertices.push_back(out.vertices.front());
  return out;
}

GridPath reroot(const GridPath& prev, const Vec3& root) {
  if (prev.empty()) return GridPath{{root}};
  std::size_t best_seg = 0;
  double best = kInf;
  Vec3 best_pt = prev.front();
  for (std::size_t i = 0; i + 1 < prev.size(); ++i) {
    const Vec3 a = prev.vertices[i], d = prev.vertices[i + 1] - a;
    const double len2 = d.squaredNorm();
    const double t = len2 > 0 ? std::clamp((root - a).dot(d) / len2, 0.0, 1.0) : 0.0;
    const Vec3 q = a + t * d;
    const double dist = (q - root).norm();
    if (dist < best - 1e-12) {
      best = dist;
      best_seg = i;
      best_pt = q;
    }
  }
  GridPath out;
  out.vertices.push_back(root);
  out.vertices.push_back(best_pt);
  for (std::size_t i = best_seg + 1; i < prev.size(); ++i) out.vertices.push_back(prev.vertices[i]);
  out = simplify(out);
  if (out.size() == 1) out.vertices.push_back(out.vertices.front());
  return out;
}

std::optional<GridPath> repair_previous(const GridPath& prev, const SlidingGrid& grid, const Vec3& A, const Vec3& G,
                                        double eps) {
  if (prev.empty()) throw std::invalid_argument("repair_previous: empty path");
  const GridPath base = reroot(prev, A);
  const StateSet occ{VoxelState::OccupiedKnown};
  auto i1 = find_intersection(base, grid, occ, eps, true);
  if (!i1) return base;
  auto i2 = find_intersection(base.reversed(), grid, occ, eps, true);
  if (!i2) return std::nullopt;
  const double snap = eps + 2.0 * grid.resolution();
  JpsOptions first{kInf, snap, false};
  JpsOptions middle{snap, snap, false};
  JpsOptions last{snap, 0.0, false};
  auto p1 = jps_search(grid, A, *i1, first);
  if (!p1) return std::nullopt;
  auto p2 = jps_search(grid, *i1, *i2, middle);
  if (!p2) return std::nullopt;
  auto p3 = jps_search(grid, *i2, G, last);
  if (!p3) return std::nullopt;
  GridPath out;
  out.vertices.push_back(A);
  for (const auto* part : {&*p1, &*p2, &*p3})
    out.vertices.insert(out.vertices.end(), part->vertices.begin(), part->vertices.end());
  out.vertices.push_back(G);
  return simplify(out);
}

DirectionChoice choose_direction(const GridPath& jps_a, const GridPath& jps_b, const State& A, const Vec3& G,
                                 double r, double alpha0, const Limits& limits, int N) {
  (void)G;
  DirectionChoice out;
  out.chosen = jps_a;
  const Cursor start_a{0, jps_a.front()}, start_b{0, jps_b.front()};
  const auto ca = sphereExit(jps_a, start_a, A.x, r);
  const auto cb = sphereExit(jps_b, start_b, A.x, r);
  const Vec3 C = ca ? ca->point : jps_a.back();
  const Vec3 D = cb ? cb->point : jps_b.back();
  const Vec3 u = C - A.x, w = D - A.x;
  if (u.norm() > 0 && w.norm() > 0)
    out.angle_cad = std::acos(std::clamp(u.dot(w) / (u.norm() * w.norm()), -1.0, 1.0));
  if (!(out.angle_cad > alpha0)) return out;
  out.evaluated = true;
  auto cost = [&](const GridPath& path, const std::optional<Cursor>& c, const Vec3& P) {
    double remaining = 0.0;
    if (c) {
      remaining = (path.vertices[c->seg + 1] - c->point).norm();
      for (std::size_t i = c->seg + 1; i + 1 < path.size(); ++i)
        remaining += (path.vertices[i + 1] - path.vertices[i]).norm();
    }
    return N * dt_lower_bound(A, P, limits, N, 1.0) + remaining / limits.v_max;
  };
  out.cost_a = cost(jps_a, ca, C);
  out.cost_b = cost(jps_b, cb, D);
  if (out.cost_b < out.cost_a) {
    out.chosen = jps_b;
    out.chose_b = true;
  }
  return out;
}

}  // namespace faster
