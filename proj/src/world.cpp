#include "faster/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace faster {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double boxDistance(const Box& b, const Vec3& p) {
  const Vec3 d = (b.lo - p).cwiseMax(p - b.hi).cwiseMax(Vec3::Zero());
  return d.norm();
}

double cylinderDistance(const Cylinder& c, const Vec3& p) {
  const double dr = std::max(std::hypot(p.x() - c.x, p.y() - c.y) - c.radius, 0.0);
  const double dz = std::max({c.z_lo - p.z(), p.z() - c.z_hi, 0.0});
  return std::hypot(dr, dz);
}

Box wall(double x0, double y0, double x1, double y1) {
  return {Vec3(std::min(x0, x1), std::min(y0, y1), -10.0), Vec3(std::max(x0, x1), std::max(y0, y1), 10.0)};
}

}  // namespace

double World::clearance(const Vec3& p) const {
  double d = kInf;
  for (const auto& b : boxes) d = std::min(d, boxDistance(b, p));
  for (const auto& c : cylinders) d = std::min(d, cylinderDistance(c, p));
  return d;
}

std::optional<double> rayBox(const Box& b, const Vec3& origin, const Vec3& dir) {
  double t0 = 0.0, t1 = kInf;
  for (int ax = 0; ax < 3; ++ax) {
    if (std::abs(dir[ax]) < 1e-15) {
      if (origin[ax] < b.lo[ax] || origin[ax] > b.hi[ax]) return std::nullopt;
      continue;
    }
    double ta = (b.lo[ax] - origin[ax]) / dir[ax];
    double tb = (b.hi[ax] - origin[ax]) / dir[ax];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  return t0;
}

std::optional<double> rayCylinder(const Cylinder& c, const Vec3& origin, const Vec3& dir) {
  const double ox = origin.x() - c.x, oy = origin.y() - c.y;
  const double a = dir.x() * dir.x() + dir.y() * dir.y();
  const double b = 2.0 * (ox * dir.x() + oy * dir.y());
  const double cc = ox * ox + oy * oy - c.radius * c.radius;
  double best = kInf;
  auto zOk = [&](double t) {
    const double z = origin.z() + t * dir.z();
    return z >= c.z_lo && z <= c.z_hi;
  };
  if (cc <= 0.0 && zOk(0.0)) return 0.0;
  // Side surface.
  if (a > 1e-15) {
    const double disc = b * b - 4.0 * a * cc;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      for (double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)})
        if (t >= 0.0 && zOk(t)) {
          best = std::min(best, t);
          break;
        }
    }
  }
  // Caps.
  if (std::abs(dir.z()) > 1e-15) {
    for (double zc : {c.z_lo, c.z_hi}) {
      const double t = (zc - origin.z()) / dir.z();
      if (t < 0.0) continue;
      const double x = ox + t * dir.x(), y = oy + t * dir.y();
      if (x * x + y * y <= c.radius * c.radius) best = std::min(best, t);
    }
  }
  if (best == kInf) return std::nullopt;
  return best;
}

std::optional<double> World::raycast(const Vec3& origin, const Vec3& dir, double max_range) const {
  double best = kInf;
  for (const auto& b : boxes)
    if (auto t = rayBox(b, origin, dir)) best = std::min(best, *t);
  for (const auto& c : cylinders)
    if (auto t = rayCylinder(c, origin, dir)) best = std::min(best, *t);
  if (best > max_range) return std::nullopt;
  return best;
}

World make_forest(const ForestParams& p, std::uint64_t seed) {
  if (!(p.density >= 0) || !(p.length > 0) || !(p.width > 0) || !(p.r_min > 0) || p.r_max < p.r_min)
    throw std::invalid_argument("make_forest: bad parameters");
  World w;
  w.name = "forest";
  w.start = Vec3(0.0, 0.0, p.altitude);
  w.goal = Vec3(p.length, 0.0, p.altitude);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, p.length), uy(-0.5 * p.width, 0.5 * p.width),
      ur(p.r_min, p.r_max);
  const int count = static_cast<int>(std::lround(p.density * p.length * p.width));
  int attempts = 0;
  while (static_cast<int>(w.cylinders.size()) < count && attempts < 100 * count + 100) {
    ++attempts;
    Cylinder c;
    c.x = ux(rng);
    c.y = uy(rng);
    c.radius = ur(rng);
    const double ds = std::hypot(c.x - w.start.x(), c.y - w.start.y());
    const double dg = std::hypot(c.x - w.goal.x(), c.y - w.goal.y());
    if (ds < p.keep_out + c.radius || dg < p.keep_out + c.radius) continue;
    w.cylinders.push_back(c);
  }
  return w;
}

World make_corner(const CornerParams& p, std::uint64_t seed) {
  World w;
  w.name = "corner";
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.25, 0.25);
  w.start = Vec3(p.corner_x - p.approach, 0.0, p.altitude);
  w.goal = Vec3(p.corner_x + 3.0 + jitter(rng), p.wall_y + 8.5 + jitter(rng), p.altitude);
  w.boxes.push_back(wall(p.corner_x - p.approach - 20.0, p.wall_y, p.corner_x, 30.0));
  w.landmark = Vec3(p.corner_x, p.wall_y, p.altitude);
  if (p.hidden_cylinder) {
    Cylinder c;
    c.x = p.corner_x + p.cylinder_dx + jitter(rng);
    c.y = p.wall_y + p.cylinder_dy + jitter(rng);
    c.radius = p.cylinder_radius;
    w.cylinders.push_back(c);
  }
  return w;
}

World make_bugtrap(const BugtrapParams& p) {
  if (!(p.opening > 0) || !(p.size > p.opening)) throw std::invalid_argument("make_bugtrap: bad parameters");
  World w;
  w.name = "bugtrap";
  const double cx = 6.0, h = 0.5 * p.size, t = p.thickness;
  w.start = Vec3(0.0, 0.0, p.altitude);
  w.goal = Vec3(cx + h + 4.0, 0.0, p.altitude);
  w.boxes.push_back(wall(cx + h, -h, cx + h + t, h));          // back
  w.boxes.push_back(wall(cx - h, h, cx + h + t, h + t));       // left side
  w.boxes.push_back(wall(cx - h, -h - t, cx + h + t, -h));     // right side
  w.boxes.push_back(wall(cx - h - t, 0.5 * p.opening, cx - h, h + t));    // front, upper
  w.boxes.push_back(wall(cx - h - t, -h - t, cx - h, -0.5 * p.opening));  // front, lower
  return w;
}

World make_rooms(const RoomsParams& p, std::uint64_t seed) {
  if (p.rooms < 1 || !(p.door > 0) || !(p.width > p.door)) throw std::invalid_argument("make_rooms: bad parameters");
  World w;
  w.name = "rooms";
  std::mt19937_64 rng(seed);
  const double hw = 0.5 * p.width, t = p.thickness;
  std::uniform_real_distribution<double> udoor(-hw + 0.5 * p.door + 0.5, hw - 0.5 * p.door - 0.5);
  w.start = Vec3(0.5 * p.room_length, 0.0, p.altitude);
  w.goal = Vec3((p.rooms - 0.5) * p.room_length, 0.0, p.altitude);
  const double x_end = p.rooms * p.room_length;
  w.boxes.push_back(wall(-t, -hw - t, x_end + t, -hw));
  w.boxes.push_back(wall(-t, hw, x_end + t, hw + t));
  w.boxes.push_back(wall(-t, -hw, 0.0, hw));
  w.boxes.push_back(wall(x_end, -hw, x_end + t, hw));
  for (int r = 1; r < p.rooms; ++r) {
    const double x = r * p.room_length;
    const double d = udoor(rng);
    w.boxes.push_back(wall(x - 0.5 * t, -hw, x + 0.5 * t, d - 0.5 * p.door));
    w.boxes.push_back(wall(x - 0.5 * t, d + 0.5 * p.door, x + 0.5 * t, hw));
  }
  return w;
}

void SensorModel::validate() const {
  constexpr double pi = 3.14159265358979323846;
  if (!(horizontal_fov > 0 && horizontal_fov <= pi)) throw std::invalid_argument("sensor: horizontal_fov in (0, pi]");
  if (!(vertical_fov > 0 && vertical_fov <= pi)) throw std::invalid_argument("sensor: vertical_fov in (0, pi]");
  if (!(range > 0)) throw std::invalid_argument("sensor: range must be positive");
  if (!(h_step > 0) || !(v_step > 0)) throw std::invalid_argument("sensor: ray steps must be positive");
}

void render_scan_into(const World& world, const Vec3& pose, double yaw, const SensorModel& sensor, DepthScan& scan,
                      kernels::Exec exec) {
  const int nh = static_cast<int>(std::lround(sensor.horizontal_fov / sensor.h_step)) + 1;
  const int nv = static_cast<int>(std::lround(sensor.vertical_fov / sensor.v_step)) + 1;
  scan.origin = pose;
  scan.yaw = yaw;
  scan.max_range = sensor.range;
  scan.horizontal_fov = sensor.horizontal_fov;
  scan.rays.resize(static_cast<std::size_t>(nh) * static_cast<std::size_t>(nv));

  // Broad phase: drop primitives out of range, and cylinders whose footprint
  // lies outside the horizontal field of view.
  World near;
  for (const auto& b : world.boxes)
    if (boxDistance(b, pose) <= sensor.range) near.boxes.push_back(b);
  for (const auto& c : world.cylinders) {
    if (cylinderDistance(c, pose) > sensor.range) continue;
    const double dx = c.x - pose.x(), dy = c.y - pose.y(), d = std::hypot(dx, dy);
    if (d > c.radius) {
      const double off = std::abs(std::remainder(std::atan2(dy, dx) - yaw, 2.0 * std::numbers::pi));
      if (off > 0.5 * sensor.horizontal_fov + std::asin(c.radius / d) + 1e-9) continue;
    }
    near.cylinders.push_back(c);
  }
  auto one = [&](long long k) {
    const int iv = static_cast<int>(k / nh), ih = static_cast<int>(k % nh);
    const double az = nh == 1 ? 0.0 : -0.5 * sensor.horizontal_fov + ih * sensor.horizontal_fov / (nh - 1);
    const double el = nv == 1 ? 0.0 : -0.5 * sensor.vertical_fov + iv * sensor.vertical_fov / (nv - 1);
    DepthScan::Ray& ray = scan.rays[static_cast<std::size_t>(k)];
    ray.direction = Vec3(std::cos(el) * std::cos(yaw + az), std::cos(el) * std::sin(yaw + az), std::sin(el));
    const auto t = near.raycast(pose, ray.direction, sensor.range);
    ray.hit = t.has_value();
    ray.range = t ? *t : sensor.range;
  };
  const long long total = static_cast<long long>(scan.rays.size());
  if (exec == kernels::Exec::Serial) {
    for (long long k = 0; k < total; ++k) one(k);
  } else {
#pragma omp parallel for schedule(static)
    for (long long k = 0; k < total; ++k) one(k);
  }
}

DepthScan render_scan(const World& world, const Vec3& pose, double yaw, const SensorModel& sensor,
                      kernels::Exec exec) {
  sensor.validate();
  DepthScan scan;
  render_scan_into(world, pose, yaw, sensor, scan, exec);
  return scan;
}

}  // namespace faster
