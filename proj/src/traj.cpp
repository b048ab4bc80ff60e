#include "faster/traj.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace faster {

namespace {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

// Affine function of one axis' jerks: value = k + coef . j.
struct Affine {
  double k = 0.0;
  RowVectorXd coef;
};

struct AxisStates {
  std::vector<Affine> p, v, a;  // knots 0..N
};

AxisStates integrateAxis(double p0, double v0, double a0, int N, double dt) {
  AxisStates s;
  Affine p{p0, RowVectorXd::Zero(N)}, v{v0, RowVectorXd::Zero(N)}, a{a0, RowVectorXd::Zero(N)};
  const double dt2 = dt * dt, dt3 = dt2 * dt;
  for (int n = 0; n <= N; ++n) {
    s.p.push_back(p);
    s.v.push_back(v);
    s.a.push_back(a);
    if (n == N) break;
    Affine pn{p.k + v.k * dt + a.k * dt2 / 2, p.coef + v.coef * dt + a.coef * dt2 / 2};
    pn.coef(n) += dt3 / 6;
    Affine vn{v.k + a.k * dt, v.coef + a.coef * dt};
    vn.coef(n) += dt2 / 2;
    Affine an{a.k, a.coef};
    an.coef(n) += dt;
    p = pn;
    v = vn;
    a = an;
  }
  return s;
}

// Control point j of interval n for one axis.
Affine controlPoint(const AxisStates& s, int n, int j, double dt) {
  switch (j) {
    case 0:
      return s.p[static_cast<std::size_t>(n)];
    case 1:
      return {s.p[n].k + s.v[n].k * dt / 3, s.p[n].coef + s.v[n].coef * dt / 3};
    case 2:
      return {s.p[n].k + 2 * s.v[n].k * dt / 3 + s.a[n].k * dt * dt / 6,
              s.p[n].coef + 2 * s.v[n].coef * dt / 3 + s.a[n].coef * dt * dt / 6};
    default:
      return s.p[static_cast<std::size_t>(n) + 1];
  }
}

// Accumulates rows of a dense inequality system.
struct Rows {
  std::vector<RowVectorXd> a;
  std::vector<double> b;
  void add(const RowVectorXd& row, double rhs) {
    a.push_back(row);
    b.push_back(rhs);
  }
  void to(MatrixXd& A, VectorXd& bv, int n) const {
    A.resize(static_cast<Eigen::Index>(a.size()), n);
    bv.resize(static_cast<Eigen::Index>(b.size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
      A.row(static_cast<Eigen::Index>(i)) = a[i];
      bv(static_cast<Eigen::Index>(i)) = b[i];
    }
  }
};

RowVectorXd embed(const RowVectorXd& coef, int axis, int N) {
  RowVectorXd row = RowVectorXd::Zero(3 * N);
  row.segment(axis * N, N) = coef;
  return row;
}

}  // namespace

double JerkSpline::jerkCost() const {
  double s = 0;
  for (const auto& c : intervals) s += c.jerk().squaredNorm() * dt;
  return s;
}

JerkSpline integrate_jerks(const State& x0, const std::vector<Vec3>& jerks, double dt, double t0) {
  JerkSpline s;
  s.dt = dt;
  s.t0 = t0;
  Vec3 p = x0.x, v = x0.v, a = x0.a;
  for (const Vec3& j : jerks) {
    Cubic c;
    c.d = p;
    c.c = v;
    c.b = a / 2;
    c.a = j / 6;
    s.intervals.push_back(c);
    p = p + v * dt + a * dt * dt / 2 + j * dt * dt * dt / 6;
    v = v + a * dt + j * dt * dt / 2;
    a = a + j * dt;
  }
  return s;
}

std::array<Vec3, 4> control_points(const Cubic& k, double dt) {
  if (!(dt > 0)) throw std::invalid_argument("control_points: dt must be positive");
  return {k.d, (k.c * dt + 3 * k.d) / 3, (k.b * dt * dt + 2 * k.c * dt + 3 * k.d) / 3,
          k.a * dt * dt * dt + k.b * dt * dt + k.c * dt + k.d};
}

State sample(const JerkSpline& spline, double t, bool* clamped) {
  if (spline.intervals.empty()) throw std::logic_error("sample: empty spline");
  bool c = false;
  if (t < spline.t0) {
    t = spline.t0;
    c = true;
  } else if (t > spline.tEnd()) {
    t = spline.tEnd();
    c = true;
  }
  if (clamped) *clamped = c;
  const double rel = t - spline.t0;
  int n = static_cast<int>(std::floor(rel / spline.dt));
  n = std::clamp(n, 0, spline.N() - 1);
  const double tau = rel - n * spline.dt;
  const Cubic& k = spline.intervals[static_cast<std::size_t>(n)];
  return State{k.pos(tau), k.vel(tau), k.acc(tau)};
}

LimitUsage limit_usage(const JerkSpline& spline, int samples_per_interval) {
  LimitUsage u;
  for (int n = 0; n <= spline.N(); ++n) {
    const State s = sample(spline, spline.t0 + n * spline.dt);
    u.v = std::max(u.v, s.v.cwiseAbs().maxCoeff());
    u.a = std::max(u.a, s.a.cwiseAbs().maxCoeff());
  }
  for (const auto& c : spline.intervals) {
    u.j = std::max(u.j, c.jerk().cwiseAbs().maxCoeff());
    for (int i = 0; i <= samples_per_interval; ++i)
      u.v_between_knots = std::max(u.v_between_knots, c.vel(spline.dt * i / samples_per_interval).cwiseAbs().maxCoeff());
  }
  return u;
}

MiqpProblem build_miqp(const State& x_init, const FinalCondition& fc, const Corridor& corridor, int N, double dt,
                       const Limits& limits) {
  if (N < 1) throw std::invalid_argument("build_miqp: N must be >= 1");
  if (!(dt > 0)) throw std::invalid_argument("build_miqp: dt must be positive");
  if (corridor.polys.empty()) throw std::invalid_argument("build_miqp: empty corridor");
  limits.validate();
  const int nv = 3 * N;
  std::array<AxisStates, 3> ax;
  for (int k = 0; k < 3; ++k) ax[static_cast<std::size_t>(k)] = integrateAxis(x_init.x[k], x_init.v[k], x_init.a[k], N, dt);

  MiqpProblem p;
  p.base.H = 2.0 * dt * MatrixXd::Identity(nv, nv);
  p.base.g = VectorXd::Zero(nv);

  Rows eq;
  for (int k = 0; k < 3; ++k) {
    const AxisStates& s = ax[static_cast<std::size_t>(k)];
    if (fc.mode == FinalMode::FixedStop) eq.add(embed(s.p[N].coef, k, N), fc.position[k] - s.p[N].k);
    eq.add(embed(s.v[N].coef, k, N), -s.v[N].k);
    eq.add(embed(s.a[N].coef, k, N), -s.a[N].k);
  }
  eq.to(p.base.Aeq, p.base.beq, nv);

  Rows in;
  for (int k = 0; k < 3; ++k) {
    const AxisStates& s = ax[static_cast<std::size_t>(k)];
    for (int n = 1; n < N; ++n) {
      const RowVectorXd rv = embed(s.v[n].coef, k, N), ra = embed(s.a[n].coef, k, N);
      in.add(rv, limits.v_max - s.v[n].k);
      in.add(-rv, limits.v_max + s.v[n].k);
      in.add(ra, limits.a_max - s.a[n].k);
      in.add(-ra, limits.a_max + s.a[n].k);
    }
    for (int n = 0; n < N; ++n) {
      RowVectorXd rj = RowVectorXd::Zero(nv);
      rj(k * N + n) = 1.0;
      in.add(rj, limits.j_max);
      in.add(-rj, limits.j_max);
    }
  }
  in.to(p.base.Ain, p.base.bin, nv);

  Vec3 lo, hi;
  corridor.bounds(lo, hi);
  const int P = static_cast<int>(corridor.polys.size());
  for (int n = 0; n < N; ++n) {
    std::vector<int> cover;
    for (int q = 0; q < P; ++q) {
      const Polyhedron& poly = corridor.polys[static_cast<std::size_t>(q)];
      Rows rows;
      std::vector<double> ms;
      for (int j = 0; j < 4; ++j) {
        std::array<Affine, 3> cp;
        for (int k = 0; k < 3; ++k) cp[static_cast<std::size_t>(k)] = controlPoint(ax[static_cast<std::size_t>(k)], n, j, dt);
        for (int f = 0; f < poly.faces(); ++f) {
          RowVectorXd row = RowVectorXd::Zero(nv);
          double k0 = 0.0;
          for (int k = 0; k < 3; ++k) {
            row.segment(k * N, N) += poly.A(f, k) * cp[static_cast<std::size_t>(k)].coef;
            k0 += poly.A(f, k) * cp[static_cast<std::size_t>(k)].k;
          }
          const double rhs = poly.c(f) - k0;
          if (row.isZero(0.0) && rhs >= 0.0) continue;  // constant and satisfied
          double m = 0.0;
          for (int corner = 0; corner < 8; ++corner) {
            Vec3 x(corner & 1 ? hi.x() : lo.x(), corner & 2 ? hi.y() : lo.y(), corner & 4 ? hi.z() : lo.z());
            m = std::max(m, poly.A.row(f).dot(x) - poly.c(f));
          }
          rows.add(row, rhs);
          ms.push_back(m);
        }
      }
      Indicator ind;
      ind.n = n;
      ind.p = q;
      rows.to(ind.A, ind.c, nv);
      ind.big_m = Eigen::Map<const VectorXd>(ms.data(), static_cast<Eigen::Index>(ms.size()));
      cover.push_back(static_cast<int>(p.indicators.size()));
      p.indicators.push_back(std::move(ind));
    }
    p.covers.push_back(std::move(cover));
  }
  return p;
}

std::vector<Vec3> jerks_from_solution(const VectorXd& x, int N) {
  std::vector<Vec3> j(static_cast<std::size_t>(N));
  for (int n = 0; n < N; ++n) j[static_cast<std::size_t>(n)] = Vec3(x(n), x(N + n), x(2 * N + n));
  return j;
}

namespace {

// Smallest T > 0 with j T^3 / 6 + a T^2 / 2 + v T = D (D > 0, j > 0).
double firstCubicRoot(double j, double a, double v, double D) {
  auto g = [&](double t) { return ((j * t / 6.0 + 0.5 * a) * t + v) * t - D; };
  double lo = 0.0, hi = 0.0;
  while (g(hi) < 0.0) {
    lo = hi;
    hi += 1e-3 * (1.0 + hi);
  }
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  return hi;
}

}  // namespace

double dt_lower_bound(const State& x_init, const Vec3& x_final_pos, const Limits& limits, int N, double f) {
  if (N < 1) throw std::invalid_argument("dt_lower_bound: N must be >= 1");
  if (f < 1.0) throw std::invalid_argument("dt_lower_bound: f must be >= 1");
  double t = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double delta = x_final_pos[k] - x_init.x[k];
    const double d = std::abs(delta);
    if (d == 0.0) continue;
    // Constant-input motions towards the target from the initial state.
    const double s = delta > 0 ? 1.0 : -1.0;
    const double v = s * x_init.v[k], a = s * x_init.a[k];
    const double t_v = d / limits.v_max;
    const double t_a = (-v + std::sqrt(v * v + 2.0 * limits.a_max * d)) / limits.a_max;
    const double t_j = firstCubicRoot(limits.j_max, a, v, d);
    t = std::max({t, t_v, t_a, t_j});
  }
  if (t == 0.0) return 1e-3;
  return std::max(1e-3, f * t / N);
}

double braking_time(const State& x_init, const Limits& limits) {
  double t = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double a = std::abs(x_init.a[k]);
    const double v = std::abs(x_init.v[k]) + a * a / (2.0 * limits.j_max);
    t = std::max(t, a / limits.j_max + v / limits.a_max);
  }
  return t;
}

std::vector<double> factor_lattice(double f_prev, double gamma, double gamma_prime, int n_steps) {
  if (gamma < 0 || gamma_prime < 0) throw std::invalid_argument("factor_lattice: spans must be >= 0");
  if (n_steps < 1) throw std::invalid_argument("factor_lattice: n_steps must be >= 1");
  const double lo = std::max(1.0, f_prev - gamma), hi = f_prev + gamma_prime;
  const double step = (gamma + gamma_prime) / n_steps;
  std::vector<double> out{lo};
  if (step <= 0) return out;
  for (int i = 1; lo + i * step <= hi + 1e-12; ++i) out.push_back(lo + i * step);
  return out;
}

namespace {

// Interval n goes to the polyhedron whose seed segment covers the fraction
// (n + 1/2) / N of the total seed length.
std::vector<int> proportionalAssignment(const Corridor& corridor, int N) {
  const int P = static_cast<int>(corridor.polys.size());
  std::vector<double> cum(static_cast<std::size_t>(P) + 1, 0.0);
  for (int q = 0; q < P; ++q) {
    const auto& poly = corridor.polys[static_cast<std::size_t>(q)];
    cum[static_cast<std::size_t>(q) + 1] = cum[static_cast<std::size_t>(q)] + (poly.seed_end - poly.seed_start).norm();
  }
  std::vector<int> out(static_cast<std::size_t>(N), 0);
  for (int n = 0; n < N; ++n) {
    const double s = cum.back() * (n + 0.5) / N;
    int q = 0;
    while (q + 1 < P && cum[static_cast<std::size_t>(q) + 1] < s) ++q;
    out[static_cast<std::size_t>(n)] = q;
  }
  return out;
}

}  // namespace

std::optional<LineSearchResult> line_search_solve(const LineSearchInput& in, double f_prev, double gamma,
                                                  double gamma_prime, int n_steps) {
  if (!in.corridor) throw std::invalid_argument("line_search_solve: no corridor");
  LineSearchResult out;
  const auto start = std::chrono::steady_clock::now();
  for (double f : factor_lattice(f_prev, gamma, gamma_prime, n_steps)) {
    ++out.trials;
    const double dt = std::max(dt_lower_bound(in.x_init, in.dt_target, in.limits, in.N, f), f * in.min_horizon / in.N);
    const MiqpProblem p = build_miqp(in.x_init, in.final_condition, *in.corridor, in.N, dt, in.limits);
    std::optional<std::vector<int>> warm;
    if (!in.warm || in.warm->size() != p.covers.size()) warm = proportionalAssignment(*in.corridor, in.N);
    if (in.warm && in.warm->size() == p.covers.size()) {
      warm = in.warm;
      for (std::size_t c = 0; c < warm->size(); ++c)
        (*warm)[c] = std::clamp((*warm)[c], 0, static_cast<int>(p.covers[c].size()) - 1);
    }
    MiqpSolution sol = solve_miqp(p, in.miqp, warm);
    if (!sol.usable()) continue;
    out.spline = integrate_jerks(in.x_init, jerks_from_solution(sol.x, in.N), dt, in.t0);
    out.f = f;
    out.solution = std::move(sol);
    out.solve_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return out;
  }
  return std::nullopt;
}

}  // namespace faster
