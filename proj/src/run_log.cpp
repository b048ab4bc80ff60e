#include "faster/run_log.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace faster {

namespace {

using nlohmann::json;

json vec(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json optVec(const std::optional<Vec3>& v) { return v ? vec(*v) : json(nullptr); }

json path(const GridPath& p) {
  json a = json::array();
  for (const Vec3& v : p.vertices) a.push_back(vec(v));
  return a;
}

json corridor(const Corridor& c) {
  json a = json::array();
  for (const Polyhedron& poly : c.polys) {
    json normals = json::array(), offsets = json::array();
    for (int r = 0; r < poly.faces(); ++r) {
      normals.push_back(vec(poly.A.row(r).transpose()));
      offsets.push_back(poly.c(r));
    }
    a.push_back({{"A", normals}, {"c", offsets}, {"seed", {vec(poly.seed_start), vec(poly.seed_end)}}});
  }
  return a;
}

json spline(const std::optional<JerkSpline>& s) {
  if (!s) return nullptr;
  json iv = json::array();
  for (const Cubic& c : s->intervals) iv.push_back({vec(c.a), vec(c.b), vec(c.c), vec(c.d)});
  return {{"t0", s->t0}, {"dt", s->dt}, {"intervals", iv}};
}

json state(const State& s) { return {{"x", vec(s.x)}, {"v", vec(s.v)}, {"a", vec(s.a)}}; }

}  // namespace

void write_metrics_header(std::ostream& out) {
  out << "scenario,seed,reached_goal,collisions,timed_out,flight_time,distance,max_speed,min_true_clearance,"
         "cycles,commits,keep_opt_infeasible,keep_prefix_unknown,keep_overtime,miqp_ms_p75,replan_ms_p75\n";
}

void write_metrics_row(std::ostream& out, const MetricsRow& row) {
  const EpisodeMetrics& m = row.metrics;
  const auto old = out.precision(10);
  out << row.scenario << ',' << row.seed << ',' << m.reached_goal << ',' << m.collisions << ',' << m.timed_out
      << ',' << m.flight_time << ',' << m.distance << ',' << m.max_speed << ',' << m.min_true_clearance << ','
      << m.cycles << ',' << m.commits << ',' << m.keep_opt_infeasible << ',' << m.keep_prefix_unknown << ','
      << m.keep_overtime << ',' << (m.miqp_ms.empty() ? 0.0 : percentile(m.miqp_ms, 0.75)) << ','
      << (m.replan_ms.empty() ? 0.0 : percentile(m.replan_ms, 0.75)) << '\n';
  out.precision(old);
}

std::string cycle_json(const CycleRecord& rec) {
  const ReplanOutcome& o = rec.outcome;
  json j;
  j["time"] = rec.time;
  j["committed"] = o.committed;
  j["reason"] = reasonName(o.reason);
  j["k"] = o.trajectory.k;
  j["delta_t"] = o.delta_t;
  j["f_whole"] = o.f_whole;
  j["f_safe"] = o.f_safe;
  j["timings_ms"] = {{"jps", o.timings.jps},
                     {"decomp_whole", o.timings.decomp_whole},
                     {"miqp_whole", o.timings.miqp_whole},
                     {"decomp_safe", o.timings.decomp_safe},
                     {"miqp_safe", o.timings.miqp_safe},
                     {"total", o.timings.total}};
  j["nodes"] = {{"whole", o.nodes_whole}, {"safe", o.nodes_safe}};
  j["A"] = state(o.A);
  j["G"] = vec(o.G);
  j["H"] = optVec(o.H);
  j["R"] = optVec(o.R);
  j["E"] = optVec(o.E);
  j["F"] = optVec(o.F);
  j["t_R"] = o.t_R;
  j["speed_A_to_R"] = o.speed_A_to_R;
  j["direction"] = {{"evaluated", o.direction.evaluated},
                    {"chose_b", o.direction.chose_b},
                    {"angle", o.direction.angle_cad},
                    {"cost_a", o.direction.cost_a},
                    {"cost_b", o.direction.cost_b}};
  j["jps"] = path(o.jps);
  j["jps_in"] = path(o.jps_in);
  j["poly_whole"] = corridor(o.poly_whole);
  j["poly_safe"] = corridor(o.poly_safe);
  j["whole"] = spline(o.whole);
  j["safe"] = spline(o.safe);
  if (rec.vol_whole >= 0) j["vol_whole"] = rec.vol_whole;
  if (rec.vol_safe >= 0) j["vol_safe"] = rec.vol_safe;
  if (rec.vol_safe_unknown >= 0) j["vol_safe_unknown"] = rec.vol_safe_unknown;
  // Non-finite costs (skipped evaluations) serialise as null.
  return j.dump();
}

void write_cycles_jsonl(std::ostream& out, const std::vector<CycleRecord>& records) {
  for (const CycleRecord& r : records) out << cycle_json(r) << '\n';
}

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectorySample>& samples) {
  const auto old = out.precision(10);
  out << "t,x,y,z,vx,vy,vz,ax,ay,az,yaw\n";
  for (const auto& s : samples) {
    out << s.t;
    for (const Vec3* v : {&s.s.x, &s.s.v, &s.s.a})
      for (int k = 0; k < 3; ++k) out << ',' << (*v)[k];
    out << ',' << s.yaw << '\n';
  }
  out.precision(old);
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty set");
  if (!(q >= 0 && q <= 1)) throw std::invalid_argument("percentile: q must be in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace faster
