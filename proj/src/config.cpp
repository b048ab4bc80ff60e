#include "faster/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <type_traits>

namespace faster {

namespace {

constexpr double kDeg = 3.14159265358979323846 / 180.0;

struct Entry {
  std::string key;
  std::function<std::string(const Scenario&)> get;
  std::function<void(Scenario&, const std::string&)> set;
};

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(17);
  o << v;
  return o.str();
}

double parseDouble(const std::string& v) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ConfigError(0, 0, "expected a number, got '" + v + "'");
  }
  if (used != v.size() || !std::isfinite(d)) throw ConfigError(0, 0, "expected a number, got '" + v + "'");
  return d;
}

long long parseInt(const std::string& v) {
  std::size_t used = 0;
  long long i = 0;
  try {
    i = std::stoll(v, &used);
  } catch (const std::exception&) {
    throw ConfigError(0, 0, "expected an integer, got '" + v + "'");
  }
  if (used != v.size()) throw ConfigError(0, 0, "expected an integer, got '" + v + "'");
  return i;
}

bool parseBool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(0, 0, "expected true/false, got '" + v + "'");
}

template <class M>
Entry num(std::string key, M member) {
  return {key, [member](const Scenario& s) { return fmt(member(const_cast<Scenario&>(s))); },
          [member](Scenario& s, const std::string& v) { member(s) = parseDouble(v); }};
}

template <class M>
Entry deg(std::string key, M member) {
  return {key, [member](const Scenario& s) { return fmt(member(const_cast<Scenario&>(s)) / kDeg); },
          [member](Scenario& s, const std::string& v) { member(s) = parseDouble(v) * kDeg; }};
}

template <class M>
Entry integer(std::string key, M member) {
  return {key, [member](const Scenario& s) { return std::to_string(member(const_cast<Scenario&>(s))); },
          [member](Scenario& s, const std::string& v) {
            member(s) = static_cast<std::remove_reference_t<decltype(member(s))>>(parseInt(v));
          }};
}

template <class M>
Entry flag(std::string key, M member) {
  return {key, [member](const Scenario& s) { return std::string(member(const_cast<Scenario&>(s)) ? "true" : "false"); },
          [member](Scenario& s, const std::string& v) { member(s) = parseBool(v); }};
}

#define F(path) [](Scenario& s) -> auto& { return s.path; }

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = [] {
    std::vector<Entry> e;
    e.push_back({"world.type", [](const Scenario& s) { return s.world; },
                 [](Scenario& s, const std::string& v) {
                   if (v != "forest" && v != "corner" && v != "bugtrap" && v != "rooms")
                     throw ConfigError(0, 0, "unknown world type '" + v + "'");
                   s.world = v;
                 }});
    e.push_back(num("forest.density", F(forest.density)));
    e.push_back(num("forest.length", F(forest.length)));
    e.push_back(num("forest.width", F(forest.width)));
    e.push_back(num("forest.r_min", F(forest.r_min)));
    e.push_back(num("forest.r_max", F(forest.r_max)));
    e.push_back(num("forest.altitude", F(forest.altitude)));
    e.push_back(num("forest.keep_out", F(forest.keep_out)));
    e.push_back(num("corner.corner_x", F(corner.corner_x)));
    e.push_back(num("corner.wall_y", F(corner.wall_y)));
    e.push_back(num("corner.approach", F(corner.approach)));
    e.push_back(flag("corner.hidden_cylinder", F(corner.hidden_cylinder)));
    e.push_back(num("corner.cylinder_radius", F(corner.cylinder_radius)));
    e.push_back(num("corner.cylinder_dx", F(corner.cylinder_dx)));
    e.push_back(num("corner.cylinder_dy", F(corner.cylinder_dy)));
    e.push_back(num("corner.altitude", F(corner.altitude)));
    e.push_back(num("bugtrap.opening", F(bugtrap.opening)));
    e.push_back(num("bugtrap.size", F(bugtrap.size)));
    e.push_back(num("bugtrap.thickness", F(bugtrap.thickness)));
    e.push_back(num("bugtrap.altitude", F(bugtrap.altitude)));
    e.push_back(integer("rooms.count", F(rooms.rooms)));
    e.push_back(num("rooms.room_length", F(rooms.room_length)));
    e.push_back(num("rooms.width", F(rooms.width)));
    e.push_back(num("rooms.door", F(rooms.door)));
    e.push_back(num("rooms.thickness", F(rooms.thickness)));
    e.push_back(num("rooms.altitude", F(rooms.altitude)));
    e.push_back(deg("sensor.horizontal_fov_deg", F(sensor.horizontal_fov)));
    e.push_back(deg("sensor.vertical_fov_deg", F(sensor.vertical_fov)));
    e.push_back(num("sensor.range", F(sensor.range)));
    e.push_back(deg("sensor.h_step_deg", F(sensor.h_step)));
    e.push_back(deg("sensor.v_step_deg", F(sensor.v_step)));
    e.push_back(num("limits.v_max", F(planner.limits.v_max)));
    e.push_back(num("limits.a_max", F(planner.limits.a_max)));
    e.push_back(num("limits.j_max", F(planner.limits.j_max)));
    e.push_back(num("planner.alpha", F(planner.alpha)));
    e.push_back(deg("planner.alpha0_deg", F(planner.alpha0)));
    e.push_back(num("planner.gamma", F(planner.gamma)));
    e.push_back(num("planner.gamma_prime", F(planner.gamma_prime)));
    e.push_back(integer("planner.line_search_steps", F(planner.line_search_steps)));
    e.push_back(num("planner.r", F(planner.r)));
    e.push_back(num("planner.l_max", F(planner.l_max)));
    e.push_back(integer("planner.p_max", F(planner.p_max)));
    e.push_back(integer("planner.n_whole", F(planner.N_whole)));
    e.push_back(integer("planner.n_safe", F(planner.N_safe)));
    e.push_back(num("planner.eps", F(planner.eps)));
    e.push_back(num("planner.goal_margin_voxels", F(planner.goal_margin_voxels)));
    e.push_back(num("planner.local_box", F(planner.local_box)));
    e.push_back(num("planner.planning_margin", F(planner.planning_margin)));
    e.push_back(num("planner.dt0", F(planner.dt0)));
    e.push_back(integer("planner.node_budget", F(planner.node_budget)));
    e.push_back(num("planner.goal_snap", F(planner.goal_snap)));
    e.push_back(flag("planner.use_beta_rule", F(planner.use_beta_rule)));
    e.push_back(num("planner.beta", F(planner.beta)));
    e.push_back(integer("planner.r_backoff_steps", F(planner.r_backoff_steps)));
    e.push_back(flag("planner.plan_in_unknown", F(planner.plan_in_unknown)));
    e.push_back(flag("planner.use_safe", F(planner.use_safe)));
    e.push_back(num("episode.sim_step", F(episode.sim_step)));
    e.push_back(num("episode.planner_latency", F(episode.planner_latency)));
    e.push_back(num("episode.max_time", F(episode.max_time)));
    e.push_back(num("episode.vehicle_radius", F(episode.vehicle_radius)));
    e.push_back(num("episode.resolution", F(episode.resolution)));
    e.push_back(integer("episode.dims_x", F(episode.dims.x())));
    e.push_back(integer("episode.dims_y", F(episode.dims.y())));
    e.push_back(integer("episode.dims_z", F(episode.dims.z())));
    e.push_back(num("episode.inflation", F(episode.inflation)));
    e.push_back(num("episode.start_free_radius", F(episode.start_free_radius)));
    e.push_back(num("episode.altitude_band", F(episode.altitude_band)));
    e.push_back(flag("episode.wallclock", F(episode.wallclock)));
    e.push_back(integer("episode.collision_substeps", F(episode.collision_substeps)));
    e.push_back(integer("episode.volume_every", F(episode.volume_every)));
    e.push_back(integer("episode.volume_samples", F(episode.volume_samples)));
    e.push_back(flag("output.trajectory", F(write_trajectory)));
    e.push_back(flag("output.cycles", F(write_cycles)));
    return e;
  }();
  return entries;
}

#undef F

std::string trim(const std::string& s, std::size_t& lead) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  lead = b;
  return s.substr(b, e - b);
}

}  // namespace

World Scenario::makeWorld(std::uint64_t seed) const {
  if (world == "forest") return make_forest(forest, seed);
  if (world == "corner") return make_corner(corner, seed);
  if (world == "bugtrap") return make_bugtrap(bugtrap);
  if (world == "rooms") return make_rooms(rooms, seed);
  throw std::invalid_argument("unknown world type '" + world + "'");
}

void set_key(Scenario& s, const std::string& key, const std::string& value) {
  for (const Entry& e : registry())
    if (e.key == key) {
      e.set(s, value);
      return;
    }
  throw ConfigError(0, 0, "unknown key '" + key + "'");
}

Scenario parse_scenario(std::istream& in, Scenario base) {
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::size_t hash = raw.find('#');
    const std::string line = hash == std::string::npos ? raw : raw.substr(0, hash);
    std::size_t lead = 0;
    if (trim(line, lead).empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(line_no, static_cast<int>(lead) + 1, "expected 'key = value'");
    std::size_t key_lead = 0, val_lead = 0;
    const std::string key = trim(line.substr(0, eq), key_lead);
    const std::string value = trim(line.substr(eq + 1), val_lead);
    if (key.empty()) throw ConfigError(line_no, static_cast<int>(eq) + 1, "missing key");
    if (value.empty()) throw ConfigError(line_no, static_cast<int>(eq) + 2, "missing value for '" + key + "'");
    const auto known = scenario_keys();
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError(line_no, static_cast<int>(key_lead) + 1, "unknown key '" + key + "'");
    try {
      set_key(base, key, value);
    } catch (const ConfigError& err) {
      std::string msg = err.what();
      msg = msg.substr(msg.find(": ") + 2);
      throw ConfigError(line_no, static_cast<int>(eq + 1 + val_lead) + 1, msg);
    }
  }
  return base;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario '" + path + "'");
  return parse_scenario(in);
}

void echo_scenario(const Scenario& s, std::ostream& out) {
  for (const Entry& e : registry()) out << e.key << " = " << e.get(s) << '\n';
}

std::vector<std::string> scenario_keys() {
  std::vector<std::string> keys;
  for (const Entry& e : registry()) keys.push_back(e.key);
  return keys;
}

}  // namespace faster
