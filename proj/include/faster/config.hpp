#pragma once

#include "faster/replan.hpp"
#include "faster/sim.hpp"

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace faster {

/// Everything needed to reproduce a run.
struct Scenario {
  std::string world = "forest";  // forest | corner | bugtrap | rooms
  ForestParams forest;
  CornerParams corner;
  BugtrapParams bugtrap;
  RoomsParams rooms;
  SensorModel sensor;
  PlannerConfig planner;
  EpisodeConfig episode;
  bool write_trajectory = true;
  bool write_cycles = false;

  World makeWorld(std::uint64_t seed) const;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, int column, const std::string& msg)
      : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Sets one dotted key. Throws ConfigError (line 0) on unknown keys or bad values.
void set_key(Scenario& s, const std::string& key, const std::string& value);

/// Parses `key = value` lines on top of `base`. `#` starts a comment.
Scenario parse_scenario(std::istream& in, Scenario base = {});
Scenario load_scenario(const std::string& path);

/// Writes every key with full precision; parsing the echo reproduces `s`.
void echo_scenario(const Scenario& s, std::ostream& out);

std::vector<std::string> scenario_keys();

}  // namespace faster
