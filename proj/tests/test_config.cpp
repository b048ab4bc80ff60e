#include "faster/config.hpp"
#include "faster/experiments.hpp"
#include "faster/run_log.hpp"

#include <doctest.h>

#include <sstream>

using namespace faster;

namespace {

Scenario parse(const std::string& text) {
  std::istringstream in(text);
  return parse_scenario(in);
}

}  // namespace

TEST_CASE("scenario parsing") {
  const Scenario s = parse("# comment\nworld.type = corner\n\n  limits.v_max = 6.5  # trailing\nplanner.r = 7\n");
  CHECK(s.world == "corner");
  CHECK(s.planner.limits.v_max == 6.5);
  CHECK(s.planner.r == 7.0);
}

TEST_CASE("parse errors carry line and column") {
  auto fails = [](const std::string& text, int line) {
    try {
      parse(text);
    } catch (const ConfigError& e) {
      CHECK(e.line() == line);
      CHECK(e.column() >= 1);
      return;
    }
    FAIL("no error for: " << text);
  };
  fails("world.type = forest\nnot a pair\n", 2);
  fails("limits.v_max = fast\n", 1);
  fails("\n\nno.such.key = 1\n", 3);
  fails("planner.N_whole = 2.5\n", 1);
  fails("episode.wallclock = maybe\n", 1);
  fails("limits.v_max =\n", 1);
}

TEST_CASE("config echo round-trips") {
  Scenario s = parse("world.type = rooms\nlimits.j_max = 13.25\nplanner.use_safe = false\nepisode.dims_x = 80\nepisode.dims_z = 20\n");
  std::ostringstream first;
  echo_scenario(s, first);
  std::istringstream in(first.str());
  const Scenario back = parse_scenario(in);
  std::ostringstream second;
  echo_scenario(back, second);
  CHECK(first.str() == second.str());
  // Every registered key appears in the echo.
  for (const auto& key : scenario_keys()) CHECK(first.str().find(key + " =") != std::string::npos);
}

TEST_CASE("shipped scenarios parse") {
  for (const char* name : {"forest.cfg", "corner.cfg"}) {
    const Scenario s = load_scenario(std::string(FASTER_SCENARIO_DIR) + "/" + name);
    CHECK_NOTHROW(s.planner.validate());
    CHECK_NOTHROW(s.episode.validate());
  }
}

TEST_CASE("seed lists and percentiles") {
  CHECK(parse_seed_list("1..3,7") == std::vector<std::uint64_t>{1, 2, 3, 7});
  CHECK_THROWS(parse_seed_list("3..1"));
  CHECK(percentile({1, 2, 3, 4, 5}, 0.75) == doctest::Approx(4.0));
  CHECK(percentile({10}, 0.3) == 10.0);
}

TEST_CASE("run_seeds is independent of the thread count") {
  Scenario sc;
  sc.episode.max_time = 6;
  const auto a = run_seeds(sc, {1, 2}, 1);
  const auto b = run_seeds(sc, {1, 2}, 2);
  REQUIRE(a.size() == 2);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].seed == b[i].seed);
    CHECK(a[i].metrics.distance == b[i].metrics.distance);
    CHECK(a[i].metrics.commits == b[i].metrics.commits);
  }
  std::ostringstream out;
  write_metrics_header(out);
  write_metrics_row(out, a[0]);
  const std::string text = out.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
}
