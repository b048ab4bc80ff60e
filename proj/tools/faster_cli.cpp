// Batch entry point: episodes, sweeps, ablations and solver oracles.

#include "faster/experiments.hpp"
#include "faster/solver.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

namespace fs = std::filesystem;
using namespace faster;

namespace {

struct Common {
  std::string scenario;
  std::string seeds = "1";
  std::string out = "out";
  std::vector<std::string> overrides;
  int threads = 1;
  std::string latency_mode = "fixed";
};

void addCommon(CLI::App* cmd, Common& c, const std::string& default_seeds) {
  c.seeds = default_seeds;
  cmd->add_option("--scenario", c.scenario, "Scenario config file")->required();
  cmd->add_option("--seeds", c.seeds, "Seeds, e.g. 1..10 or 1,4,7");
  cmd->add_option("--out", c.out, "Output directory");
  cmd->add_option("--set", c.overrides, "Override, key=value (repeatable)");
  cmd->add_option("--threads", c.threads, "Worker threads for episode fan-out")->check(CLI::PositiveNumber);
  cmd->add_option("--latency-mode", c.latency_mode, "fixed or wallclock")
      ->check(CLI::IsMember({"fixed", "wallclock"}));
}

// Loads the scenario, applies overrides and writes the config echo.
Scenario prepare(const Common& c) {
  Scenario sc = load_scenario(c.scenario);
  for (const std::string& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError(0, 0, "--set expects key=value, got '" + kv + "'");
    set_key(sc, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.latency_mode == "wallclock") sc.episode.wallclock = true;
  sc.episode.record_trajectory = sc.write_trajectory;
  sc.episode.record_cycles = sc.write_cycles;
  fs::create_directories(c.out);
  std::ofstream echo(fs::path(c.out) / "config_echo.cfg");
  echo_scenario(sc, echo);
  return sc;
}

int writeRuns(const std::vector<MetricsRow>& rows, const Scenario& sc, const std::string& dir, bool append = false) {
  const fs::path metrics_path = fs::path(dir) / "metrics.csv";
  std::ofstream metrics(metrics_path, append ? std::ios::app : std::ios::trunc);
  if (!append) write_metrics_header(metrics);
  bool all_ok = true, crashed = false;
  for (const MetricsRow& r : rows) {
    write_metrics_row(metrics, r);
    write_metrics_row(std::cout, r);
    const std::string tag = r.scenario + "_" + std::to_string(r.seed);
    if (sc.write_trajectory) {
      std::ofstream t(fs::path(dir) / ("traj_" + tag + ".csv"));
      write_trajectory_csv(t, r.metrics.trajectory);
    }
    if (sc.write_cycles) {
      std::ofstream j(fs::path(dir) / ("cycles_" + tag + ".jsonl"));
      write_cycles_jsonl(j, r.metrics.records);
    }
    crashed = crashed || r.metrics.collisions > 0;
    all_ok = all_ok && r.metrics.collisions == 0 && r.metrics.reached_goal;
  }
  if (crashed) return 1;
  return all_ok ? 0 : 1;
}

std::vector<double> parseDoubles(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Receding-horizon planner in known and unknown space: episodes, ablations and oracles"};
  app.require_subcommand(1);

  Common run_c, sweep_c, safe_c, plan_c, vol_c;
  auto* run = app.add_subcommand("run", "Run episodes for a list of seeds");
  addCommon(run, run_c, "1");

  auto* sweep = app.add_subcommand("sweep", "Run episodes for every value of one config key");
  addCommon(sweep, sweep_c, "1..10");
  std::string sweep_key, sweep_values;
  sweep->add_option("--param", sweep_key, "Dotted config key")->required();
  sweep->add_option("--values", sweep_values, "Comma-separated values")->required();

  auto* safe = app.add_subcommand("ablate-safe", "Crash counts with and without the Safe trajectory");
  addCommon(safe, safe_c, "1..5");
  std::string vmax_list = "4,6,8";
  safe->add_option("--vmax", vmax_list, "Comma-separated v_max values");

  auto* plan = app.add_subcommand("ablate-planspace", "A->R speed when planning in F+U versus F only");
  addCommon(plan, plan_c, "1..5");
  double min_speed_frac = 0.5;
  plan->add_option("--min-speed-frac", min_speed_frac, "Matched step needs |v_A| >= frac * v_max");
  double landmark_radius = 3.0;
  plan->add_option("--landmark-radius", landmark_radius, "Matched step needs A within this x-y distance of the world landmark");

  auto* vol = app.add_subcommand("volumes", "Monte-Carlo corridor volumes over episodes");
  addCommon(vol, vol_c, "1..3");

  auto* solve = app.add_subcommand("solve-file", "Solve a serialized MIQP instance");
  std::string miqp_path;
  int budget = 20000;
  solve->add_option("--file", miqp_path, "MIQP file")->required()->check(CLI::ExistingFile);
  solve->add_option("--budget", budget, "Node budget")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const Scenario sc = prepare(run_c);
      return writeRuns(run_seeds(sc, parse_seed_list(run_c.seeds), run_c.threads), sc, run_c.out);
    }
    if (*sweep) {
      const Scenario base = prepare(sweep_c);
      const auto seeds = parse_seed_list(sweep_c.seeds);
      int code = 0;
      bool first = true;
      std::stringstream values(sweep_values);
      std::string v;
      while (std::getline(values, v, ',')) {
        Scenario sc = base;
        set_key(sc, sweep_key, v);
        const int c = writeRuns(run_seeds(sc, seeds, sweep_c.threads, sweep_key + "=" + v), sc, sweep_c.out, !first);
        first = false;
        code = std::max(code, c);
      }
      return code;
    }
    if (*safe) {
      const Scenario sc = prepare(safe_c);
      const auto rows = ablate_safe(sc, parseDoubles(vmax_list), parse_seed_list(safe_c.seeds), safe_c.threads);
      std::ofstream csv(fs::path(safe_c.out) / "ablate_safe.csv");
      csv << "v_max,with_safe,episodes,crashes,reached\n";
      std::cout << "v_max  safe  crash-free  reached\n";
      for (const auto& r : rows) {
        csv << r.v_max << ',' << r.with_safe << ',' << r.episodes << ',' << r.crashes << ',' << r.reached << '\n';
        std::cout << r.v_max << "      " << (r.with_safe ? "yes" : "no ") << "   " << r.episodes - r.crashes << '/'
                  << r.episodes << "         " << r.reached << '/' << r.episodes << '\n';
      }
      return 0;
    }
    if (*plan) {
      const Scenario sc = prepare(plan_c);
      std::ofstream csv(fs::path(plan_c.out) / "ablate_planspace.csv");
      csv << "seed,matched,time,speed_full,speed_free_only,peak_full,peak_free_only,free_only_committed\n";
      int ordered = 0, total = 0;
      for (std::uint64_t seed : parse_seed_list(plan_c.seeds)) {
        const PlanspaceComparison c = compare_plan_spaces(sc, seed, min_speed_frac, landmark_radius);
        csv << seed << ',' << c.matched << ',' << c.time << ',' << c.speed_full << ',' << c.speed_free_only << ','
            << c.peak_full << ',' << c.peak_free_only << ',' << c.free_only_committed << '\n';
        std::cout << "seed " << seed << (c.matched ? "" : " (no matched step)") << ": mean A->R speed F+U "
                  << c.speed_full << " m/s, F only " << c.speed_free_only << " m/s (peaks " << c.peak_full << ", "
                  << c.peak_free_only << ")\n";
        ++total;
        ordered += c.matched && c.speed_full > c.speed_free_only;
      }
      std::cout << "F+U faster in " << ordered << "/" << total << " seeds\n";
      return 0;
    }
    if (*vol) {
      Scenario sc = prepare(vol_c);
      if (sc.episode.volume_every <= 0) sc.episode.volume_every = 1;
      double sw = 0, ss = 0, su = 0;
      int nw = 0, ns = 0;
      std::ofstream csv(fs::path(vol_c.out) / "volumes.csv");
      csv << "seed,time,vol_whole,vol_safe,vol_safe_unknown\n";
      for (const MetricsRow& r : run_seeds(sc, parse_seed_list(vol_c.seeds), vol_c.threads))
        for (const CycleRecord& rec : r.metrics.records) {
          if (rec.vol_whole < 0) continue;
          csv << r.seed << ',' << rec.time << ',' << rec.vol_whole << ',' << rec.vol_safe << ','
              << rec.vol_safe_unknown << '\n';
          sw += rec.vol_whole;
          ++nw;
          if (rec.vol_safe >= 0) {
            ss += rec.vol_safe;
            su += rec.vol_safe_unknown;
            ++ns;
          }
        }
      std::cout << "mean Poly_Whole " << (nw ? sw / nw : 0.0) << " m^3 (" << nw << " cycles)\n"
                << "mean Poly_Safe " << (ns ? ss / ns : 0.0) << " m^3 (" << ns << " cycles)\n"
                << "mean Poly_Safe in U " << (ns ? su / ns : 0.0) << " m^3\n";
      return 0;
    }
    if (*solve) {
      std::ifstream in(miqp_path);
      const MiqpProblem p = load_miqp(in);
      MiqpOptions opt;
      opt.budget = budget;
      const MiqpSolution s = solve_miqp(p, opt);
      std::cout << "status " << static_cast<int>(s.status) << "\nobjective " << s.objective << "\nnodes "
                << s.nodes_explored << "\nassignment";
      for (int b : s.assignment) std::cout << ' ' << b;
      std::cout << '\n';
      return s.usable() ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error at " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
