#pragma once

#include "faster/sim.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace faster {

/// One line of the metrics summary.
struct MetricsRow {
  std::string scenario;
  std::uint64_t seed = 0;
  EpisodeMetrics metrics;
};

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const MetricsRow& row);

/// JSON object for one planning cycle (single line, no trailing newline).
std::string cycle_json(const CycleRecord& rec);
void write_cycles_jsonl(std::ostream& out, const std::vector<CycleRecord>& records);

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectorySample>& samples);

/// Percentile by linear interpolation between order statistics; q in [0, 1].
double percentile(std::vector<double> values, double q);

}  // namespace faster
