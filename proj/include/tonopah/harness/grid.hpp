#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tonopah/harness/metrics.hpp"
#include "tonopah/harness/scenario.hpp"

namespace tonopah::harness {

struct GridCell {
  SimTime delay{0};
  BitRate rate;
  std::uint32_t rep = 0;
  ScenarioSpec spec;
  std::optional<RunResult> result;
  std::string error;  // non-empty when the run failed
};

struct GridResult {
  std::vector<GridCell> cells;  // delay-major, then rate, then rep
  double overall_accuracy = 0;
  double mean_utilization = 0;
  SimTime mean_qdelay{0};
  std::vector<EcdfPoint> ecdf;
  std::size_t failures = 0;

  std::vector<const RunResult*> successful() const;
};

/// Stable per-cell seed so any single cell can be rerun in isolation.
std::uint64_t cell_seed(std::uint64_t base_seed, SimTime delay, BitRate rate, std::uint32_t rep);

/// Runs every (delay, rate, rep) combination of `base`. `workers` == 0 picks
/// the hardware concurrency. Failed cells are recorded and excluded from the
/// aggregates. The result does not depend on execution order.
GridResult run_grid(const ScenarioSpec& base, const std::vector<SimTime>& delays,
                    const std::vector<BitRate>& rates, std::uint32_t reps,
                    unsigned workers = 0);

/// Aggregates the cells' results (used by run_grid, exposed for tests).
void aggregate(GridResult& grid);

struct VariantSummary {
  double mean_utilization = 0;
  SimTime mean_qdelay{0};
};

struct CellComparison {
  SimTime delay{0};
  BitRate rate;
  SimTime newreno_qdelay{0};
  SimTime tonopah_qdelay{0};
  double newreno_utilization = 0;
  double tonopah_utilization = 0;
};

struct Comparison {
  GridResult newreno;
  GridResult tonopah;
  VariantSummary newreno_summary;
  VariantSummary tonopah_summary;
  /// Welch's test on per-run mean queuing delays (ms), NewReno vs Tonopah.
  std::optional<WelchResult> qdelay_test;
  std::string qdelay_test_error;
  std::vector<CellComparison> per_cell;  // means over reps

  double utilization_ratio() const;  // newreno / tonopah
  double qdelay_ratio() const;       // tonopah / newreno
};

/// Runs the grid once as plain NewReno and once with Tonopah on the same
/// per-cell seeds.
Comparison compare_cc(const ScenarioSpec& base, const std::vector<SimTime>& delays,
                      const std::vector<BitRate>& rates, std::uint32_t reps, unsigned workers = 0);

}  // namespace tonopah::harness
