#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tonopah/cli/config_file.hpp"
#include "tonopah/harness/grid.hpp"

namespace tonopah::cli {

/// Milliseconds with three decimals, rounded half-up from nanoseconds.
std::string format_ms(sim::SimTime t);
/// Fixed six-decimal rendering used for fractions in CSV files.
std::string format_fraction(double v);

/// One row of runs.csv.
struct RunRow {
  std::uint32_t rep = 0;
  const harness::ScenarioSpec* spec = nullptr;
  const harness::RunResult* result = nullptr;  // null for a failed run
  std::string error;
};

inline constexpr const char* kRunsHeader =
    "delay_ms,rate_mbps,rep,seed,qdisc,cross_traffic,accuracy,utilization,mean_qdelay_ms,drops,"
    "tonopah,retransmits,backoffs,error";
inline constexpr const char* kEcdfHeader = "value,cumulative_fraction";
inline constexpr const char* kCellsHeader =
    "qdisc,tonopah,delay_ms,rate_mbps,runs,mean_accuracy,mean_utilization,mean_qdelay_ms";
inline constexpr const char* kComparisonHeader =
    "qdisc,delay_ms,rate_mbps,newreno_utilization,tonopah_utilization,newreno_qdelay_ms,"
    "tonopah_qdelay_ms";
inline constexpr const char* kEpochsHeader =
    "time_ms,avg_dom_ms,avg_nondom_ms,samples_dom,samples_nondom,outcome,fq_detected,cwnd_bytes";

void write_runs_csv(std::ostream& os, const std::vector<RunRow>& rows);
void write_ecdf_csv(std::ostream& os, const std::vector<harness::EcdfPoint>& curve);

/// A grid that ran with one qdisc and one congestion-control variant.
struct LabelledGrid {
  qdisc::QdiscKind qdisc;
  const harness::GridResult* grid;
};

/// Per-(delay, rate) means over repetitions, ready for a heatmap.
void write_cells_csv(std::ostream& os, const std::vector<LabelledGrid>& grids);
void write_comparison_csv(std::ostream& os, qdisc::QdiscKind kind, const harness::Comparison& c,
                          bool header);
void write_epochs_csv(std::ostream& os, const std::vector<transport::EpochRecord>& epochs,
                      sim::SimTime window_start);

nlohmann::json summary_of(const harness::GridResult& g);
nlohmann::json comparison_json(const harness::Comparison& c);
nlohmann::json result_json(const harness::RunResult& r);

/// Writes `text` to dir/name, creating the directory.
void write_file(const std::filesystem::path& dir, const std::string& name, const std::string& text);

}  // namespace tonopah::cli
