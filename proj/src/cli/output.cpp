#include "tonopah/cli/output.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tonopah::cli {

using sim::SimTime;

namespace {

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

double finite_or_zero(double v) { return std::isfinite(v) ? v : 0.0; }

}  // namespace

std::string format_ms(sim::SimTime t) {
  const auto ns = t.count();
  const bool neg = ns < 0;
  const auto mag = neg ? -ns : ns;
  const auto us = (mag + 500) / 1000;  // half-up to microseconds
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%lld.%03lld", neg ? "-" : "",
                static_cast<long long>(us / 1000), static_cast<long long>(us % 1000));
  return buf;
}

std::string format_fraction(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", finite_or_zero(v));
  return buf;
}

void write_runs_csv(std::ostream& os, const std::vector<RunRow>& rows) {
  os << kRunsHeader << '\n';
  for (const auto& row : rows) {
    const auto& s = *row.spec;
    os << format_ms(s.delay) << ',' << format_rate_axis({s.link_rate}) << ',' << row.rep << ',' << s.seed << ','
       << qdisc::to_string(s.qdisc_kind) << ',' << (s.cross_traffic ? 1 : 0) << ',';
    if (row.result) {
      const auto& r = *row.result;
      os << format_fraction(r.accuracy) << ',' << format_fraction(r.utilization) << ','
         << format_ms(r.mean_qdelay) << ',' << r.drops << ',' << (s.tonopah_enabled ? 1 : 0)
         << ',' << r.retransmits << ',' << r.backoffs << ",\n";
    } else {
      os << ",,,," << (s.tonopah_enabled ? 1 : 0) << ",,," << csv_escape(row.error) << '\n';
    }
  }
}

void write_ecdf_csv(std::ostream& os, const std::vector<harness::EcdfPoint>& curve) {
  os << kEcdfHeader << '\n';
  for (const auto& p : curve)
    os << format_fraction(p.value) << ',' << format_fraction(p.cumulative_fraction) << '\n';
}

void write_cells_csv(std::ostream& os, const std::vector<LabelledGrid>& grids) {
  os << kCellsHeader << '\n';
  for (const auto& lg : grids) {
    struct Acc {
      std::uint32_t n = 0;
      double accuracy = 0;
      double utilization = 0;
      SimTime::rep qdelay = 0;
      bool tonopah = false;
    };
    // Keyed by (delay, rate) in grid order.
    std::vector<std::pair<std::pair<SimTime::rep, std::uint64_t>, Acc>> cells;
    for (const auto& c : lg.grid->cells) {
      const auto key = std::make_pair(c.delay.count(), c.rate.bits_per_second);
      if (cells.empty() || cells.back().first != key) cells.push_back({key, Acc{}});
      auto& a = cells.back().second;
      a.tonopah = c.spec.tonopah_enabled;
      if (!c.result) continue;
      ++a.n;
      a.accuracy += c.result->accuracy;
      a.utilization += c.result->utilization;
      a.qdelay += c.result->mean_qdelay.count();
    }
    for (const auto& [key, a] : cells) {
      os << qdisc::to_string(lg.qdisc) << ',' << (a.tonopah ? 1 : 0) << ','
         << format_ms(SimTime{key.first}) << ',' << format_rate_axis({sim::BitRate{key.second}})
         << ',' << a.n << ',';
      if (a.n == 0) {
        os << ",,\n";
        continue;
      }
      os << format_fraction(a.accuracy / a.n) << ',' << format_fraction(a.utilization / a.n) << ','
         << format_ms(SimTime{a.qdelay / static_cast<SimTime::rep>(a.n)}) << '\n';
    }
  }
}

void write_comparison_csv(std::ostream& os, qdisc::QdiscKind kind, const harness::Comparison& c,
                          bool header) {
  if (header) os << kComparisonHeader << '\n';
  for (const auto& cell : c.per_cell) {
    os << qdisc::to_string(kind) << ',' << format_ms(cell.delay) << ','
       << format_rate_axis({cell.rate}) << ','
       << format_fraction(cell.newreno_utilization) << ','
       << format_fraction(cell.tonopah_utilization) << ',' << format_ms(cell.newreno_qdelay) << ','
       << format_ms(cell.tonopah_qdelay) << '\n';
  }
}

void write_epochs_csv(std::ostream& os, const std::vector<transport::EpochRecord>& epochs,
                      sim::SimTime window_start) {
  os << kEpochsHeader << '\n';
  for (const auto& e : epochs) {
    os << format_ms(e.at - window_start) << ',' << format_ms(e.avg_dom) << ','
       << format_ms(e.avg_nondom) << ',' << e.samples_dom << ',' << e.samples_nondom << ','
       << detect::to_string(e.outcome) << ',' << (e.fq_detected ? 1 : 0) << ',' << e.cwnd << '\n';
  }
}

nlohmann::json summary_of(const harness::GridResult& g) {
  nlohmann::json j;
  j["runs"] = g.cells.size();
  j["failures"] = g.failures;
  j["overall_accuracy"] = finite_or_zero(g.overall_accuracy);
  j["mean_utilization"] = finite_or_zero(g.mean_utilization);
  j["mean_qdelay_ms"] = format_ms(g.mean_qdelay);
  nlohmann::json errors = nlohmann::json::array();
  for (const auto& c : g.cells) {
    if (c.result) continue;
    errors.push_back({{"delay_ms", format_ms(c.delay)},
                      {"rate_mbps", static_cast<double>(c.rate.bits_per_second) / 1e6},
                      {"rep", c.rep},
                      {"error", c.error}});
  }
  if (!errors.empty()) j["errors"] = errors;
  return j;
}

nlohmann::json comparison_json(const harness::Comparison& c) {
  nlohmann::json j;
  j["newreno"] = {{"mean_utilization", finite_or_zero(c.newreno_summary.mean_utilization)},
                  {"mean_qdelay_ms", format_ms(c.newreno_summary.mean_qdelay)}};
  j["tonopah"] = {{"mean_utilization", finite_or_zero(c.tonopah_summary.mean_utilization)},
                  {"mean_qdelay_ms", format_ms(c.tonopah_summary.mean_qdelay)}};
  j["utilization_ratio_newreno_over_tonopah"] = finite_or_zero(c.utilization_ratio());
  j["qdelay_ratio_tonopah_over_newreno"] = finite_or_zero(c.qdelay_ratio());
  if (c.qdelay_test) {
    j["welch"] = {{"t", finite_or_zero(c.qdelay_test->t)},
                  {"df", finite_or_zero(c.qdelay_test->df)},
                  {"p", finite_or_zero(c.qdelay_test->p)}};
  } else {
    j["welch"] = {{"error", c.qdelay_test_error}};
  }
  return j;
}

nlohmann::json result_json(const harness::RunResult& r) {
  nlohmann::json j;
  j["accuracy"] = r.accuracy;
  j["utilization"] = r.utilization;
  j["mean_qdelay_ns"] = r.mean_qdelay.count();
  j["transitions"] = r.detection_transitions.size();
  j["drops"] = r.drops;
  j["retransmits"] = r.retransmits;
  j["timeouts"] = r.timeouts;
  j["backoffs"] = r.backoffs;
  j["epochs"] = r.epochs;
  j["no_decision_epochs"] = r.no_decision_epochs;
  j["packets_delivered"] = r.packets_delivered;
  j["buffer_packets"] = r.buffer_packets;
  j["seed"] = std::to_string(r.seed);
  j["spec_hash"] = hex64(r.spec_hash);
  j["trace_digest"] = hex64(r.trace_digest);
  j["events"] = r.events;
  j["initial_signal"] = r.initial_signal;
  j["digest"] = hex64(harness::result_digest(r));
  return j;
}

void write_file(const std::filesystem::path& dir, const std::string& name, const std::string& text) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
  out << text;
}

}  // namespace tonopah::cli
