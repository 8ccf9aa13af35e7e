#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tonopah/harness/scenario.hpp"

namespace tonopah::cli {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using KeyValues = std::map<std::string, std::string>;

/// Reads a config file. Text files hold `key = value` lines with `#`
/// comments; a file whose first non-blank character is `{` is read as JSON,
/// either a flat object or an object with a "config" member (the layout of
/// summary.json). JSON numbers and booleans are converted to their text form.
KeyValues read_config_file(const std::string& path);
KeyValues parse_config_text(const std::string& text);
KeyValues parse_config_json(const std::string& text);

/// Axis values in milliseconds (delays) or Mbit/s (rates). Accepts a comma
/// separated list whose items are single values or `lo..hi/step` ranges.
std::vector<sim::SimTime> parse_delay_axis(const std::string& text);
std::vector<sim::BitRate> parse_rate_axis(const std::string& text);
std::string format_delay_axis(const std::vector<sim::SimTime>& axis);
std::string format_rate_axis(const std::vector<sim::BitRate>& axis);

std::vector<qdisc::QdiscKind> parse_qdisc_list(const std::string& text);
std::string format_qdisc_list(const std::vector<qdisc::QdiscKind>& kinds);

struct GridSettings {
  harness::ScenarioSpec base;
  std::vector<qdisc::QdiscKind> qdiscs{qdisc::QdiscKind::DropTail};
  std::vector<sim::SimTime> delays;
  std::vector<sim::BitRate> rates;
  std::uint32_t reps = 3;
  unsigned workers = 0;
  bool compare_cc = false;
};

/// Desk-scale axes: {10, 50, 100} ms by {10, 50, 100} Mbit/s.
GridSettings default_grid_settings();

/// Applies grid keys (qdisc list, delays_ms, rates_mbps, reps, workers,
/// compare_cc) and scenario keys onto `settings`.
void apply_grid_keys(const KeyValues& kv, GridSettings& settings);

/// Full effective configuration, scenario keys plus grid keys.
KeyValues to_key_values(const GridSettings& settings);

}  // namespace tonopah::cli
