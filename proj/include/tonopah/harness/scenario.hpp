#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tonopah/detect/detector.hpp"
#include "tonopah/qdisc/qdisc.hpp"
#include "tonopah/transport/connection.hpp"

namespace tonopah::harness {

using sim::BitRate;
using sim::SimTime;

struct ScenarioSpec {
  qdisc::QdiscKind qdisc_kind = qdisc::QdiscKind::DropTail;
  BitRate link_rate = BitRate::mbps(50);
  /// Base delay of the path. Read as the round-trip delay unless
  /// `delay_is_one_way` is set; each direction carries half of it.
  SimTime delay = std::chrono::milliseconds(50);
  bool delay_is_one_way = false;
  SimTime duration = std::chrono::seconds(90);
  bool cross_traffic = false;
  SimTime cross_traffic_head_start = std::chrono::seconds(4);
  bool tonopah_enabled = true;
  detect::TonopahConfig tonopah;
  std::uint64_t seed = 1;
  /// Upper bound of the uniform per-ack host delay drawn from the seed.
  SimTime ack_jitter = std::chrono::microseconds(100);
  /// Overrides the buffer-sizing rule when set.
  std::optional<std::size_t> buffer_packets;
  bool record_epochs = false;

  bool ground_truth_fq() const { return qdisc_kind != qdisc::QdiscKind::DropTail; }
  SimTime one_way_delay() const { return delay_is_one_way ? delay : delay / 2; }
  SimTime base_rtt() const { return 2 * one_way_delay(); }
};

/// Throws std::invalid_argument when the spec is inconsistent.
void validate(const ScenarioSpec& spec);

/// Flat key/value view of a spec; every field appears with its resolved value.
std::map<std::string, std::string> to_key_values(const ScenarioSpec& spec);
/// Applies keys onto `base`; unknown keys or malformed values throw.
ScenarioSpec from_key_values(const std::map<std::string, std::string>& kv,
                             ScenarioSpec base = {});
/// Stable 64-bit hash of the canonical key/value form.
std::uint64_t spec_hash(const ScenarioSpec& spec);

struct RunResult {
  double accuracy = 0;
  double utilization = 0;
  SimTime mean_qdelay{0};
  std::vector<detect::Transition> detection_transitions;  // relative to window start
  std::uint64_t drops = 0;
  std::uint64_t retransmits = 0;
  std::uint64_t timeouts = 0;
  std::uint64_t backoffs = 0;
  std::uint64_t epochs = 0;
  std::uint64_t no_decision_epochs = 0;
  std::uint64_t packets_delivered = 0;
  std::size_t buffer_packets = 0;
  std::vector<transport::EpochRecord> epoch_log;  // only with record_epochs

  // Metadata.
  std::uint64_t seed = 0;
  std::uint64_t spec_hash = 0;
  std::uint64_t trace_digest = 0;
  std::uint64_t events = 0;
  /// The detector output before the first completed epoch.
  bool initial_signal = false;
};

/// Stable digest over every result field except the epoch log.
std::uint64_t result_digest(const RunResult& r);

/// Builds the topology, runs it, and measures the flow under test over its
/// own `duration`. Throws sim::SimulationError on internal inconsistencies.
RunResult run_scenario(const ScenarioSpec& spec);

}  // namespace tonopah::harness
