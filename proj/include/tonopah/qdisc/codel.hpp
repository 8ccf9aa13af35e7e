#pragma once

#include <cstdint>
#include <optional>

#include "tonopah/sim/units.hpp"

namespace tonopah::qdisc {

using sim::ByteCount;
using sim::SimTime;

struct CodelParams {
  SimTime target = std::chrono::milliseconds(5);
  SimTime interval = std::chrono::milliseconds(100);
  ByteCount mtu = 1514;
};

/// Next drop time under the CoDel control law: t + interval / sqrt(count),
/// rounded to the nearest nanosecond.
SimTime codel_control_law(SimTime t, SimTime interval, std::uint32_t count);

/// CoDel drop state machine for one queue. `should_drop` is consulted once
/// for every head packet at dequeue time.
class CodelState {
 public:
  explicit CodelState(CodelParams p = {}) : params_(p) {}

  /// `sojourn`: how long the head packet waited. `backlog_after`: bytes that
  /// remain queued behind it.
  bool should_drop(SimTime sojourn, SimTime now, ByteCount backlog_after);

  /// The queue went empty; CoDel leaves the above-target episode.
  void on_empty() { first_above_time_.reset(); }

  bool dropping() const { return dropping_; }
  std::uint32_t drop_count() const { return count_; }
  SimTime drop_next() const { return drop_next_; }
  std::optional<SimTime> first_above_time() const { return first_above_time_; }
  const CodelParams& params() const { return params_; }

 private:
  bool ok_to_drop(SimTime sojourn, SimTime now, ByteCount backlog_after);

  CodelParams params_;
  std::optional<SimTime> first_above_time_;
  SimTime drop_next_{0};
  std::uint32_t count_ = 0;
  std::uint32_t last_count_ = 0;
  bool dropping_ = false;
};

}  // namespace tonopah::qdisc
