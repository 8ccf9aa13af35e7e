#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <queue>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "tonopah/sim/packet.hpp"
#include "tonopah/sim/units.hpp"

namespace tonopah::sim {

/// Raised for fatal inconsistencies inside a run (scheduling in the past,
/// acks for data never sent, ...). The message carries the event-trace tail.
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Simulator;

struct Event {
  std::uint32_t kind = 0;
  std::uint64_t arg = 0;
};

class EventTarget {
 public:
  virtual ~EventTarget() = default;
  virtual void on_event(Simulator& sim, const Event& ev) = 0;
  /// Stable small integer folded into the trace digest.
  virtual std::uint32_t trace_id() const { return 0; }
};

using EventHandle = std::uint64_t;

/// Pending events ordered by (time, insertion sequence).
class EventQueue {
 public:
  struct Entry {
    SimTime at;
    std::uint64_t seq;
    EventTarget* target;
    Event event;
  };

  EventHandle push(SimTime at, EventTarget* target, Event ev);
  void cancel(EventHandle h) { cancelled_.insert(h); }
  bool empty();
  /// Earliest live entry; queue must be non-empty.
  const Entry& top();
  Entry pop();
  std::size_t size() const { return heap_.size(); }

 private:
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.at != b.at) return a.at > b.at;
      return a.seq > b.seq;
    }
  };
  void skip_cancelled();

  std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
  std::unordered_set<EventHandle> cancelled_;
  std::uint64_t next_seq_ = 0;
};

struct FlowCounters {
  std::uint64_t packets_sent = 0;       // offered to the bottleneck
  std::uint64_t packets_delivered = 0;  // arrived at the receiver
  std::uint64_t packets_dropped = 0;    // dropped by the qdisc
  ByteCount bytes_enqueued = 0;
  ByteCount bytes_delivered = 0;
};

struct SimStats {
  std::uint64_t events_processed = 0;
  std::uint64_t trace_digest = 0xcbf29ce484222325ULL;
  std::map<FlowId, FlowCounters> flows;

  friend bool operator==(const SimStats&, const SimStats&) = default;
};

inline bool operator==(const FlowCounters& a, const FlowCounters& b) {
  return a.packets_sent == b.packets_sent && a.packets_delivered == b.packets_delivered &&
         a.packets_dropped == b.packets_dropped && a.bytes_enqueued == b.bytes_enqueued &&
         a.bytes_delivered == b.bytes_delivered;
}

class Simulator {
 public:
  SimTime now() const { return now_; }

  /// Schedules `ev` on `target` at absolute time `at`. Throws
  /// SimulationError when `at` lies in the past.
  EventHandle schedule(SimTime at, EventTarget* target, Event ev = {});
  EventHandle schedule_in(SimTime delay, EventTarget* target, Event ev = {}) {
    return schedule(now_ + delay, target, ev);
  }
  void cancel(EventHandle h) { queue_.cancel(h); }

  /// Processes every event with time <= end, then advances the clock to end.
  const SimStats& run_until(SimTime end);

  SimStats& stats() { return stats_; }
  const SimStats& stats() const { return stats_; }
  FlowCounters& flow(FlowId id) { return stats_.flows[id]; }

  /// Human-readable tail of the most recently processed events.
  std::string trace_tail() const;
  [[noreturn]] void fail(const std::string& what) const;

 private:
  struct TraceRecord {
    SimTime at{0};
    std::uint32_t target = 0;
    std::uint32_t kind = 0;
    std::uint64_t arg = 0;
  };
  void record(const EventQueue::Entry& e);

  SimTime now_{0};
  EventQueue queue_;
  SimStats stats_;
  static constexpr std::size_t kTailSize = 16;
  std::array<TraceRecord, kTailSize> tail_{};
  std::size_t tail_pos_ = 0;
};

}  // namespace tonopah::sim
