#pragma once

#include <deque>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "tonopah/detect/detector.hpp"
#include "tonopah/sim/link.hpp"
#include "tonopah/transport/newreno.hpp"

namespace tonopah::transport {

using sim::FlowId;
using sim::Packet;
using sim::SubflowRole;

struct ConnectionConfig {
  FlowId flow_id = 1;
  SimTime start_at{0};
  NewRenoConfig cc;
  /// Absent: one plain NewReno subflow. Present: dominant and non-dominant
  /// subflows under one shared window, with fair-queuing detection.
  std::optional<detect::TonopahConfig> tonopah;
  /// Finite transfer size in packets; absent means bulk (unbounded).
  std::optional<std::uint64_t> transfer_packets;
  bool record_epochs = false;
  bool record_departures = false;
};

/// One row per completed detection epoch.
struct EpochRecord {
  SimTime at{0};
  SimTime avg_dom{0};
  SimTime avg_nondom{0};
  std::uint64_t samples_dom = 0;
  std::uint64_t samples_nondom = 0;
  detect::Outcome outcome = detect::Outcome::NoDecision;
  bool fq_detected = false;
  ByteCount cwnd = 0;
};

struct Departure {
  SimTime at{0};
  SubflowRole subflow = SubflowRole::None;
  ByteCount size = 0;
  bool retransmit = false;
};

struct ConnectionCounters {
  std::uint64_t packets_sent = 0;
  std::uint64_t retransmits = 0;
  std::uint64_t fast_retransmits = 0;
  std::uint64_t timeouts = 0;
  std::uint64_t backoffs = 0;
  ByteCount max_in_flight_over_cwnd = 0;
};

/// Sending endpoint: NewReno over one or two paced subflows. Each subflow
/// has its own sequence space and loss recovery; the window is shared.
class Connection final : public sim::EventTarget, public sim::PacketSink {
 public:
  Connection(ConnectionConfig cfg, sim::PacketSink* egress, std::uint32_t trace_id);

  /// Schedules the flow start.
  void start(sim::Simulator& sim);
  /// Ack arrival.
  void receive(sim::Simulator& sim, const Packet& ack) override;
  void on_event(sim::Simulator& sim, const sim::Event& ev) override;
  std::uint32_t trace_id() const override { return trace_id_; }

  const ConnectionConfig& config() const { return cfg_; }
  const NewReno& congestion() const { return cc_; }
  NewReno& congestion_for_test() { return cc_; }
  const RttEstimator& rtt() const { return rtt_; }
  const detect::Detector* detector() const { return detector_ ? &*detector_ : nullptr; }
  const std::vector<EpochRecord>& epochs() const { return epochs_; }
  const std::vector<Departure>& departures() const { return departures_; }
  const ConnectionCounters& counters() const { return counters_; }

  ByteCount in_flight() const;
  /// Sent-but-unacked packets of `flow`, summed over subflows (max - una).
  std::uint64_t outstanding_packets() const;
  /// Current total pacing rate (cwnd / srtt); infinite before the first sample.
  sim::BitRate pacing_rate() const;
  bool transfer_complete() const;
  std::size_t subflow_count() const { return subflows_.size(); }

 private:
  struct SentRecord {
    std::uint64_t dsn = 0;
    SimTime sent_at{0};
    std::uint64_t tx_id = 0;
    bool retransmitted = false;
  };

  struct Subflow {
    SubflowRole role = SubflowRole::None;
    sim::Fraction share{1, 1};
    std::uint64_t snd_una = 0;
    std::uint64_t snd_nxt = 0;
    std::uint64_t snd_max = 0;
    std::deque<SentRecord> records;  // seqs [snd_una, snd_max)
    std::uint32_t dupacks = 0;
    bool in_recovery = false;
    bool partial_ack_seen = false;
    std::uint64_t recover = 0;
    std::optional<std::uint64_t> fast_retx;
    std::optional<SimTime> last_send;
    SimTime rto_deadline{0};
    bool rto_armed = false;
    bool rto_event_pending = false;
  };

  Subflow& subflow_for(SubflowRole role, sim::Simulator& sim);
  std::size_t index_of(SubflowRole role) const;
  SimTime next_departure(const Subflow& s, SimTime now) const;
  void try_send(sim::Simulator& sim);
  void emit(sim::Simulator& sim, Subflow& s, std::uint64_t seq, bool retransmit);
  void arm_wake(sim::Simulator& sim, SimTime at);
  void arm_rto(sim::Simulator& sim, std::size_t idx);
  void on_rto(sim::Simulator& sim, std::size_t idx);
  void on_epoch_ack(sim::Simulator& sim, const Packet& ack);
  bool any_in_recovery() const;
  bool has_new_data() const;

  ConnectionConfig cfg_;
  sim::PacketSink* egress_;
  std::uint32_t trace_id_;
  NewReno cc_;
  RttEstimator rtt_;
  std::vector<Subflow> subflows_;
  std::optional<detect::SubflowAssigner> assigner_;
  std::optional<detect::Detector> detector_;
  std::optional<detect::DetectionResponse> response_;
  std::optional<SubflowRole> pending_role_;
  std::uint64_t next_dsn_ = 0;
  std::uint64_t next_tx_id_ = 0;
  // Timeouts of packets sent before this tx_id belong to the last loss episode.
  std::optional<std::uint64_t> timeout_episode_end_;
  bool started_ = false;
  std::optional<SimTime> wake_at_;
  bool epoch_disturbed_ = false;
  std::vector<EpochRecord> epochs_;
  std::vector<Departure> departures_;
  ConnectionCounters counters_;
};

/// Receiving endpoint: per-subflow cumulative acks (one ack per data packet)
/// and recombination of both subflows into one in-order byte stream.
class Receiver final : public sim::PacketSink {
 public:
  /// Acks leave through `ack_path`; `max_jitter` adds a uniformly drawn
  /// host processing delay to each ack.
  Receiver(FlowId flow, sim::DelayLine* ack_path, std::uint64_t seed, SimTime max_jitter,
           bool record_stream = false);

  void receive(sim::Simulator& sim, const Packet& pkt) override;

  /// Length of the contiguous data prefix handed to the application.
  std::uint64_t app_packets_delivered() const { return app_next_; }
  std::uint64_t duplicate_packets() const { return duplicates_; }
  const std::vector<std::uint64_t>& delivered_stream() const { return stream_; }

 private:
  struct SubflowRx {
    std::uint64_t expected = 0;
    std::set<std::uint64_t> out_of_order;
  };

  FlowId flow_;
  sim::DelayLine* ack_path_;
  std::mt19937_64 rng_;
  SimTime max_jitter_;
  bool record_stream_;
  std::array<SubflowRx, 3> rx_{};
  std::uint64_t app_next_ = 0;
  std::set<std::uint64_t> app_pending_;
  std::uint64_t duplicates_ = 0;
  std::vector<std::uint64_t> stream_;
};

}  // namespace tonopah::transport
