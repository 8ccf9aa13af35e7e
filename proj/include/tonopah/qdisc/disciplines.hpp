#pragma once

#include <deque>
#include <list>
#include <unordered_map>
#include <vector>

#include "tonopah/qdisc/qdisc.hpp"

namespace tonopah::qdisc {

/// Single shared FIFO with tail drop ("pfifo").
class DropTail final : public Qdisc {
 public:
  explicit DropTail(std::size_t buffer_packets);

  EnqueueResult enqueue(Packet pkt, SimTime now) override;
  std::optional<Packet> dequeue(SimTime now) override;
  std::size_t packet_count() const override { return fifo_.size(); }
  ByteCount byte_count() const override { return bytes_; }

 private:
  std::size_t limit_;
  std::deque<Packet> fifo_;
  ByteCount bytes_ = 0;
};

struct FlowQueue {
  FlowKey key;
  std::deque<Packet> packets;
  ByteCount bytes = 0;
  ByteCount deficit_bytes = 0;
  bool granted_this_visit = false;
  bool active = false;
  CodelState codel;
};

/// Deficit round robin over per-flow queues. With CoDel enabled each head
/// packet additionally passes the CoDel drop test ("fq_codel"); without it
/// every flow queue tail-drops at its own limit ("fq").
class FairQueue final : public Qdisc {
 public:
  struct Params {
    ByteCount quantum_bytes = 1514;
    /// Per-flow tail-drop limit; 0 disables it.
    std::size_t per_flow_limit = 100;
    /// Total limit with drop-from-longest overflow; 0 disables it.
    std::size_t total_limit = 0;
    std::optional<CodelParams> codel;
  };

  explicit FairQueue(Params p);

  EnqueueResult enqueue(Packet pkt, SimTime now) override;
  std::optional<Packet> dequeue(SimTime now) override;
  std::size_t packet_count() const override { return packets_; }
  ByteCount byte_count() const override { return bytes_; }

  /// Null when the flow has never been seen.
  const FlowQueue* find(const FlowKey& key) const;
  std::size_t active_flows() const { return active_.size(); }

 private:
  FlowQueue& queue_for(const FlowKey& key);
  void drop_from_longest();
  Packet pop_head(FlowQueue& q);
  void deactivate_front();

  Params params_;
  std::vector<FlowQueue> queues_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
  std::list<std::size_t> active_;  // round order
  std::size_t packets_ = 0;
  ByteCount bytes_ = 0;
};

}  // namespace tonopah::qdisc
