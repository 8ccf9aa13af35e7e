#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <unordered_map>

#include "tonopah/qdisc/qdisc.hpp"
#include "tonopah/sim/simulator.hpp"

namespace tonopah::sim {

class PacketSink {
 public:
  virtual ~PacketSink() = default;
  virtual void receive(Simulator& sim, const Packet& pkt) = 0;
};

/// Infinite-rate propagation path. Packets leave in FIFO order; an arrival
/// is never earlier than the previous one, so added jitter cannot reorder.
class DelayLine final : public EventTarget {
 public:
  DelayLine(SimTime delay, PacketSink* next, std::uint32_t trace_id)
      : delay_(delay), next_(next), trace_id_(trace_id) {}

  void send(Simulator& sim, const Packet& pkt, SimTime extra_delay = SimTime{0});
  void set_sink(PacketSink* next) { next_ = next; }
  SimTime delay() const { return delay_; }
  std::size_t in_flight() const { return pending_.size(); }
  std::size_t in_flight(FlowId flow) const;

  void on_event(Simulator& sim, const Event& ev) override;
  std::uint32_t trace_id() const override { return trace_id_; }

 private:
  SimTime delay_;
  PacketSink* next_;
  std::uint32_t trace_id_;
  SimTime last_arrival_{0};
  std::deque<std::pair<SimTime, Packet>> pending_;
};

struct LinkSpec {
  BitRate rate = BitRate::mbps(10);
  SimTime one_way_prop_delay = std::chrono::milliseconds(5);
  qdisc::QdiscConfig qdisc;
};

/// The bottleneck: a qdisc drained at line rate, one packet at a time, each
/// packet propagating `one_way_prop_delay` after its serialization ends.
class Link final : public EventTarget, public PacketSink {
 public:
  /// Called as each packet finishes serialization; `sojourn` spans qdisc
  /// arrival to the end of serialization.
  using DepartureHook = std::function<void(const Packet&, SimTime sojourn, SimTime now)>;

  Link(const LinkSpec& spec, PacketSink* downstream, std::uint32_t trace_id);

  void transmit(Simulator& sim, const Packet& pkt);
  void receive(Simulator& sim, const Packet& pkt) override { transmit(sim, pkt); }

  void set_departure_hook(DepartureHook h) { on_departure_ = std::move(h); }
  void set_downstream(PacketSink* s) { propagation_.set_sink(s); }

  const LinkSpec& spec() const { return spec_; }
  const qdisc::Qdisc& queue() const { return *qdisc_; }
  bool busy() const { return in_service_.has_value(); }
  /// Packets of `flow` inside the qdisc, in serialization, or propagating.
  std::size_t in_network(FlowId flow) const;

  void on_event(Simulator& sim, const Event& ev) override;
  std::uint32_t trace_id() const override { return trace_id_; }

 private:
  void start_next(Simulator& sim);

  LinkSpec spec_;
  std::unique_ptr<qdisc::Qdisc> qdisc_;
  DelayLine propagation_;
  std::uint32_t trace_id_;
  Simulator* sim_for_drops_ = nullptr;
  std::optional<Packet> in_service_;
  std::unordered_map<FlowId, std::size_t> queued_per_flow_;
  DepartureHook on_departure_;
};

/// Routes packets to per-flow sinks.
class FlowDemux final : public PacketSink {
 public:
  void attach(FlowId id, PacketSink* sink) { routes_[id] = sink; }
  void receive(Simulator& sim, const Packet& pkt) override;

 private:
  std::unordered_map<FlowId, PacketSink*> routes_;
};

}  // namespace tonopah::sim
