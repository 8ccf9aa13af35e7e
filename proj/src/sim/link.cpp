#include "tonopah/sim/link.hpp"

#include <algorithm>

namespace tonopah::sim {

namespace {
constexpr std::uint32_t kDeliver = 1;
constexpr std::uint32_t kTxComplete = 2;
}  // namespace

// --- DelayLine -------------------------------------------------------------

void DelayLine::send(Simulator& sim, const Packet& pkt, SimTime extra_delay) {
  const SimTime arrival = std::max(last_arrival_, sim.now() + delay_ + extra_delay);
  last_arrival_ = arrival;
  const bool was_empty = pending_.empty();
  pending_.emplace_back(arrival, pkt);
  if (was_empty) sim.schedule(arrival, this, Event{kDeliver, 0});
}

std::size_t DelayLine::in_flight(FlowId flow) const {
  return static_cast<std::size_t>(std::count_if(
      pending_.begin(), pending_.end(), [flow](const auto& e) { return e.second.flow_id == flow; }));
}

void DelayLine::on_event(Simulator& sim, const Event&) {
  while (!pending_.empty() && pending_.front().first <= sim.now()) {
    Packet p = pending_.front().second;
    pending_.pop_front();
    next_->receive(sim, p);
  }
  if (!pending_.empty()) sim.schedule(pending_.front().first, this, Event{kDeliver, 0});
}

// --- Link ------------------------------------------------------------------

Link::Link(const LinkSpec& spec, PacketSink* downstream, std::uint32_t trace_id)
    : spec_(spec),
      qdisc_(qdisc::make_qdisc(spec.qdisc)),
      propagation_(spec.one_way_prop_delay, downstream, trace_id + 1),
      trace_id_(trace_id) {
  if (spec_.rate.is_infinite()) throw std::invalid_argument("bottleneck rate must be > 0");
  qdisc_->set_drop_handler([this](const Packet& p) {
    --queued_per_flow_[p.flow_id];
    if (sim_for_drops_ != nullptr) ++sim_for_drops_->flow(p.flow_id).packets_dropped;
  });
}

void Link::transmit(Simulator& sim, const Packet& pkt) {
  sim_for_drops_ = &sim;
  auto& fc = sim.flow(pkt.flow_id);
  ++fc.packets_sent;
  fc.bytes_enqueued += pkt.size_bytes;
  ++queued_per_flow_[pkt.flow_id];
  qdisc_->enqueue(pkt, sim.now());
  if (!in_service_) start_next(sim);
}

void Link::start_next(Simulator& sim) {
  auto next = qdisc_->dequeue(sim.now());
  if (!next) return;
  --queued_per_flow_[next->flow_id];
  in_service_ = *next;
  sim.schedule_in(serialization_time(next->size_bytes, spec_.rate), this, Event{kTxComplete, 0});
}

void Link::on_event(Simulator& sim, const Event&) {
  Packet p = *in_service_;
  in_service_.reset();
  if (on_departure_) on_departure_(p, sim.now() - p.enqueued_at, sim.now());
  propagation_.send(sim, p);
  start_next(sim);
}

std::size_t Link::in_network(FlowId flow) const {
  std::size_t n = propagation_.in_flight(flow);
  if (auto it = queued_per_flow_.find(flow); it != queued_per_flow_.end()) n += it->second;
  if (in_service_ && in_service_->flow_id == flow) ++n;
  return n;
}

// --- FlowDemux -------------------------------------------------------------

void FlowDemux::receive(Simulator& sim, const Packet& pkt) {
  auto it = routes_.find(pkt.flow_id);
  if (it == routes_.end()) sim.fail("no route for flow " + std::to_string(pkt.flow_id));
  it->second->receive(sim, pkt);
}

}  // namespace tonopah::sim
