#include "tonopah/sim/simulator.hpp"

#include <algorithm>
#include <sstream>

namespace tonopah::sim {

EventHandle EventQueue::push(SimTime at, EventTarget* target, Event ev) {
  const auto seq = next_seq_++;
  heap_.push(Entry{at, seq, target, ev});
  return seq;
}

void EventQueue::skip_cancelled() {
  while (!heap_.empty() && !cancelled_.empty()) {
    auto it = cancelled_.find(heap_.top().seq);
    if (it == cancelled_.end()) return;
    cancelled_.erase(it);
    heap_.pop();
  }
}

bool EventQueue::empty() {
  skip_cancelled();
  return heap_.empty();
}

const EventQueue::Entry& EventQueue::top() {
  skip_cancelled();
  return heap_.top();
}

EventQueue::Entry EventQueue::pop() {
  skip_cancelled();
  Entry e = heap_.top();
  heap_.pop();
  return e;
}

EventHandle Simulator::schedule(SimTime at, EventTarget* target, Event ev) {
  if (at < now_) {
    std::ostringstream os;
    os << "event scheduled in the past: at=" << at.count() << "ns now=" << now_.count()
       << "ns kind=" << ev.kind;
    fail(os.str());
  }
  return queue_.push(at, target, ev);
}

namespace {

inline std::uint64_t fnv_mix(std::uint64_t h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (i * 8)) & 0xffu;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

void Simulator::record(const EventQueue::Entry& e) {
  const std::uint32_t id = e.target->trace_id();
  auto& h = stats_.trace_digest;
  h = fnv_mix(h, static_cast<std::uint64_t>(e.at.count()));
  h = fnv_mix(h, (static_cast<std::uint64_t>(id) << 32) | e.event.kind);
  h = fnv_mix(h, e.event.arg);
  tail_[tail_pos_ % kTailSize] = TraceRecord{e.at, id, e.event.kind, e.event.arg};
  ++tail_pos_;
  ++stats_.events_processed;
}

const SimStats& Simulator::run_until(SimTime end) {
  while (!queue_.empty() && queue_.top().at <= end) {
    auto e = queue_.pop();
    now_ = e.at;
    record(e);
    e.target->on_event(*this, e.event);
  }
  if (end > now_) now_ = end;
  return stats_;
}

std::string Simulator::trace_tail() const {
  std::ostringstream os;
  const std::size_t n = std::min(tail_pos_, kTailSize);
  for (std::size_t i = tail_pos_ - n; i < tail_pos_; ++i) {
    const auto& r = tail_[i % kTailSize];
    os << "  t=" << r.at.count() << "ns target=" << r.target << " kind=" << r.kind
       << " arg=" << r.arg << '\n';
  }
  return os.str();
}

void Simulator::fail(const std::string& what) const {
  throw SimulationError(what + "\nlast events:\n" + trace_tail());
}

}  // namespace tonopah::sim
