#include "tonopah/qdisc/disciplines.hpp"

#include <algorithm>
#include <stdexcept>

namespace tonopah::qdisc {

std::string_view to_string(QdiscKind k) {
  switch (k) {
    case QdiscKind::DropTail: return "pfifo";
    case QdiscKind::FqDrr: return "fq";
    case QdiscKind::FqCodel: return "fq_codel";
  }
  return "?";
}

std::optional<QdiscKind> parse_qdisc_kind(std::string_view name) {
  if (name == "pfifo" || name == "droptail") return QdiscKind::DropTail;
  if (name == "fq" || name == "fq_drr") return QdiscKind::FqDrr;
  if (name == "fq_codel") return QdiscKind::FqCodel;
  return std::nullopt;
}

void validate(const QdiscConfig& cfg) {
  if (cfg.kind != QdiscKind::FqCodel && cfg.buffer_packets < 1)
    throw std::invalid_argument("qdisc buffer_packets must be >= 1");
  if (cfg.kind != QdiscKind::DropTail && cfg.quantum_bytes < sim::kDataPacketBytes)
    throw std::invalid_argument("qdisc quantum_bytes must cover the maximum packet size");
  if (cfg.kind == QdiscKind::FqCodel) {
    if (cfg.codel_target.count() <= 0 || cfg.codel_interval.count() <= 0)
      throw std::invalid_argument("codel target and interval must be positive");
    if (cfg.fq_codel_limit_packets < 1)
      throw std::invalid_argument("fq_codel packet limit must be >= 1");
  }
}

std::unique_ptr<Qdisc> make_qdisc(const QdiscConfig& cfg) {
  validate(cfg);
  switch (cfg.kind) {
    case QdiscKind::DropTail:
      return std::make_unique<DropTail>(cfg.buffer_packets);
    case QdiscKind::FqDrr:
      return std::make_unique<FairQueue>(FairQueue::Params{
          .quantum_bytes = cfg.quantum_bytes,
          .per_flow_limit = cfg.buffer_packets,
          .total_limit = 0,
          .codel = std::nullopt});
    case QdiscKind::FqCodel:
      return std::make_unique<FairQueue>(FairQueue::Params{
          .quantum_bytes = cfg.quantum_bytes,
          .per_flow_limit = 0,
          .total_limit = cfg.fq_codel_limit_packets,
          .codel = CodelParams{cfg.codel_target, cfg.codel_interval, cfg.quantum_bytes}});
  }
  throw std::invalid_argument("unknown qdisc kind");
}

// --- DropTail --------------------------------------------------------------

DropTail::DropTail(std::size_t buffer_packets) : limit_(buffer_packets) {
  if (limit_ < 1) throw std::invalid_argument("DropTail buffer must hold at least one packet");
}

EnqueueResult DropTail::enqueue(Packet pkt, SimTime now) {
  if (fifo_.size() >= limit_) {
    report_drop(pkt);
    return EnqueueResult::Dropped;
  }
  pkt.enqueued_at = now;
  bytes_ += pkt.size_bytes;
  fifo_.push_back(pkt);
  return EnqueueResult::Accepted;
}

std::optional<Packet> DropTail::dequeue(SimTime) {
  if (fifo_.empty()) return std::nullopt;
  Packet p = fifo_.front();
  fifo_.pop_front();
  bytes_ -= p.size_bytes;
  return p;
}

// --- FairQueue -------------------------------------------------------------

namespace {

std::uint64_t pack(const FlowKey& k) {
  return (static_cast<std::uint64_t>(k.flow_id) << 8) | static_cast<std::uint64_t>(k.subflow);
}

}  // namespace

FairQueue::FairQueue(Params p) : params_(p) {
  if (params_.quantum_bytes <= 0) throw std::invalid_argument("DRR quantum must be positive");
}

const FlowQueue* FairQueue::find(const FlowKey& key) const {
  auto it = index_.find(pack(key));
  return it == index_.end() ? nullptr : &queues_[it->second];
}

FlowQueue& FairQueue::queue_for(const FlowKey& key) {
  auto [it, inserted] = index_.try_emplace(pack(key), queues_.size());
  if (inserted) {
    FlowQueue q;
    q.key = key;
    if (params_.codel) q.codel = CodelState(*params_.codel);
    queues_.push_back(std::move(q));
  }
  return queues_[it->second];
}

Packet FairQueue::pop_head(FlowQueue& q) {
  Packet p = q.packets.front();
  q.packets.pop_front();
  q.bytes -= p.size_bytes;
  bytes_ -= p.size_bytes;
  --packets_;
  return p;
}

void FairQueue::deactivate_front() {
  auto& q = queues_[active_.front()];
  q.active = false;
  q.deficit_bytes = 0;
  q.granted_this_visit = false;
  q.codel.on_empty();
  active_.pop_front();
}

EnqueueResult FairQueue::enqueue(Packet pkt, SimTime now) {
  auto idx = index_.find(pack(flow_key(pkt)));
  FlowQueue& q = idx == index_.end() ? queue_for(flow_key(pkt)) : queues_[idx->second];
  if (params_.per_flow_limit != 0 && q.packets.size() >= params_.per_flow_limit) {
    report_drop(pkt);
    return EnqueueResult::Dropped;
  }
  pkt.enqueued_at = now;
  q.bytes += pkt.size_bytes;
  bytes_ += pkt.size_bytes;
  ++packets_;
  q.packets.push_back(pkt);
  if (!q.active) {
    q.active = true;
    q.deficit_bytes = 0;
    q.granted_this_visit = false;
    active_.push_back(static_cast<std::size_t>(&q - queues_.data()));
  }
  if (params_.total_limit != 0 && packets_ > params_.total_limit) drop_from_longest();
  return EnqueueResult::Accepted;
}

void FairQueue::drop_from_longest() {
  std::size_t victim = 0;
  ByteCount longest = -1;
  for (std::size_t i = 0; i < queues_.size(); ++i) {
    if (queues_[i].bytes > longest) {
      longest = queues_[i].bytes;
      victim = i;
    }
  }
  auto& q = queues_[victim];
  report_drop(pop_head(q));
  if (q.packets.empty()) {
    auto it = std::find(active_.begin(), active_.end(), victim);
    active_.splice(active_.begin(), active_, it);
    deactivate_front();
  }
}

std::optional<Packet> FairQueue::dequeue(SimTime now) {
  while (!active_.empty()) {
    FlowQueue& q = queues_[active_.front()];
    if (!q.granted_this_visit) {
      q.deficit_bytes += params_.quantum_bytes;
      q.granted_this_visit = true;
    }
    if (q.packets.front().size_bytes > q.deficit_bytes) {
      q.granted_this_visit = false;
      active_.splice(active_.end(), active_, active_.begin());
      continue;
    }
    Packet p = pop_head(q);
    if (params_.codel && q.codel.should_drop(now - p.enqueued_at, now, bytes_)) {
      report_drop(p);
      if (q.packets.empty()) deactivate_front();
      continue;
    }
    q.deficit_bytes -= p.size_bytes;
    if (q.packets.empty()) deactivate_front();
    return p;
  }
  return std::nullopt;
}

}  // namespace tonopah::qdisc
