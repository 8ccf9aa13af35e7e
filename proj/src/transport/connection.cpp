#include "tonopah/transport/connection.hpp"

#include <algorithm>
#include <string>

namespace tonopah::transport {

namespace {
constexpr std::uint32_t kStart = 1;
constexpr std::uint32_t kWake = 2;
constexpr std::uint32_t kRto = 3;

std::size_t role_slot(SubflowRole r) { return static_cast<std::size_t>(r); }
}  // namespace

Connection::Connection(ConnectionConfig cfg, sim::PacketSink* egress, std::uint32_t trace_id)
    : cfg_(std::move(cfg)), egress_(egress), trace_id_(trace_id), cc_(cfg_.cc) {
  if (cfg_.tonopah) {
    detect::validate(*cfg_.tonopah);
    const auto share = cfg_.tonopah->dominant_share;
    subflows_.emplace_back().role = SubflowRole::Dominant;
    subflows_.back().share = share;
    subflows_.emplace_back().role = SubflowRole::NonDominant;
    subflows_.back().share = share.complement();
    assigner_.emplace(share);
    detector_.emplace(*cfg_.tonopah);
    response_.emplace(*cfg_.tonopah);
  } else {
    subflows_.emplace_back().role = SubflowRole::None;
  }
}

void Connection::start(sim::Simulator& sim) { sim.schedule(cfg_.start_at, this, {kStart, 0}); }

std::size_t Connection::index_of(SubflowRole role) const {
  for (std::size_t i = 0; i < subflows_.size(); ++i)
    if (subflows_[i].role == role) return i;
  return subflows_.size();
}

Connection::Subflow& Connection::subflow_for(SubflowRole role, sim::Simulator& sim) {
  const auto i = index_of(role);
  if (i == subflows_.size())
    sim.fail("flow " + std::to_string(cfg_.flow_id) + " has no subflow " +
             std::string(sim::to_string(role)));
  return subflows_[i];
}

ByteCount Connection::in_flight() const {
  ByteCount total = 0;
  for (const auto& s : subflows_)
    total += static_cast<ByteCount>(s.snd_nxt - s.snd_una) * cfg_.cc.mtu;
  return total;
}

std::uint64_t Connection::outstanding_packets() const {
  std::uint64_t n = 0;
  for (const auto& s : subflows_) n += s.snd_max - s.snd_una;
  return n;
}

sim::BitRate Connection::pacing_rate() const {
  if (!rtt_.has_sample()) return sim::BitRate::infinite();
  return sim::rate_from(cc_.cwnd(), rtt_.srtt());
}

bool Connection::has_new_data() const {
  return !cfg_.transfer_packets || next_dsn_ < *cfg_.transfer_packets;
}

bool Connection::transfer_complete() const {
  return !has_new_data() && outstanding_packets() == 0;
}

bool Connection::any_in_recovery() const {
  return std::any_of(subflows_.begin(), subflows_.end(),
                     [](const Subflow& s) { return s.in_recovery; });
}

SimTime Connection::next_departure(const Subflow& s, SimTime now) const {
  const auto rate = pacing_rate();
  if (rate.is_infinite() || !s.last_send) return now;
  // Subflow rate = share * total rate, so its gap is the total gap / share.
  const auto total_gap = sim::serialization_time(cfg_.cc.mtu, rate);
  const auto gap = SimTime{total_gap.count() * s.share.den / s.share.num};
  return std::max(now, *s.last_send + gap);
}

void Connection::arm_wake(sim::Simulator& sim, SimTime at) {
  if (wake_at_ && *wake_at_ <= at) return;
  wake_at_ = at;
  sim.schedule(at, this, {kWake, 0});
}

void Connection::arm_rto(sim::Simulator& sim, std::size_t idx) {
  auto& s = subflows_[idx];
  s.rto_deadline = sim.now() + rtt_.rto();
  s.rto_armed = true;
  if (!s.rto_event_pending) {
    s.rto_event_pending = true;
    sim.schedule(s.rto_deadline, this, {kRto, idx});
  }
}

void Connection::emit(sim::Simulator& sim, Subflow& s, std::uint64_t seq, bool retransmit) {
  const SimTime now = sim.now();
  auto& rec = s.records[seq - s.snd_una];
  rec.sent_at = now;
  rec.tx_id = next_tx_id_++;
  rec.retransmitted = rec.retransmitted || retransmit;

  Packet p;
  p.flow_id = cfg_.flow_id;
  p.subflow = s.role;
  p.is_retransmit = retransmit;
  p.size_bytes = cfg_.cc.mtu;
  p.seq = seq;
  p.dsn = rec.dsn;
  p.tx_id = rec.tx_id;
  p.sent_at = now;

  s.last_send = now;
  ++counters_.packets_sent;
  if (retransmit) ++counters_.retransmits;
  if (cfg_.record_departures) departures_.push_back({now, s.role, p.size_bytes, retransmit});
  if (!s.rto_armed) arm_rto(sim, static_cast<std::size_t>(&s - subflows_.data()));
  egress_->receive(sim, p);
}

void Connection::try_send(sim::Simulator& sim) {
  if (!started_) return;
  const SimTime now = sim.now();
  for (;;) {
    // Fast retransmissions bypass the window but still respect pacing.
    bool retransmitted = false;
    for (auto& s : subflows_) {
      if (!s.fast_retx) continue;
      const auto t = next_departure(s, now);
      if (t > now) {
        arm_wake(sim, t);
        continue;
      }
      const auto seq = *s.fast_retx;
      s.fast_retx.reset();
      if (seq >= s.snd_una && seq < s.snd_max) {
        emit(sim, s, seq, true);
        retransmitted = true;
      }
    }
    if (retransmitted) continue;

    if (in_flight() >= cc_.cwnd()) return;

    Subflow* s = nullptr;
    for (auto& cand : subflows_) {
      if (cand.snd_nxt >= cand.snd_max) continue;
      if (!s || cand.records[cand.snd_nxt - cand.snd_una].dsn <
                    s->records[s->snd_nxt - s->snd_una].dsn)
        s = &cand;
    }
    const bool is_new = s == nullptr;
    if (is_new) {
      if (!has_new_data()) return;
      if (!pending_role_) {
        pending_role_ = assigner_ ? assigner_->assign(cfg_.cc.mtu) : SubflowRole::None;
      }
      s = &subflow_for(*pending_role_, sim);
    }
    const auto t = next_departure(*s, now);
    if (t > now) {
      arm_wake(sim, t);
      return;
    }
    if (is_new) {
      pending_role_.reset();
      const auto seq = s->snd_max;
      s->records.push_back(SentRecord{.dsn = next_dsn_++});
      ++s->snd_max;
      s->snd_nxt = s->snd_max;
      emit(sim, *s, seq, false);
    } else {
      const auto seq = s->snd_nxt++;
      emit(sim, *s, seq, true);
    }
    counters_.max_in_flight_over_cwnd =
        std::max(counters_.max_in_flight_over_cwnd, in_flight() - cc_.cwnd());
  }
}

void Connection::receive(sim::Simulator& sim, const Packet& ack) {
  if (!ack.is_ack || ack.flow_id != cfg_.flow_id) sim.fail("connection got a foreign packet");
  const SimTime now = sim.now();
  auto& s = subflow_for(ack.subflow, sim);
  const auto idx = static_cast<std::size_t>(&s - subflows_.data());
  if (ack.cum_ack > s.snd_max || ack.acked_seq >= s.snd_max) {
    sim.fail("ack for never-sent data: flow " + std::to_string(cfg_.flow_id) + " subflow " +
             std::string(sim::to_string(s.role)) + " cum_ack=" + std::to_string(ack.cum_ack) +
             " seq=" + std::to_string(ack.acked_seq) + " snd_max=" + std::to_string(s.snd_max));
  }

  if (!ack.echo_retransmit) {
    const SimTime sample = now - ack.echo_sent_at;
    rtt_.on_sample(sample);
    if (detector_) detector_->on_rtt_sample(s.role, sample);
  }

  if (ack.cum_ack > s.snd_una) {
    const auto newly = ack.cum_ack - s.snd_una;
    s.records.erase(s.records.begin(), s.records.begin() + static_cast<std::ptrdiff_t>(newly));
    s.snd_una = ack.cum_ack;
    s.snd_nxt = std::max(s.snd_nxt, s.snd_una);
    s.dupacks = 0;
    if (s.fast_retx && *s.fast_retx < s.snd_una) s.fast_retx.reset();

    if (s.in_recovery) {
      if (s.snd_una >= s.recover) {
        s.in_recovery = false;
        if (!any_in_recovery()) cc_.on_recovery_exit();
        arm_rto(sim, idx);
      } else {
        // Partial ack: the next hole is lost too.
        s.fast_retx = s.snd_una;
        if (!s.partial_ack_seen) {
          s.partial_ack_seen = true;
          arm_rto(sim, idx);
        }
      }
    } else {
      cc_.on_ack(static_cast<ByteCount>(newly) * cfg_.cc.mtu);
      arm_rto(sim, idx);
    }
    if (s.snd_una == s.snd_max) s.rto_armed = false;
  } else if (ack.cum_ack == s.snd_una && s.snd_una < s.snd_max) {
    ++s.dupacks;
    if (s.dupacks == 3 && !s.in_recovery && s.snd_una >= s.recover) {
      s.in_recovery = true;
      s.partial_ack_seen = false;
      s.recover = s.snd_max;
      if (cc_.phase() != Phase::FastRecovery) cc_.on_fast_retransmit();
      s.fast_retx = s.snd_una;
      ++counters_.fast_retransmits;
      epoch_disturbed_ = true;
    }
  }

  on_epoch_ack(sim, ack);
  try_send(sim);
}

void Connection::on_epoch_ack(sim::Simulator& sim, const Packet& ack) {
  if (!detector_) return;
  if (cc_.phase() == Phase::FastRecovery) epoch_disturbed_ = true;
  if (ack.echo_tx_id < detector_->epoch().end_marker_tx_id) return;

  const SimTime now = sim.now();
  const auto& ep = detector_->epoch();
  const auto samples_dom = ep.count_dom;
  const auto samples_nondom = ep.count_nondom;
  const auto d = detector_->end_epoch(now, epoch_disturbed_);
  if (d.outcome == detect::Outcome::Detected &&
      response_->on_detection(cc_, detector_->epochs_completed())) {
    ++counters_.backoffs;
  }
  if (cfg_.record_epochs) {
    epochs_.push_back(EpochRecord{now, d.avg_dom, d.avg_nondom, samples_dom, samples_nondom,
                                  d.outcome, d.detected, cc_.cwnd()});
  }
  detector_->begin_epoch(now, next_tx_id_ == 0 ? 0 : next_tx_id_ - 1);
  epoch_disturbed_ = cc_.phase() == Phase::FastRecovery;
}

void Connection::on_rto(sim::Simulator& sim, std::size_t idx) {
  auto& s = subflows_[idx];
  s.rto_event_pending = false;
  if (!s.rto_armed || s.snd_una == s.snd_max) return;
  if (sim.now() < s.rto_deadline) {
    s.rto_event_pending = true;
    sim.schedule(s.rto_deadline, this, {kRto, idx});
    return;
  }
  ++counters_.timeouts;
  const bool same_episode = timeout_episode_end_ && s.records.front().tx_id < *timeout_episode_end_;
  if (!same_episode) {
    cc_.on_timeout();
    rtt_.backoff();
    timeout_episode_end_ = next_tx_id_;
  }
  s.snd_nxt = s.snd_una;  // go back N
  s.in_recovery = false;
  s.partial_ack_seen = false;
  s.recover = s.snd_max;
  s.dupacks = 0;
  s.fast_retx.reset();
  epoch_disturbed_ = true;
  arm_rto(sim, idx);
  try_send(sim);
}

void Connection::on_event(sim::Simulator& sim, const sim::Event& ev) {
  switch (ev.kind) {
    case kStart:
      started_ = true;
      if (detector_) detector_->begin_epoch(sim.now(), 0);
      try_send(sim);
      break;
    case kWake:
      if (wake_at_ && sim.now() >= *wake_at_) wake_at_.reset();
      try_send(sim);
      break;
    case kRto:
      on_rto(sim, static_cast<std::size_t>(ev.arg));
      break;
    default:
      sim.fail("connection: unknown event kind " + std::to_string(ev.kind));
  }
}

// --- Receiver --------------------------------------------------------------

Receiver::Receiver(FlowId flow, sim::DelayLine* ack_path, std::uint64_t seed, SimTime max_jitter,
                   bool record_stream)
    : flow_(flow),
      ack_path_(ack_path),
      rng_(seed),
      max_jitter_(max_jitter),
      record_stream_(record_stream) {}

void Receiver::receive(sim::Simulator& sim, const Packet& pkt) {
  if (pkt.is_ack || pkt.flow_id != flow_) sim.fail("receiver got a foreign packet");
  auto& fc = sim.flow(flow_);
  ++fc.packets_delivered;
  fc.bytes_delivered += pkt.size_bytes;

  auto& rx = rx_[role_slot(pkt.subflow)];
  if (pkt.seq == rx.expected) {
    ++rx.expected;
    while (!rx.out_of_order.empty() && *rx.out_of_order.begin() == rx.expected) {
      rx.out_of_order.erase(rx.out_of_order.begin());
      ++rx.expected;
    }
  } else if (pkt.seq < rx.expected || !rx.out_of_order.insert(pkt.seq).second) {
    ++duplicates_;
  }

  auto deliver = [this](std::uint64_t dsn) {
    if (record_stream_) stream_.push_back(dsn);
    ++app_next_;
  };
  if (pkt.dsn == app_next_) {
    deliver(pkt.dsn);
    while (!app_pending_.empty() && *app_pending_.begin() == app_next_) {
      app_pending_.erase(app_pending_.begin());
      deliver(app_next_);
    }
  } else if (pkt.dsn > app_next_) {
    app_pending_.insert(pkt.dsn);
  }

  Packet ack;
  ack.flow_id = flow_;
  ack.subflow = pkt.subflow;
  ack.is_ack = true;
  ack.size_bytes = sim::kAckPacketBytes;
  ack.cum_ack = rx.expected;
  ack.acked_seq = pkt.seq;
  ack.echo_sent_at = pkt.sent_at;
  ack.echo_tx_id = pkt.tx_id;
  ack.echo_retransmit = pkt.is_retransmit;
  ack.sent_at = sim.now();

  SimTime jitter{0};
  if (max_jitter_.count() > 0)
    jitter = SimTime{static_cast<SimTime::rep>(rng_() % static_cast<std::uint64_t>(max_jitter_.count() + 1))};
  ack_path_->send(sim, ack, jitter);
}

}  // namespace tonopah::transport
