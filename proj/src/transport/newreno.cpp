#include "tonopah/transport/newreno.hpp"

#include <algorithm>
#include <stdexcept>

namespace tonopah::transport {

void RttEstimator::on_sample(SimTime rtt) {
  latest_ = rtt;
  min_ = std::min(min_, rtt);
  if (samples_ == 0) {
    srtt_ = rtt;
    rttvar_ = rtt / 2;
  } else {
    const SimTime err = srtt_ > rtt ? srtt_ - rtt : rtt - srtt_;
    rttvar_ = (3 * rttvar_ + err) / 4;
    srtt_ = (7 * srtt_ + rtt) / 8;
  }
  ++samples_;
  rto_ = std::min(srtt_ + std::max(4 * rttvar_, kMinRto), kMaxRto);
}

void RttEstimator::backoff() { rto_ = std::min(rto_ * 2, kMaxRto); }

NewReno::NewReno(NewRenoConfig cfg) : cfg_(cfg), cwnd_(cfg.initial_cwnd) {
  if (cfg_.mtu <= 0 || cfg_.min_cwnd < cfg_.mtu || cfg_.initial_cwnd < cfg_.min_cwnd)
    throw std::invalid_argument("invalid NewReno window configuration");
}

void NewReno::on_ack(ByteCount acked) {
  if (phase_ == Phase::FastRecovery || acked <= 0) return;
  if (phase_ == Phase::SlowStart) {
    cwnd_ += acked;
    if (cwnd_ >= ssthresh_) phase_ = Phase::CongestionAvoidance;
    return;
  }
  const ByteCount num = cfg_.mtu * acked + ca_remainder_;
  const ByteCount window = cwnd_;
  cwnd_ += num / window;
  ca_remainder_ = num % window;
}

void NewReno::on_fast_retransmit() {
  ssthresh_ = std::max(cwnd_ / 2, cfg_.min_cwnd);
  cwnd_ = ssthresh_;
  ca_remainder_ = 0;
  phase_ = Phase::FastRecovery;
}

void NewReno::on_recovery_exit() {
  if (phase_ == Phase::FastRecovery) phase_ = growth_phase();
}

void NewReno::on_timeout() {
  ssthresh_ = std::max(cwnd_ / 2, cfg_.min_cwnd);
  cwnd_ = cfg_.min_cwnd;
  ca_remainder_ = 0;
  phase_ = Phase::SlowStart;
}

bool NewReno::reduce_by(sim::Fraction fraction) {
  const auto keep = fraction.complement();
  const ByteCount reduced = (cwnd_ * keep.num + keep.den - 1) / keep.den;
  const ByteCount next = std::max(reduced, cfg_.min_cwnd);
  if (next >= cwnd_) return false;
  cwnd_ = next;
  return true;
}

void NewReno::set_cwnd_for_test(ByteCount cwnd) {
  cwnd_ = cwnd;
  if (phase_ != Phase::FastRecovery) phase_ = growth_phase();
}

void NewReno::set_ssthresh_for_test(ByteCount ss) {
  ssthresh_ = ss;
  if (phase_ != Phase::FastRecovery) phase_ = growth_phase();
}

SimTime pace_next_send(std::optional<SimTime> last_send, ByteCount size, sim::BitRate rate,
                       SimTime now) {
  if (!last_send) return now;
  return std::max(now, *last_send + sim::serialization_time(size, rate));
}

}  // namespace tonopah::transport
