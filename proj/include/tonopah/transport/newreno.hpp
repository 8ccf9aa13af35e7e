#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>

#include "tonopah/sim/fraction.hpp"
#include "tonopah/sim/units.hpp"

namespace tonopah::transport {

using sim::ByteCount;
using sim::SimTime;

/// RFC 6298 smoothed RTT / RTO estimator plus the lifetime minimum RTT.
class RttEstimator {
 public:
  static constexpr SimTime kMinRto = std::chrono::milliseconds(200);
  static constexpr SimTime kMaxRto = std::chrono::seconds(60);
  static constexpr SimTime kInitialRto = std::chrono::seconds(1);

  void on_sample(SimTime rtt);
  /// Exponential backoff after a retransmission timeout.
  void backoff();

  bool has_sample() const { return samples_ > 0; }
  SimTime latest_rtt() const { return latest_; }
  SimTime min_rtt() const { return min_; }
  SimTime srtt() const { return srtt_; }
  SimTime rttvar() const { return rttvar_; }
  SimTime rto() const { return rto_; }
  std::uint64_t samples() const { return samples_; }

 private:
  SimTime latest_{0};
  SimTime min_{std::numeric_limits<SimTime::rep>::max()};
  SimTime srtt_{0};
  SimTime rttvar_{0};
  SimTime rto_{kInitialRto};
  std::uint64_t samples_ = 0;
};

enum class Phase { SlowStart, CongestionAvoidance, FastRecovery };

constexpr std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::SlowStart: return "slow-start";
    case Phase::CongestionAvoidance: return "congestion-avoidance";
    case Phase::FastRecovery: return "fast-recovery";
  }
  return "?";
}

struct NewRenoConfig {
  ByteCount mtu = 1500;
  ByteCount initial_cwnd = 10 * 1500;
  ByteCount min_cwnd = 2 * 1500;
};

/// NewReno window arithmetic. Loss detection and retransmission bookkeeping
/// live in the connection; this class owns cwnd, ssthresh and the phase.
class NewReno {
 public:
  explicit NewReno(NewRenoConfig cfg = {});

  /// Window growth for `acked` newly acknowledged bytes. No-op in
  /// FastRecovery. Slow start adds the acked bytes; congestion avoidance
  /// adds mtu * acked / cwnd, carrying the remainder exactly.
  void on_ack(ByteCount acked);
  /// Triple-dupack loss event: halve and enter FastRecovery.
  void on_fast_retransmit();
  /// Full acknowledgement of the recovery point.
  void on_recovery_exit();
  void on_timeout();
  /// cwnd = max(ceil(cwnd * (1 - fraction)), min_cwnd). Returns true if
  /// the window changed.
  bool reduce_by(sim::Fraction fraction);

  ByteCount cwnd() const { return cwnd_; }
  ByteCount ssthresh() const { return ssthresh_; }
  Phase phase() const { return phase_; }
  const NewRenoConfig& config() const { return cfg_; }

  void set_cwnd_for_test(ByteCount cwnd);
  void set_ssthresh_for_test(ByteCount ss);

 private:
  Phase growth_phase() const {
    return cwnd_ < ssthresh_ ? Phase::SlowStart : Phase::CongestionAvoidance;
  }

  NewRenoConfig cfg_;
  ByteCount cwnd_;
  ByteCount ssthresh_ = std::numeric_limits<ByteCount>::max();
  ByteCount ca_remainder_ = 0;
  Phase phase_ = Phase::SlowStart;
};

/// Earliest departure for the next packet of `size` bytes at `rate` given
/// the previous departure; never earlier than `now`.
SimTime pace_next_send(std::optional<SimTime> last_send, ByteCount size, sim::BitRate rate,
                       SimTime now);

}  // namespace tonopah::transport
