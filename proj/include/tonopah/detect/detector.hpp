#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "tonopah/sim/fraction.hpp"
#include "tonopah/sim/packet.hpp"
#include "tonopah/transport/newreno.hpp"

namespace tonopah::detect {

using sim::ByteCount;
using sim::Fraction;
using sim::SimTime;
using sim::SubflowRole;

/// How an epoch whose delay difference stays below the threshold is read.
enum class DecisionRule {
  /// Every decided epoch sets the signal to (avg_dom - avg_nondom >= theta).
  PerEpoch,
  /// Absence of fair queuing is only concluded when the non-dominant
  /// subflow itself sits behind at least theta of queue; epochs without that
  /// evidence hold the previous signal.
  SharedQueueEvidence,
};

struct TonopahConfig {
  Fraction dominant_share{2, 3};
  SimTime threshold{std::chrono::milliseconds(5)};
  Fraction backoff_fraction{1, 8};
  /// When false the detector only observes; cwnd is never reduced.
  bool backoff_enabled = true;
  DecisionRule rule = DecisionRule::SharedQueueEvidence;
};

/// Throws std::invalid_argument on out-of-range values.
void validate(const TonopahConfig& cfg);

/// Largest-credit-first weighted assignment of packets to subflows. Each
/// assigned packet credits both subflows by their share of its size and
/// debits the winner by the full size, so credits stay bounded by one packet.
class SubflowAssigner {
 public:
  explicit SubflowAssigner(Fraction dominant_share);

  SubflowRole assign(ByteCount size);

  ByteCount dominant_bytes() const { return dom_bytes_; }
  ByteCount nondominant_bytes() const { return nondom_bytes_; }

 private:
  Fraction share_;
  // Scaled by share_.den.
  ByteCount credit_dom_ = 0;
  ByteCount credit_nondom_ = 0;
  ByteCount dom_bytes_ = 0;
  ByteCount nondom_bytes_ = 0;
};

struct EpochStats {
  SimTime epoch_start{0};
  std::uint64_t end_marker_tx_id = 0;
  SimTime sum_qdelay_dom{0};
  std::uint64_t count_dom = 0;
  SimTime sum_qdelay_nondom{0};
  std::uint64_t count_nondom = 0;
};

enum class Outcome { Detected, NotDetected, Hold, NoDecision };
std::string_view to_string(Outcome o);

struct Decision {
  Outcome outcome = Outcome::NoDecision;
  bool detected = false;  // signal after this epoch
  SimTime avg_dom{0};
  SimTime avg_nondom{0};
};

struct Transition {
  SimTime at{0};
  bool detected = false;
  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Per-round-trip comparison of the two subflows' average queuing delay.
class Detector {
 public:
  explicit Detector(TonopahConfig cfg);

  /// Folds one RTT sample (Karn-clean) into the running epoch.
  void on_rtt_sample(SubflowRole subflow, SimTime rtt);

  /// Closes the running epoch. `suppressed` marks epochs distorted by loss
  /// recovery; they yield no decision.
  Decision end_epoch(SimTime now, bool suppressed = false);
  /// Opens the next epoch, ending when a packet with tx id >= marker is acked.
  void begin_epoch(SimTime now, std::uint64_t marker_tx_id);

  bool fq_detected() const { return fq_detected_; }
  SimTime shared_base_rtt() const { return base_rtt_; }
  bool has_base_rtt() const { return has_base_; }
  const EpochStats& epoch() const { return epoch_; }
  std::uint64_t epochs_completed() const { return epochs_completed_; }
  std::uint64_t no_decision_epochs() const { return no_decision_; }
  const std::vector<Transition>& history() const { return history_; }
  const TonopahConfig& config() const { return cfg_; }

 private:
  TonopahConfig cfg_;
  EpochStats epoch_;
  SimTime base_rtt_{0};
  bool has_base_ = false;
  bool fq_detected_ = false;
  std::uint64_t epochs_completed_ = 0;
  std::uint64_t no_decision_ = 0;
  std::vector<Transition> history_;
};

/// Congestion response to a positive detection: cut cwnd by the configured
/// fraction, floored at the minimum window, at most once per epoch.
class DetectionResponse {
 public:
  explicit DetectionResponse(const TonopahConfig& cfg) : cfg_(cfg) {}

  /// Returns true if cwnd was reduced.
  bool on_detection(transport::NewReno& cc, std::uint64_t epoch_index);

 private:
  TonopahConfig cfg_;
  std::optional<std::uint64_t> last_epoch_;
};

}  // namespace tonopah::detect
