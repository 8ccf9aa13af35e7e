#include "tonopah/detect/detector.hpp"

#include <stdexcept>

namespace tonopah::detect {

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Detected: return "detected";
    case Outcome::NotDetected: return "not_detected";
    case Outcome::Hold: return "hold";
    case Outcome::NoDecision: return "no_decision";
  }
  return "?";
}

void validate(const TonopahConfig& cfg) {
  const Fraction half{1, 2};
  const auto& s = cfg.dominant_share;
  if (!(half < s) || !(s < Fraction{1, 1}))
    throw std::invalid_argument("dominant_share must lie strictly between 1/2 and 1");
  if (cfg.threshold.count() <= 0) throw std::invalid_argument("threshold must be > 0");
  const auto& b = cfg.backoff_fraction;
  if (b.num <= 0 || !(b < Fraction{1, 1}))
    throw std::invalid_argument("backoff_fraction must lie strictly between 0 and 1");
}

SubflowAssigner::SubflowAssigner(Fraction dominant_share) : share_(dominant_share) {}

SubflowRole SubflowAssigner::assign(ByteCount size) {
  credit_dom_ += share_.num * size;
  credit_nondom_ += (share_.den - share_.num) * size;
  if (credit_dom_ >= credit_nondom_) {
    credit_dom_ -= share_.den * size;
    dom_bytes_ += size;
    return SubflowRole::Dominant;
  }
  credit_nondom_ -= share_.den * size;
  nondom_bytes_ += size;
  return SubflowRole::NonDominant;
}

Detector::Detector(TonopahConfig cfg) : cfg_(cfg) { validate(cfg_); }

void Detector::on_rtt_sample(SubflowRole subflow, SimTime rtt) {
  if (!has_base_ || rtt < base_rtt_) {
    base_rtt_ = rtt;
    has_base_ = true;
  }
  const SimTime qdelay = rtt - base_rtt_;
  if (subflow == SubflowRole::Dominant) {
    epoch_.sum_qdelay_dom += qdelay;
    ++epoch_.count_dom;
  } else if (subflow == SubflowRole::NonDominant) {
    epoch_.sum_qdelay_nondom += qdelay;
    ++epoch_.count_nondom;
  }
}

Decision Detector::end_epoch(SimTime now, bool suppressed) {
  Decision d;
  d.detected = fq_detected_;
  ++epochs_completed_;
  if (suppressed || epoch_.count_dom == 0 || epoch_.count_nondom == 0) {
    ++no_decision_;
    d.outcome = Outcome::NoDecision;
    return d;
  }
  d.avg_dom = epoch_.sum_qdelay_dom / static_cast<SimTime::rep>(epoch_.count_dom);
  d.avg_nondom = epoch_.sum_qdelay_nondom / static_cast<SimTime::rep>(epoch_.count_nondom);

  if (d.avg_dom - d.avg_nondom >= cfg_.threshold) {
    d.outcome = Outcome::Detected;
  } else if (cfg_.rule == DecisionRule::PerEpoch || d.avg_nondom >= cfg_.threshold) {
    d.outcome = Outcome::NotDetected;
  } else {
    d.outcome = Outcome::Hold;
  }
  if (d.outcome != Outcome::Hold) d.detected = d.outcome == Outcome::Detected;

  if (d.detected != fq_detected_) {
    fq_detected_ = d.detected;
    if (!history_.empty() && history_.back().at >= now) {
      history_.pop_back();
    } else {
      history_.push_back({now, fq_detected_});
    }
  }
  return d;
}

void Detector::begin_epoch(SimTime now, std::uint64_t marker_tx_id) {
  epoch_ = EpochStats{};
  epoch_.epoch_start = now;
  epoch_.end_marker_tx_id = marker_tx_id;
}

bool DetectionResponse::on_detection(transport::NewReno& cc, std::uint64_t epoch_index) {
  if (!cfg_.backoff_enabled) return false;
  if (last_epoch_ && *last_epoch_ == epoch_index) return false;
  last_epoch_ = epoch_index;
  return cc.reduce_by(cfg_.backoff_fraction);
}

}  // namespace tonopah::detect
