#include "tonopah/qdisc/codel.hpp"

#include <cmath>

namespace tonopah::qdisc {

SimTime codel_control_law(SimTime t, SimTime interval, std::uint32_t count) {
  const auto step = std::llround(static_cast<long double>(interval.count()) /
                                 std::sqrt(static_cast<long double>(count == 0 ? 1 : count)));
  return t + SimTime{step};
}

bool CodelState::ok_to_drop(SimTime sojourn, SimTime now, ByteCount backlog_after) {
  if (sojourn < params_.target || backlog_after <= params_.mtu) {
    first_above_time_.reset();
    return false;
  }
  if (!first_above_time_) {
    first_above_time_ = now + params_.interval;
    return false;
  }
  return now >= *first_above_time_;
}

bool CodelState::should_drop(SimTime sojourn, SimTime now, ByteCount backlog_after) {
  const bool ok = ok_to_drop(sojourn, now, backlog_after);
  if (dropping_) {
    if (!ok) {
      dropping_ = false;
      return false;
    }
    if (now >= drop_next_) {
      ++count_;
      drop_next_ = codel_control_law(drop_next_, params_.interval, count_);
      return true;
    }
    return false;
  }
  if (!ok) return false;

  dropping_ = true;
  // Re-entering soon after the last episode resumes near the previous rate.
  const std::uint32_t delta = count_ - last_count_;
  if (delta > 1 && now - drop_next_ < 16 * params_.interval) {
    count_ = delta;
  } else {
    count_ = 1;
  }
  last_count_ = count_;
  drop_next_ = codel_control_law(now, params_.interval, count_);
  return true;
}

}  // namespace tonopah::qdisc
