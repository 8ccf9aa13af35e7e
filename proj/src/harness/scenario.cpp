#include "tonopah/harness/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <stdexcept>

#include "tonopah/harness/metrics.hpp"
#include "tonopah/sim/link.hpp"

namespace tonopah::harness {

namespace {

constexpr sim::FlowId kFlowUnderTest = 1;
constexpr sim::FlowId kCrossFlow = 2;

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Exact decimal rendering of value / scale.
std::string format_scaled(std::int64_t value, std::int64_t scale) {
  std::string out = value < 0 ? "-" : "";
  const auto v = value < 0 ? -value : value;
  out += std::to_string(v / scale);
  auto frac = v % scale;
  if (frac != 0) {
    std::string digits;
    for (auto s = scale / 10; s > 0; s /= 10) {
      digits += static_cast<char>('0' + frac / s);
      frac %= s;
    }
    while (!digits.empty() && digits.back() == '0') digits.pop_back();
    out += "." + digits;
  }
  return out;
}

/// Parses a non-negative decimal and multiplies by `scale`; the product must
/// be an integer.
std::int64_t parse_scaled(const std::string& key, const std::string& text, std::int64_t scale) {
  auto f = sim::parse_fraction(text);
  if (!f) throw std::invalid_argument("bad numeric value for " + key + ": '" + text + "'");
  const auto scaled = static_cast<__int128>(f->num) * scale;
  if (scaled % f->den != 0)
    throw std::invalid_argument("value for " + key + " is finer than the supported resolution");
  return static_cast<std::int64_t>(scaled / f->den);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("bad boolean for " + key + ": '" + v + "'");
}

std::string_view rule_name(detect::DecisionRule r) {
  return r == detect::DecisionRule::PerEpoch ? "per_epoch" : "shared_queue_evidence";
}

constexpr std::int64_t kNsPerMs = 1'000'000;
constexpr std::int64_t kNsPerUs = 1'000;
constexpr std::int64_t kNsPerS = 1'000'000'000;

}  // namespace

void validate(const ScenarioSpec& spec) {
  if (spec.link_rate.is_infinite()) throw std::invalid_argument("link rate must be > 0");
  if (spec.delay.count() <= 0) throw std::invalid_argument("delay must be > 0");
  if (spec.duration.count() <= 0) throw std::invalid_argument("duration must be > 0");
  if (spec.cross_traffic && spec.cross_traffic_head_start >= spec.duration)
    throw std::invalid_argument("cross-traffic head start must be shorter than the duration");
  if (spec.ack_jitter.count() < 0) throw std::invalid_argument("ack jitter must be >= 0");
  if (spec.buffer_packets && *spec.buffer_packets < 1)
    throw std::invalid_argument("buffer_packets must be >= 1");
  detect::validate(spec.tonopah);
}

std::map<std::string, std::string> to_key_values(const ScenarioSpec& s) {
  std::map<std::string, std::string> kv;
  kv["qdisc"] = std::string(qdisc::to_string(s.qdisc_kind));
  kv["rate_mbps"] = format_scaled(static_cast<std::int64_t>(s.link_rate.bits_per_second), 1'000'000);
  kv["delay_ms"] = format_scaled(s.delay.count(), kNsPerMs);
  kv["delay_one_way"] = s.delay_is_one_way ? "true" : "false";
  kv["duration_s"] = format_scaled(s.duration.count(), kNsPerS);
  kv["cross_traffic"] = s.cross_traffic ? "true" : "false";
  kv["head_start_s"] = format_scaled(s.cross_traffic_head_start.count(), kNsPerS);
  kv["tonopah"] = s.tonopah_enabled ? "true" : "false";
  kv["dominant_share"] = sim::to_string(s.tonopah.dominant_share);
  kv["theta_ms"] = format_scaled(s.tonopah.threshold.count(), kNsPerMs);
  kv["backoff"] = sim::to_string(s.tonopah.backoff_fraction);
  kv["backoff_enabled"] = s.tonopah.backoff_enabled ? "true" : "false";
  kv["decision_rule"] = std::string(rule_name(s.tonopah.rule));
  kv["seed"] = std::to_string(s.seed);
  kv["ack_jitter_us"] = format_scaled(s.ack_jitter.count(), kNsPerUs);
  kv["buffer_packets"] = s.buffer_packets ? std::to_string(*s.buffer_packets) : "auto";
  kv["record_epochs"] = s.record_epochs ? "true" : "false";
  return kv;
}

ScenarioSpec from_key_values(const std::map<std::string, std::string>& kv, ScenarioSpec s) {
  for (const auto& [key, v] : kv) {
    if (key == "qdisc") {
      auto k = qdisc::parse_qdisc_kind(v);
      if (!k) throw std::invalid_argument("unknown qdisc '" + v + "'");
      s.qdisc_kind = *k;
    } else if (key == "rate_mbps") {
      s.link_rate = BitRate{static_cast<std::uint64_t>(parse_scaled(key, v, 1'000'000))};
    } else if (key == "delay_ms") {
      s.delay = SimTime{parse_scaled(key, v, kNsPerMs)};
    } else if (key == "delay_one_way") {
      s.delay_is_one_way = parse_bool(key, v);
    } else if (key == "duration_s") {
      s.duration = SimTime{parse_scaled(key, v, kNsPerS)};
    } else if (key == "cross_traffic") {
      s.cross_traffic = parse_bool(key, v);
    } else if (key == "head_start_s") {
      s.cross_traffic_head_start = SimTime{parse_scaled(key, v, kNsPerS)};
    } else if (key == "tonopah") {
      s.tonopah_enabled = parse_bool(key, v);
    } else if (key == "dominant_share") {
      auto f = sim::parse_fraction(v);
      if (!f) throw std::invalid_argument("bad dominant_share '" + v + "'");
      s.tonopah.dominant_share = *f;
    } else if (key == "theta_ms") {
      s.tonopah.threshold = SimTime{parse_scaled(key, v, kNsPerMs)};
    } else if (key == "backoff") {
      auto f = sim::parse_fraction(v);
      if (!f) throw std::invalid_argument("bad backoff '" + v + "'");
      s.tonopah.backoff_fraction = *f;
    } else if (key == "backoff_enabled") {
      s.tonopah.backoff_enabled = parse_bool(key, v);
    } else if (key == "decision_rule") {
      if (v == "per_epoch") {
        s.tonopah.rule = detect::DecisionRule::PerEpoch;
      } else if (v == "shared_queue_evidence") {
        s.tonopah.rule = detect::DecisionRule::SharedQueueEvidence;
      } else {
        throw std::invalid_argument("unknown decision_rule '" + v + "'");
      }
    } else if (key == "seed") {
      std::uint64_t seed = 0;
      const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), seed);
      if (ec != std::errc{} || end != v.data() + v.size())
        throw std::invalid_argument("bad seed '" + v + "'");
      s.seed = seed;
    } else if (key == "ack_jitter_us") {
      s.ack_jitter = SimTime{parse_scaled(key, v, kNsPerUs)};
    } else if (key == "buffer_packets") {
      if (v == "auto") {
        s.buffer_packets.reset();
      } else {
        s.buffer_packets = static_cast<std::size_t>(parse_scaled(key, v, 1));
      }
    } else if (key == "record_epochs") {
      s.record_epochs = parse_bool(key, v);
    } else {
      throw std::invalid_argument("unknown scenario key '" + key + "'");
    }
  }
  return s;
}

std::uint64_t spec_hash(const ScenarioSpec& spec) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [k, v] : to_key_values(spec)) {
    h = fnv1a(k, h);
    h = fnv1a("=", h);
    h = fnv1a(v, h);
    h = fnv1a("\n", h);
  }
  return h;
}

std::uint64_t result_digest(const RunResult& r) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto put = [&h](std::uint64_t v) { h = mix64(h ^ v); };
  auto put_double = [&put](double d) {
    std::uint64_t bits = 0;
    static_assert(sizeof bits == sizeof d);
    std::memcpy(&bits, &d, sizeof d);
    put(bits);
  };
  put_double(r.accuracy);
  put_double(r.utilization);
  put(static_cast<std::uint64_t>(r.mean_qdelay.count()));
  put(r.detection_transitions.size());
  for (const auto& t : r.detection_transitions) {
    put(static_cast<std::uint64_t>(t.at.count()));
    put(t.detected ? 1 : 0);
  }
  for (auto v : {r.drops, r.retransmits, r.timeouts, r.backoffs, r.epochs, r.no_decision_epochs,
                 r.packets_delivered, static_cast<std::uint64_t>(r.buffer_packets), r.seed,
                 r.spec_hash, r.trace_digest, r.events})
    put(v);
  put(r.initial_signal ? 1 : 0);
  return h;
}

RunResult run_scenario(const ScenarioSpec& spec) {
  validate(spec);
  sim::Simulator sim;

  const SimTime one_way = spec.one_way_delay();
  const std::size_t buffer = spec.buffer_packets.value_or(buffer_size(spec.link_rate, spec.base_rtt()));

  sim::LinkSpec link_spec;
  link_spec.rate = spec.link_rate;
  link_spec.one_way_prop_delay = one_way;
  link_spec.qdisc.kind = spec.qdisc_kind;
  link_spec.qdisc.buffer_packets = buffer;

  sim::FlowDemux to_receivers;
  sim::FlowDemux to_senders;
  sim::DelayLine ack_path(one_way, &to_senders, 10);
  sim::Link bottleneck(link_spec, &to_receivers, 20);

  const SimTime window_start = spec.cross_traffic ? spec.cross_traffic_head_start : SimTime{0};
  const SimTime window_end = window_start + spec.duration;

  transport::ConnectionConfig main_cfg;
  main_cfg.flow_id = kFlowUnderTest;
  main_cfg.start_at = window_start;
  if (spec.tonopah_enabled) main_cfg.tonopah = spec.tonopah;
  main_cfg.record_epochs = spec.record_epochs;
  transport::Connection main_flow(main_cfg, &bottleneck, 30);
  transport::Receiver main_rx(kFlowUnderTest, &ack_path, mix64(spec.seed ^ 0x1111), spec.ack_jitter);
  to_receivers.attach(kFlowUnderTest, &main_rx);
  to_senders.attach(kFlowUnderTest, &main_flow);

  std::optional<transport::Connection> cross_flow;
  std::optional<transport::Receiver> cross_rx;
  if (spec.cross_traffic) {
    transport::ConnectionConfig cross_cfg;
    cross_cfg.flow_id = kCrossFlow;
    cross_flow.emplace(cross_cfg, &bottleneck, 40);
    cross_rx.emplace(kCrossFlow, &ack_path, mix64(spec.seed ^ 0x2222), spec.ack_jitter);
    to_receivers.attach(kCrossFlow, &*cross_rx);
    to_senders.attach(kCrossFlow, &*cross_flow);
  }

  sim::ByteCount window_bytes = 0;
  SimTime sojourn_sum{0};
  std::uint64_t sojourn_count = 0;
  bottleneck.set_departure_hook([&](const sim::Packet& p, SimTime sojourn, SimTime now) {
    if (now < window_start || now > window_end) return;
    window_bytes += p.size_bytes;
    if (p.flow_id == kFlowUnderTest) {
      sojourn_sum += sojourn;
      ++sojourn_count;
    }
  });

  if (cross_flow) cross_flow->start(sim);
  main_flow.start(sim);
  const auto& stats = sim.run_until(window_end);

  RunResult r;
  r.seed = spec.seed;
  r.spec_hash = spec_hash(spec);
  r.buffer_packets = buffer;
  r.trace_digest = stats.trace_digest;
  r.events = stats.events_processed;
  const auto bits_capacity = static_cast<double>(spec.link_rate.bits_per_second) * sim::to_seconds(spec.duration);
  r.utilization = static_cast<double>(window_bytes) * 8.0 / bits_capacity;
  r.mean_qdelay = sojourn_count == 0 ? SimTime{0}
                                     : sojourn_sum / static_cast<SimTime::rep>(sojourn_count);
  for (const auto& [id, fc] : stats.flows) {
    r.drops += fc.packets_dropped;
    if (id == kFlowUnderTest) r.packets_delivered = fc.packets_delivered;
  }
  r.retransmits = main_flow.counters().retransmits;
  r.timeouts = main_flow.counters().timeouts;
  r.backoffs = main_flow.counters().backoffs;

  if (const auto* det = main_flow.detector()) {
    r.epochs = det->epochs_completed();
    r.no_decision_epochs = det->no_decision_epochs();
    for (auto t : det->history()) {
      t.at -= window_start;
      r.detection_transitions.push_back(t);
    }
  }
  r.initial_signal = false;
  r.accuracy = detection_accuracy(r.detection_transitions, spec.ground_truth_fq(), spec.duration,
                                  r.initial_signal);
  if (spec.record_epochs) r.epoch_log = main_flow.epochs();
  return r;
}

}  // namespace tonopah::harness
