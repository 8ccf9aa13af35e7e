#include <doctest.h>

#include <numeric>

#include "tonopah/sim/link.hpp"
#include "tonopah/transport/connection.hpp"

using namespace tonopah;
using namespace tonopah::transport;
using namespace std::chrono_literals;

namespace {

constexpr ByteCount kMtu = 1500;

// One bulk or finite flow across a single bottleneck with a symmetric return path.
struct Path {
  sim::Simulator sim;
  sim::FlowDemux to_rx;
  sim::FlowDemux to_tx;
  sim::DelayLine acks;
  sim::Link link;
  Connection conn;
  Receiver rx;

  Path(qdisc::QdiscKind kind, sim::BitRate rate, SimTime one_way, ConnectionConfig cfg,
       std::size_t buffer = 100, bool record_stream = false)
      : acks(one_way, &to_tx, 1),
        link(make_spec(kind, rate, one_way, buffer), &to_rx, 2),
        conn(cfg, &link, 3),
        rx(cfg.flow_id, &acks, 99, 100us, record_stream) {
    to_rx.attach(cfg.flow_id, &rx);
    to_tx.attach(cfg.flow_id, &conn);
    conn.start(sim);
  }

  static sim::LinkSpec make_spec(qdisc::QdiscKind kind, sim::BitRate rate, SimTime one_way,
                                 std::size_t buffer) {
    sim::LinkSpec s;
    s.rate = rate;
    s.one_way_prop_delay = one_way;
    s.qdisc.kind = kind;
    s.qdisc.buffer_packets = buffer;
    return s;
  }
};

ConnectionConfig bulk(bool tonopah) {
  ConnectionConfig c;
  if (tonopah) c.tonopah = detect::TonopahConfig{};
  return c;
}

}  // namespace

TEST_SUITE("transport") {
  TEST_CASE("slow start grows by the acked bytes") {
    NewReno cc;
    CHECK(cc.cwnd() == 10 * kMtu);
    CHECK(cc.phase() == Phase::SlowStart);
    cc.on_ack(kMtu);
    CHECK(cc.cwnd() == 11 * kMtu);
  }

  TEST_CASE("congestion avoidance adds one MTU per window of acks") {
    NewReno cc;
    cc.set_ssthresh_for_test(10 * kMtu);
    REQUIRE(cc.phase() == Phase::CongestionAvoidance);
    for (int i = 0; i < 10; ++i) cc.on_ack(kMtu);
    // The window grows during the round, so the tenth ack lands just short of the full MTU.
    CHECK(cc.cwnd() >= 10 * kMtu + kMtu - 150);
    CHECK(cc.cwnd() <= 11 * kMtu);
    for (int i = 0; i < 1000; ++i) cc.on_ack(kMtu);
    // Additive increase: roughly sqrt(2 * acks) MTUs over the start.
    CHECK(cc.cwnd() / kMtu >= 45);
    CHECK(cc.cwnd() / kMtu <= 47);
  }

  TEST_CASE("congestion avoidance remainder is exact") {
    NewReno cc;
    cc.set_ssthresh_for_test(10 * kMtu);
    // 1500 * 1 / 15000 is 0.1 byte per byte acked: ten one-byte acks give one byte.
    for (int i = 0; i < 9; ++i) cc.on_ack(1);
    CHECK(cc.cwnd() == 15'000);
    cc.on_ack(1);
    CHECK(cc.cwnd() == 15'001);
  }

  TEST_CASE("fast retransmit halves the window") {
    NewReno cc;
    cc.set_cwnd_for_test(20 * kMtu);
    cc.on_fast_retransmit();
    CHECK(cc.ssthresh() == 10 * kMtu);
    CHECK(cc.cwnd() == 10 * kMtu);
    CHECK(cc.phase() == Phase::FastRecovery);
    cc.on_ack(kMtu);
    CHECK(cc.cwnd() == 10 * kMtu);
    cc.on_recovery_exit();
    CHECK(cc.phase() == Phase::CongestionAvoidance);
  }

  TEST_CASE("timeout collapses the window to the minimum") {
    NewReno cc;
    cc.set_cwnd_for_test(40 * kMtu);
    cc.on_timeout();
    CHECK(cc.ssthresh() == 20 * kMtu);
    CHECK(cc.cwnd() == 2 * kMtu);
    CHECK(cc.phase() == Phase::SlowStart);
  }

  TEST_CASE("window floors") {
    NewReno cc;
    cc.set_cwnd_for_test(3 * kMtu);
    cc.on_fast_retransmit();
    CHECK(cc.cwnd() == 2 * kMtu);
    CHECK(cc.reduce_by({1, 8}) == false);
    CHECK(cc.cwnd() == 2 * kMtu);
    CHECK_THROWS_AS(NewReno(NewRenoConfig{1500, 1500, 3000}), std::invalid_argument);
  }

  TEST_CASE("RTO backoff doubles and is capped") {
    RttEstimator est;
    CHECK(est.rto() == SimTime{1s});
    est.on_sample(10ms);
    CHECK(est.srtt() == SimTime{10ms});
    CHECK(est.rttvar() == SimTime{5ms});
    CHECK(est.rto() == SimTime{210ms});
    est.backoff();
    CHECK(est.rto() == SimTime{420ms});
    for (int i = 0; i < 20; ++i) est.backoff();
    CHECK(est.rto() == RttEstimator::kMaxRto);
  }

  TEST_CASE("RTT estimator invariants") {
    RttEstimator est;
    std::mt19937_64 rng(3);
    SimTime lowest{std::numeric_limits<SimTime::rep>::max()};
    for (int i = 0; i < 5000; ++i) {
      const SimTime s{static_cast<SimTime::rep>(20'000'000 + rng() % 80'000'000)};
      lowest = std::min(lowest, s);
      est.on_sample(s);
      CHECK(est.min_rtt() == lowest);
      CHECK(est.rto() >= est.srtt() + RttEstimator::kMinRto);
      CHECK(est.srtt() >= SimTime{20ms});
      CHECK(est.srtt() <= SimTime{100ms});
    }
    CHECK(est.samples() == 5000);
  }

  TEST_CASE("pacing gap is the serialization time at the pacing rate") {
    const auto r12 = sim::BitRate::mbps(12);
    CHECK(pace_next_send(std::nullopt, kMtu, r12, SimTime{5ms}) == SimTime{5ms});
    CHECK(pace_next_send(SimTime{0}, kMtu, r12, SimTime{0}) == SimTime{1ms});
    CHECK(pace_next_send(SimTime{0}, kMtu, sim::BitRate::mbps(24), SimTime{0}) == SimTime{500us});
    CHECK(pace_next_send(SimTime{0}, kMtu, r12, SimTime{3ms}) == SimTime{3ms});
  }

  TEST_CASE("bulk NewReno conserves packets and never undercuts the base RTT") {
    for (auto kind : {qdisc::QdiscKind::DropTail, qdisc::QdiscKind::FqDrr}) {
      CAPTURE(static_cast<int>(kind));
      Path p(kind, sim::BitRate::mbps(10), 10ms, bulk(false));
      for (int step = 1; step <= 30; ++step) {
        p.sim.run_until(SimTime{step * 500'000'000LL});
        const auto& fc = p.sim.stats().flows.at(1);
        CHECK(fc.packets_sent == fc.packets_delivered + fc.packets_dropped + p.link.in_network(1));
      }
      CHECK(p.conn.counters().packets_sent > 2000);
      CHECK(p.rx.app_packets_delivered() > 2000);
      // Propagation both ways plus one serialization.
      CHECK(p.conn.rtt().min_rtt() >= SimTime{21'200'000});
      CHECK(p.conn.counters().max_in_flight_over_cwnd < kMtu);
    }
  }

  TEST_CASE("Tonopah splits traffic by the dominant share under one window") {
    Path p(qdisc::QdiscKind::FqDrr, sim::BitRate::mbps(20), 10ms,
           [] {
             auto c = bulk(true);
             c.record_departures = true;
             return c;
           }());
    p.sim.run_until(10s);
    REQUIRE(p.conn.subflow_count() == 2);
    CHECK(p.conn.counters().max_in_flight_over_cwnd < kMtu);
    ByteCount dom = 0, total = 0;
    for (const auto& d : p.conn.departures()) {
      if (d.retransmit) continue;
      total += d.size;
      if (d.subflow == sim::SubflowRole::Dominant) dom += d.size;
    }
    REQUIRE(total > 0);
    CHECK(static_cast<double>(dom) / static_cast<double>(total) == doctest::Approx(2.0 / 3.0).epsilon(0.01));
  }

  TEST_CASE("Tonopah is transparent to the application byte stream") {
    constexpr std::uint64_t kPackets = 3000;
    std::vector<std::vector<std::uint64_t>> streams;
    for (bool tonopah : {false, true}) {
      auto cfg = bulk(tonopah);
      cfg.transfer_packets = kPackets;
      Path p(qdisc::QdiscKind::FqDrr, sim::BitRate::mbps(10), 5ms, cfg, 30, true);
      p.sim.run_until(60s);
      CHECK(p.conn.transfer_complete());
      CHECK(p.rx.app_packets_delivered() == kPackets);
      streams.push_back(p.rx.delivered_stream());
    }
    std::vector<std::uint64_t> expected(kPackets);
    std::iota(expected.begin(), expected.end(), 0);
    CHECK(streams[0] == expected);
    CHECK(streams[1] == expected);
  }

  TEST_CASE("idle connection after a finished transfer schedules no timeouts") {
    auto cfg = bulk(false);
    cfg.transfer_packets = 50;
    Path p(qdisc::QdiscKind::DropTail, sim::BitRate::mbps(10), 5ms, cfg);
    p.sim.run_until(5s);
    REQUIRE(p.conn.transfer_complete());
    const auto events = p.sim.stats().events_processed;
    const auto cwnd = p.conn.congestion().cwnd();
    p.sim.run_until(60s);
    CHECK(p.sim.stats().events_processed == events);
    CHECK(p.conn.congestion().cwnd() == cwnd);
    CHECK(p.conn.counters().timeouts == 0);
  }
}
