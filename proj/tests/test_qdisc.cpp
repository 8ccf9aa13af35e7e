#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

#include "tonopah/qdisc/codel.hpp"
#include "tonopah/qdisc/disciplines.hpp"

using namespace tonopah;
using namespace tonopah::qdisc;
using namespace std::chrono_literals;
using sim::SubflowRole;

namespace {

Packet pkt(sim::FlowId flow, std::uint64_t seq, ByteCount size = 1500,
           SubflowRole role = SubflowRole::None) {
  Packet p;
  p.flow_id = flow;
  p.subflow = role;
  p.seq = seq;
  p.size_bytes = size;
  return p;
}

FairQueue make_fq(ByteCount quantum, std::size_t per_flow_limit = 100) {
  return FairQueue(FairQueue::Params{quantum, per_flow_limit, 0, std::nullopt});
}

}  // namespace

TEST_SUITE("qdisc") {
  TEST_CASE("qdisc names") {
    CHECK(parse_qdisc_kind("pfifo") == QdiscKind::DropTail);
    CHECK(parse_qdisc_kind("fq") == QdiscKind::FqDrr);
    CHECK(parse_qdisc_kind("fq_codel") == QdiscKind::FqCodel);
    CHECK_FALSE(parse_qdisc_kind("cake"));
    CHECK(to_string(QdiscKind::FqCodel) == "fq_codel");
  }

  TEST_CASE("config validation") {
    QdiscConfig c;
    c.buffer_packets = 0;
    CHECK_THROWS_AS(validate(c), std::invalid_argument);
    c = {};
    c.kind = QdiscKind::FqDrr;
    c.quantum_bytes = 1000;
    CHECK_THROWS_AS(validate(c), std::invalid_argument);
  }

  TEST_CASE("DropTail drops at a full buffer") {
    DropTail q(100);
    int drops = 0;
    q.set_drop_handler([&](const Packet&) { ++drops; });
    for (std::uint64_t s = 0; s < 100; ++s) CHECK(q.enqueue(pkt(1, s), SimTime{0}) == EnqueueResult::Accepted);
    CHECK(q.enqueue(pkt(1, 100), SimTime{0}) == EnqueueResult::Dropped);
    CHECK(drops == 1);
    CHECK(q.packet_count() == 100);
    for (std::uint64_t s = 0; s < 100; ++s) CHECK(q.dequeue(SimTime{0})->seq == s);
    CHECK_FALSE(q.dequeue(SimTime{0}));
  }

  TEST_CASE("FqDrr isolates per-flow buffers") {
    auto q = make_fq(1514, 100);
    for (std::uint64_t s = 0; s < 100; ++s)
      REQUIRE(q.enqueue(pkt(1, s, 1500, SubflowRole::Dominant), SimTime{0}) == EnqueueResult::Accepted);
    CHECK(q.enqueue(pkt(1, 100, 1500, SubflowRole::Dominant), SimTime{0}) == EnqueueResult::Dropped);
    CHECK(q.enqueue(pkt(1, 0, 1500, SubflowRole::NonDominant), SimTime{0}) == EnqueueResult::Accepted);
    CHECK(q.find({1, SubflowRole::Dominant})->packets.size() == 100);
    CHECK(q.find({1, SubflowRole::NonDominant})->packets.size() == 1);
  }

  TEST_CASE("single flow is served in FIFO order") {
    auto q = make_fq(1514);
    for (std::uint64_t s = 0; s < 50; ++s) q.enqueue(pkt(3, s, 200 + 20 * (s % 7)), SimTime{0});
    for (std::uint64_t s = 0; s < 50; ++s) CHECK(q.dequeue(SimTime{0})->seq == s);
    CHECK(q.empty());
  }

  TEST_CASE("equal packets with quantum = packet size alternate strictly") {
    auto q = make_fq(1500);
    for (std::uint64_t s = 0; s < 20; ++s) {
      q.enqueue(pkt(1, s), SimTime{0});
      q.enqueue(pkt(2, s), SimTime{0});
    }
    sim::FlowId prev = 0;
    for (int i = 0; i < 40; ++i) {
      const auto p = q.dequeue(SimTime{0});
      REQUIRE(p);
      CHECK(p->flow_id != prev);
      prev = p->flow_id;
    }
  }

  TEST_CASE("a flow offering twice the rate still gets half the link") {
    // Per service slot flow 1 offers 2 packets and flow 2 offers 1; the link
    // serves one. Both stay backlogged, so each gets half.
    auto q = make_fq(1514, 1'000'000);
    std::map<sim::FlowId, ByteCount> served;
    std::uint64_t seq = 0;
    for (int slot = 0; slot < 30'000; ++slot) {
      q.enqueue(pkt(1, seq++), SimTime{0});
      q.enqueue(pkt(1, seq++), SimTime{0});
      q.enqueue(pkt(2, seq++), SimTime{0});
      served[q.dequeue(SimTime{0})->flow_id] += 1500;
    }
    const double share1 = static_cast<double>(served[1]) / static_cast<double>(served[1] + served[2]);
    CHECK(share1 == doctest::Approx(0.5).epsilon(1e-3));
  }

  TEST_CASE("DRR fairness bound holds at every instant") {
    for (ByteCount quantum : {1500, 1514, 3000, 4321, 9000}) {
      CAPTURE(quantum);
      auto q = make_fq(quantum, 1'000'000);
      std::mt19937_64 rng(quantum);
      std::uint64_t seq = 0;
      // Keep both flows backlogged with random sizes.
      auto top_up = [&](sim::FlowId f) {
        const auto* fq = q.find({f, SubflowRole::None});
        while (!fq || fq->packets.size() < 8) {
          q.enqueue(pkt(f, seq++, static_cast<ByteCount>(64 + rng() % 1437)), SimTime{0});
          fq = q.find({f, SubflowRole::None});
        }
      };
      ByteCount a = 0, b = 0, worst = 0;
      for (int i = 0; i < 10'000; ++i) {
        top_up(1);
        top_up(2);
        const auto p = q.dequeue(SimTime{0});
        REQUIRE(p);
        (p->flow_id == 1 ? a : b) += p->size_bytes;
        worst = std::max<ByteCount>(worst, a > b ? a - b : b - a);
      }
      CHECK(worst <= quantum + 1500);
    }
  }

  TEST_CASE("sparse flow waits at most one DRR round") {
    auto q = make_fq(1514, 1'000'000);
    std::uint64_t seq = 0;
    for (int i = 0; i < 200; ++i) q.enqueue(pkt(1, seq++), SimTime{0});
    int worst_wait = 0;
    for (int round = 0; round < 50; ++round) {
      q.enqueue(pkt(2, seq++), SimTime{0});
      int waited = 0;
      for (;;) {
        const auto p = q.dequeue(SimTime{0});
        REQUIRE(p);
        if (p->flow_id == 2) break;
        ++waited;
        q.enqueue(pkt(1, seq++), SimTime{0});
      }
      worst_wait = std::max(worst_wait, waited);
      // Let the bulk flow run a little between sparse arrivals.
      for (int k = 0; k < 3; ++k) {
        q.dequeue(SimTime{0});
        q.enqueue(pkt(1, seq++), SimTime{0});
      }
    }
    CHECK(worst_wait <= 1);
  }

  TEST_CASE("work conservation and per-flow FIFO across many flows") {
    auto q = make_fq(1514, 50);
    std::mt19937_64 rng(7);
    std::map<sim::FlowId, std::uint64_t> next_in, next_out;
    std::size_t accepted = 0;
    for (int i = 0; i < 2000; ++i) {
      const auto f = static_cast<sim::FlowId>(1 + rng() % 5);
      if (q.enqueue(pkt(f, next_in[f]), SimTime{0}) == EnqueueResult::Accepted) {
        ++next_in[f];
        ++accepted;
      }
      for (sim::FlowId g = 1; g <= 5; ++g)
        if (const auto* fq = q.find({g, SubflowRole::None})) CHECK(fq->packets.size() <= 50);
      if (rng() % 3 == 0) {
        const auto p = q.dequeue(SimTime{0});
        REQUIRE(p);
        CHECK(p->seq == next_out[p->flow_id]++);
      }
    }
    while (!q.empty()) {
      const auto p = q.dequeue(SimTime{0});
      REQUIRE(p);
      CHECK(p->seq == next_out[p->flow_id]++);
    }
    CHECK_FALSE(q.dequeue(SimTime{0}));
  }

  TEST_CASE("fq_codel overflow drops from the longest queue") {
    FairQueue q(FairQueue::Params{1514, 0, 10, CodelParams{}});
    std::vector<Packet> dropped;
    q.set_drop_handler([&](const Packet& p) { dropped.push_back(p); });
    for (std::uint64_t s = 0; s < 8; ++s) q.enqueue(pkt(1, s), SimTime{0});
    for (std::uint64_t s = 0; s < 2; ++s) q.enqueue(pkt(2, s), SimTime{0});
    q.enqueue(pkt(2, 2), SimTime{0});
    REQUIRE(dropped.size() == 1);
    CHECK(dropped[0].flow_id == 1);
    CHECK(dropped[0].seq == 0);  // head drop
    CHECK(q.packet_count() == 10);
  }

  TEST_CASE("CoDel never drops below target") {
    CodelState c;
    for (int i = 0; i < 10'000; ++i)
      CHECK_FALSE(c.should_drop(4ms, SimTime{i * 1'000'000LL}, 100'000));
    CHECK_FALSE(c.dropping());
  }

  TEST_CASE("CoDel control law spacing") {
    const SimTime interval = 100ms;
    CHECK(codel_control_law(SimTime{0}, interval, 1) - SimTime{0} == SimTime{100'000'000});
    CHECK(codel_control_law(SimTime{0}, interval, 4) - SimTime{0} == SimTime{50'000'000});
    CHECK(codel_control_law(SimTime{0}, interval, 16) - SimTime{0} == SimTime{25'000'000});
    CHECK(codel_control_law(SimTime{0}, interval, 9) - SimTime{0} == SimTime{33'333'333});
  }

  TEST_CASE("CoDel drop times follow the control law to the nanosecond") {
    // interval / sqrt(k) in ns, rounded half-up, computed with 50-digit decimals.
    constexpr std::int64_t kSpacing[16] = {
        100000000, 70710678, 57735027, 50000000, 44721360, 40824829, 37796447, 35355339,
        33333333,  31622777, 30151134, 28867513, 27735010, 26726124, 25819889, 25000000};
    CodelState c;
    const SimTime t0 = 2s;
    const SimTime sojourn = 20ms;
    const ByteCount backlog = 150'000;
    CHECK_FALSE(c.should_drop(sojourn, t0, backlog));
    REQUIRE(c.first_above_time() == t0 + 100ms);
    CHECK_FALSE(c.should_drop(sojourn, t0 + 100ms - SimTime{1}, backlog));
    SimTime drop_at = t0 + 100ms;
    CHECK(c.should_drop(sojourn, drop_at, backlog));
    for (int k = 1; k <= 16; ++k) {
      CAPTURE(k);
      drop_at += SimTime{kSpacing[k - 1]};
      CHECK_FALSE(c.should_drop(sojourn, drop_at - SimTime{1}, backlog));
      CHECK(c.should_drop(sojourn, drop_at, backlog));
      CHECK(c.drop_count() == static_cast<std::uint32_t>(k + 1));
    }
    CHECK(kSpacing[3] * 2 == 100'000'000);
  }

  TEST_CASE("CoDel exits dropping when sojourn falls below target") {
    CodelState c;
    const SimTime t0 = 1s;
    CHECK_FALSE(c.should_drop(10ms, t0, 100'000));
    CHECK(c.should_drop(10ms, t0 + 100ms, 100'000));
    CHECK(c.dropping());
    CHECK_FALSE(c.should_drop(1ms, t0 + 101ms, 100'000));
    CHECK_FALSE(c.dropping());
  }

  TEST_CASE("CoDel ignores a nearly empty queue") {
    CodelState c;
    for (int i = 0; i < 1000; ++i) CHECK_FALSE(c.should_drop(50ms, SimTime{i * 1'000'000LL}, 1000));
  }
}
