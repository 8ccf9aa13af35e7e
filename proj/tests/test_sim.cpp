#include <doctest.h>

#include <random>
#include <vector>

#include "tonopah/sim/fraction.hpp"
#include "tonopah/sim/link.hpp"
#include "tonopah/sim/simulator.hpp"
#include "tonopah/sim/units.hpp"

using namespace tonopah::sim;
using namespace std::chrono_literals;

namespace {

struct Recorder final : EventTarget {
  std::vector<std::pair<SimTime, std::uint32_t>> fired;
  void on_event(Simulator& sim, const Event& ev) override { fired.emplace_back(sim.now(), ev.kind); }
};

struct CollectingSink final : PacketSink {
  struct Arrival {
    SimTime at;
    Packet pkt;
  };
  std::vector<Arrival> arrivals;
  void receive(Simulator& sim, const Packet& pkt) override { arrivals.push_back({sim.now(), pkt}); }
};

Packet data_packet(FlowId flow, std::uint64_t seq, SimTime sent_at = SimTime{0}) {
  Packet p;
  p.flow_id = flow;
  p.seq = seq;
  p.size_bytes = kDataPacketBytes;
  p.sent_at = sent_at;
  return p;
}

}  // namespace

TEST_SUITE("sim") {
  TEST_CASE("event at t=0 fires at clock 0") {
    Simulator sim;
    Recorder r;
    sim.schedule(SimTime{0}, &r, {7, 0});
    sim.run_until(1s);
    REQUIRE(r.fired.size() == 1);
    CHECK(r.fired[0].first == SimTime{0});
  }

  TEST_CASE("simultaneous events fire in insertion order") {
    Simulator sim;
    Recorder r;
    for (std::uint32_t k = 1; k <= 5; ++k) sim.schedule(2ms, &r, {k, 0});
    sim.run_until(3ms);
    REQUIRE(r.fired.size() == 5);
    for (std::uint32_t k = 0; k < 5; ++k) CHECK(r.fired[k].second == k + 1);
  }

  TEST_CASE("earlier event fires first regardless of scheduling order") {
    Simulator sim;
    Recorder r;
    sim.schedule(5ms, &r, {1, 0});
    sim.schedule(3ms, &r, {2, 0});
    sim.run_until(10ms);
    REQUIRE(r.fired.size() == 2);
    CHECK(r.fired[0] == std::pair{SimTime{3ms}, 2u});
    CHECK(r.fired[1] == std::pair{SimTime{5ms}, 1u});
  }

  TEST_CASE("cancelled events never fire") {
    Simulator sim;
    Recorder r;
    const auto h = sim.schedule(1ms, &r, {1, 0});
    sim.schedule(2ms, &r, {2, 0});
    sim.cancel(h);
    sim.run_until(5ms);
    REQUIRE(r.fired.size() == 1);
    CHECK(r.fired[0].second == 2);
  }

  TEST_CASE("scheduling in the past is fatal and carries the trace tail") {
    Simulator sim;
    Recorder r;
    sim.schedule(1ms, &r, {3, 0});
    sim.run_until(2ms);
    try {
      sim.schedule(1ms, &r, {4, 0});
      FAIL("expected SimulationError");
    } catch (const SimulationError& e) {
      const std::string what = e.what();
      CHECK(what.find("past") != std::string::npos);
      CHECK(what.find("kind=3") != std::string::npos);
    }
  }

  TEST_CASE("empty run jumps the clock and leaves stats at zero") {
    Simulator sim;
    const auto& stats = sim.run_until(90s);
    CHECK(sim.now() == SimTime{90s});
    CHECK(stats.events_processed == 0);
    CHECK(stats.flows.empty());
  }

  TEST_CASE("clock never runs backwards under random nested scheduling") {
    struct Spawner final : EventTarget {
      std::mt19937_64 rng{42};
      SimTime last{0};
      bool monotone = true;
      int remaining = 5000;
      void on_event(Simulator& sim, const Event&) override {
        if (sim.now() < last) monotone = false;
        last = sim.now();
        if (remaining-- <= 0) return;
        const int children = static_cast<int>(rng() % 3);
        for (int i = 0; i < children; ++i)
          sim.schedule_in(SimTime{static_cast<SimTime::rep>(rng() % 1000)}, this);
      }
    } sp;
    Simulator sim;
    for (int i = 0; i < 10; ++i) sim.schedule(SimTime{i * 10}, &sp);
    sim.run_until(1s);
    CHECK(sp.monotone);
    CHECK(sim.stats().events_processed > 100);
  }

  TEST_CASE("serialization time is exact and rounds up") {
    CHECK(serialization_time(1500, BitRate::mbps(10)) == SimTime{1'200'000});
    CHECK(serialization_time(1500, BitRate::mbps(12)) == SimTime{1'000'000});
    // 8 bits at 3 bit/s = 2.666... s, rounded up to the next nanosecond.
    CHECK(serialization_time(1, BitRate{3}) == SimTime{2'666'666'667});
    CHECK(serialization_time(1500, BitRate::infinite()) == SimTime{0});
  }

  TEST_CASE("single packet arrives after serialization plus propagation") {
    Simulator sim;
    CollectingSink sink;
    LinkSpec spec;
    spec.rate = BitRate::mbps(10);
    spec.one_way_prop_delay = 10ms;
    Link link(spec, &sink, 1);
    link.transmit(sim, data_packet(1, 0));
    sim.run_until(1s);
    REQUIRE(sink.arrivals.size() == 1);
    CHECK(sink.arrivals[0].at == SimTime{11'200'000});
    CHECK(sim.stats().flows.at(1).packets_sent == 1);
  }

  TEST_CASE("sojourn covers queueing behind earlier packets") {
    Simulator sim;
    CollectingSink sink;
    LinkSpec spec;
    spec.rate = BitRate::mbps(10);
    spec.one_way_prop_delay = 0ms;
    Link link(spec, &sink, 1);
    std::vector<SimTime> sojourns;
    link.set_departure_hook([&](const Packet&, SimTime s, SimTime) { sojourns.push_back(s); });
    link.transmit(sim, data_packet(1, 0));
    link.transmit(sim, data_packet(1, 1));
    sim.run_until(1s);
    REQUIRE(sojourns.size() == 2);
    CHECK(sojourns[0] == SimTime{1'200'000});
    CHECK(sojourns[1] == SimTime{2'400'000});
  }

  TEST_CASE("full DropTail queue drops and counts") {
    Simulator sim;
    CollectingSink sink;
    LinkSpec spec;
    spec.qdisc.buffer_packets = 3;
    Link link(spec, &sink, 1);
    // One packet goes straight into service, three fill the queue.
    for (std::uint64_t s = 0; s < 5; ++s) link.transmit(sim, data_packet(1, s));
    CHECK(sim.stats().flows.at(1).packets_dropped == 1);
    sim.run_until(1s);
    CHECK(sink.arrivals.size() == 4);
  }

  TEST_CASE("saturated 10 Mbit/s link delivers rate x duration bytes") {
    Simulator sim;
    struct Counter final : PacketSink {
      ByteCount bytes = 0;
      void receive(Simulator&, const Packet& p) override { bytes += p.size_bytes; }
    } sink;
    LinkSpec spec;
    spec.rate = BitRate::mbps(10);
    spec.one_way_prop_delay = 0ms;
    spec.qdisc.buffer_packets = 100'000;
    Link link(spec, &sink, 1);
    for (std::uint64_t s = 0; s < 80'000; ++s) link.transmit(sim, data_packet(1, s));
    sim.run_until(90s);
    const ByteCount expected = 112'500'000;  // 10e6 / 8 * 90
    CHECK(std::llabs(sink.bytes - expected) <= kDataPacketBytes);
  }

  TEST_CASE("delay line keeps FIFO order under jitter") {
    Simulator sim;
    CollectingSink sink;
    DelayLine line(5ms, &sink, 1);
    line.send(sim, data_packet(1, 0), 3ms);
    line.send(sim, data_packet(1, 1), 0ms);
    sim.run_until(1s);
    REQUIRE(sink.arrivals.size() == 2);
    CHECK(sink.arrivals[0].pkt.seq == 0);
    CHECK(sink.arrivals[1].pkt.seq == 1);
    CHECK(sink.arrivals[1].at >= sink.arrivals[0].at);
  }

  TEST_CASE("fraction parsing") {
    CHECK(parse_fraction("2/3") == Fraction{2, 3});
    CHECK(parse_fraction("0.125") == Fraction{1, 8});
    CHECK(parse_fraction("4/8") == Fraction{1, 2});
    CHECK(parse_fraction("7") == Fraction{7, 1});
    CHECK_FALSE(parse_fraction("1/0"));
    CHECK_FALSE(parse_fraction("abc"));
    CHECK_FALSE(parse_fraction(""));
    CHECK(to_string(Fraction{2, 3}) == "2/3");
    CHECK(Fraction{2, 3}.complement() == Fraction{1, 3});
  }
}
