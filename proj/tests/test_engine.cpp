#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "ringmesh/engine.hpp"

using namespace ringmesh;

namespace {

SimConfig small_config(uint32_t rows, uint32_t cols, TrafficPattern pat,
                       double ir, uint64_t cycles, uint64_t seed = 7) {
  SimConfig c;
  c.topology.kind = TopologyKind::RingMesh;
  c.topology.rows = rows;
  c.topology.cols = cols;
  c.traffic.pattern = pat;
  c.traffic.injection_rate = ir;
  c.traffic.seed = seed;
  c.total_cycles = cycles;
  return c;
}

}  // namespace

TEST_CASE("empty step only advances the cycle counter") {
  SimConfig c = small_config(1, 1, TrafficPattern::UniformRandom, 1.0, 10);
  Engine e(c);
  const uint64_t sig = e.topology().state_signature();
  e.step();
  e.step();
  CHECK(e.cycle() == 2);
  CHECK(e.topology().state_signature() == sig);
  CHECK(e.injected_flits() == 0);
}

TEST_CASE("zero-load latency equals the hop count for every pair") {
  SimConfig c = small_config(2, 2, TrafficPattern::UniformRandom, 1.0, 10);
  Engine e(c);
  const TopologySpec& spec = c.topology;
  const TopoDims d{2, 2};
  for (uint32_t a = 0; a < 64; ++a)
    for (uint32_t b = 0; b < 64; ++b) {
      if (a == b) continue;
      const NodeAddress src = index_to_address(a, d);
      const NodeAddress dst = index_to_address(b, d);
      auto zl = e.measure_zero_load_latency(src, dst);
      REQUIRE(zl.delivered);
      CHECK(zl.latency == zero_load_hops(spec, src, dst));
    }
}

TEST_CASE("unsaturated delivery tracks the offered load") {
  // Open-loop oracle: far below saturation every generated packet is
  // delivered, so throughput must equal Ir * N within binomial noise.
  for (uint32_t pes : {16u, 64u}) {
    SimConfig c = small_config(1, pes / 16, TrafficPattern::UniformRandom, 0.05,
                               20000);
    c.warmup_cycles = 2000;
    SimStats s = run(c);
    const double offered = 0.05 * pes;
    CHECK(s.throughput_pkts_per_cycle > offered * 0.95);
    CHECK(s.throughput_pkts_per_cycle < offered * 1.05);
  }
}

TEST_CASE("delivered destinations realize the transpose permutation") {
  SimConfig c = small_config(2, 2, TrafficPattern::Transpose, 0.1, 3000);
  c.trace_level = TraceLevel::PerPacket;
  SimStats s = run(c);
  Topology t = build_topology(c.topology);
  REQUIRE(s.packet_traces.size() > 100);
  for (const PacketTrace& tr : s.packet_traces) {
    const GlobalPeIndex src = t.index_of(tr.src);
    const GlobalPeIndex dst = t.index_of(tr.dst);
    CHECK(dest_transpose(src, 64) == dst);
  }
}

TEST_CASE("adjacent PEs in a ringlet deliver within 3 cycles") {
  Engine e(small_config(1, 1, TrafficPattern::UniformRandom, 1.0, 10));
  auto zl = e.measure_zero_load_latency({0, 0, 0, 0}, {0, 0, 0, 1});
  REQUIRE(zl.delivered);
  CHECK(zl.latency <= 3);
}

TEST_CASE("intra-block round trips stay within 12 cycles") {
  Engine e(small_config(1, 1, TrafficPattern::UniformRandom, 1.0, 10));
  const TopoDims d{1, 1};
  for (uint32_t a = 0; a < 16; ++a)
    for (uint32_t b = a + 1; b < 16; ++b) {
      auto fwd = e.measure_zero_load_latency(index_to_address(a, d),
                                             index_to_address(b, d));
      auto rev = e.measure_zero_load_latency(index_to_address(b, d),
                                             index_to_address(a, d));
      REQUIRE(fwd.delivered);
      REQUIRE(rev.delivered);
      CHECK(fwd.latency + rev.latency <= 12);
    }
}

TEST_CASE("corner-to-corner crossing matches the 8x8 diameter") {
  Engine e(small_config(8, 8, TrafficPattern::UniformRandom, 1.0, 10));
  auto zl = e.measure_zero_load_latency({0, 0, 0, 2}, {7, 7, 0, 2});
  REQUIRE(zl.delivered);
  CHECK(zl.latency == 20);
  CHECK(zl.latency >= diameter_hops(e.topology().spec));
}

TEST_CASE("identical configs produce identical results") {
  SimConfig c = small_config(2, 2, TrafficPattern::UniformRandom, 0.75, 2000);
  SimStats a = run(c);
  SimStats b = run(c);
  CHECK(a == b);
  CHECK(a.delivered_packets > 0);
}

TEST_CASE("component update order does not affect results") {
  SimConfig c = small_config(2, 2, TrafficPattern::Transpose, 1.0, 1500);
  SimStats natural = run(c);
  for (uint64_t seed : {1ull, 42ull, 1234ull}) {
    SimConfig shuffled = c;
    shuffled.order_shuffle_seed = seed;
    CHECK(run(shuffled) == natural);
  }
}

TEST_CASE("zero injection delivers nothing and reports no latency") {
  SimConfig c = small_config(1, 1, TrafficPattern::UniformRandom, 0.0, 500);
  SimStats s = run(c);
  CHECK(s.injected_flits == 0);
  CHECK(s.delivered_packets == 0);
  CHECK_FALSE(s.avg_latency_cycles.has_value());
  CHECK(s.throughput_pkts_per_cycle == 0.0);
}

TEST_CASE("conservation holds every cycle under saturation") {
  SimConfig c = small_config(2, 1, TrafficPattern::UniformRandom, 1.0, 3000);
  c.check_conservation = true;  // engine throws on any violation
  Engine e(c);
  SimStats s = e.run();
  CHECK(s.injected_flits ==
        s.delivered_flits + s.consumed_config_flits + s.dropped_flits +
            s.in_flight_end);
}

TEST_CASE("per-packet latency is bounded below by the hop count") {
  SimConfig c = small_config(2, 2, TrafficPattern::UniformRandom, 0.5, 1500);
  c.trace_level = TraceLevel::PerPacket;
  SimStats s = run(c);
  REQUIRE(!s.packet_traces.empty());
  for (const PacketTrace& t : s.packet_traces) {
    const uint64_t latency = t.deliver_cycle - t.inject_cycle;
    CHECK(latency >= zero_load_hops(c.topology, t.src, t.dst));
    CHECK(t.hops >= zero_load_hops(c.topology, t.src, t.dst));
  }
}

TEST_CASE("saturated network stays live in every 1k-cycle window") {
  SimConfig c = small_config(2, 2, TrafficPattern::UniformRandom, 1.0, 5000);
  SimStats s = run(c);
  REQUIRE(s.delivered_per_cycle.size() >= 5000);
  for (std::size_t w = 0; w + 1000 <= 5000; w += 1000) {
    uint64_t in_window = 0;
    for (std::size_t i = w; i < w + 1000; ++i) in_window += s.delivered_per_cycle[i];
    CHECK(in_window >= 1);
  }
}

TEST_CASE("XY routing stays deadlock-free over 100k saturated cycles") {
  SimConfig c = small_config(2, 2, TrafficPattern::UniformRandom, 1.0, 100000);
  SimStats s = run(c);
  uint64_t prev = 0, cum = 0;
  for (std::size_t w = 0; w + 1000 <= 100000; w += 1000) {
    for (std::size_t i = w; i < w + 1000; ++i) cum += s.delivered_per_cycle[i];
    CHECK(cum > prev);  // delivered count strictly increases every window
    prev = cum;
  }
}

TEST_CASE("unsaturated throughput doubles with the PE count") {
  for (TrafficPattern pat : {TrafficPattern::UniformRandom,
                             TrafficPattern::BitReversal,
                             TrafficPattern::Transpose}) {
    SimStats a = run(small_config(1, 1, pat, 0.05, 4000));
    SimStats b = run(small_config(1, 2, pat, 0.05, 4000));
    CHECK(b.throughput_pkts_per_cycle > a.throughput_pkts_per_cycle);
  }
}

TEST_CASE("drain empties the network") {
  SimConfig c = small_config(2, 2, TrafficPattern::UniformRandom, 0.3, 800);
  c.drain = true;
  SimStats s = run(c);
  CHECK(s.in_flight_end == 0);
  CHECK(s.injected_flits == s.delivered_flits + s.dropped_flits);
}

TEST_CASE("drain timeout names the deadlock") {
  SimConfig c = small_config(1, 1, TrafficPattern::UniformRandom, 0.0, 50);
  c.drain = true;
  c.drain_timeout_cap = 500;
  Engine e(c);
  // Disable the PE link, then schedule an injection from that PE: the packet
  // can never enter the network and the drain must time out.
  MorphPayload m;
  m.link_config[kLcPe] = LinkState2b::SwitchOff;
  apply_morph_to_switch(e.topology(), e.topology().rs_index(0, 0, 1, 2), m);
  e.schedule_injection(0, e.topology().index_of({0, 0, 1, 2}), {0, 0, 0, 0},
                       {LogicalPayload::Kind::Data, 5});
  CHECK_THROWS_AS(e.run(), DeadlockError);
}

TEST_CASE("flat mesh runs on the identical engine") {
  SimConfig c;
  c.topology.kind = TopologyKind::FlatMesh;
  c.topology.rows = 4;
  c.topology.cols = 4;
  c.traffic.injection_rate = 0.5;
  c.traffic.seed = 3;
  c.total_cycles = 2000;
  SimStats s = run(c);
  CHECK(s.delivered_packets > 0);
  CHECK(run(c) == s);

  Engine e(c);
  for (uint32_t a = 0; a < 16; ++a)
    for (uint32_t b = 0; b < 16; ++b) {
      if (a == b) continue;
      const NodeAddress src = e.topology().address_of(a);
      const NodeAddress dst = e.topology().address_of(b);
      auto zl = e.measure_zero_load_latency(src, dst);
      REQUIRE(zl.delivered);
      CHECK(zl.latency == zero_load_hops(c.topology, src, dst));
    }
}

TEST_CASE("warm-up excludes early packets from the latency average") {
  SimConfig c = small_config(1, 1, TrafficPattern::UniformRandom, 0.4, 1000);
  c.warmup_cycles = 500;
  SimStats s = run(c);
  CHECK(s.measured_packets < s.delivered_packets);
  REQUIRE(s.avg_latency_cycles.has_value());
  CHECK(*s.avg_latency_cycles >= 1.0);
  REQUIRE(s.p99_latency_cycles.has_value());
  CHECK(*s.p99_latency_cycles >= *s.avg_latency_cycles);
}

TEST_CASE("latency statistics match a direct recomputation from the traces") {
  SimConfig c = small_config(2, 1, TrafficPattern::UniformRandom, 0.6, 2000);
  c.warmup_cycles = 200;
  c.trace_level = TraceLevel::PerPacket;
  SimStats s = run(c);
  std::vector<uint64_t> lats;
  for (const PacketTrace& t : s.packet_traces)
    if (t.inject_cycle >= 200) lats.push_back(t.deliver_cycle - t.inject_cycle);
  REQUIRE(lats.size() == s.measured_packets);
  double sum = 0;
  for (uint64_t l : lats) sum += static_cast<double>(l);
  REQUIRE(s.avg_latency_cycles.has_value());
  CHECK(*s.avg_latency_cycles ==
        Catch::Approx(sum / static_cast<double>(lats.size())));
  // p99: smallest latency whose cumulative count reaches ceil(0.99 * n).
  std::sort(lats.begin(), lats.end());
  const std::size_t target = (99 * lats.size() + 99) / 100;
  REQUIRE(s.p99_latency_cycles.has_value());
  CHECK(*s.p99_latency_cycles == static_cast<double>(lats[target - 1]));
}
