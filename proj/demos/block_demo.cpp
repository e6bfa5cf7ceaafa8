// Minimal library walkthrough: build one 16-PE block, probe a few zero-load
// paths, then saturate it with uniform traffic and print the headline numbers.

#include <cstdio>

#include "ringmesh/engine.hpp"

using namespace ringmesh;

int main() {
  SimConfig cfg;
  cfg.topology.kind = TopologyKind::RingMesh;
  cfg.topology.rows = 1;
  cfg.topology.cols = 1;
  cfg.traffic.pattern = TrafficPattern::UniformRandom;
  cfg.traffic.injection_rate = 1.0;
  cfg.traffic.seed = 42;
  cfg.total_cycles = 20000;

  {
    Engine probe(cfg);
    std::printf("zero-load latencies (single block)\n");
    const NodeAddress pairs[][2] = {
        {{0, 0, 0, 0}, {0, 0, 0, 1}},  // ring neighbours
        {{0, 0, 0, 0}, {0, 0, 0, 2}},  // opposite side of the ring
        {{0, 0, 0, 2}, {0, 0, 3, 2}},  // worst intra-block pair
    };
    for (const auto& p : pairs) {
      auto zl = probe.measure_zero_load_latency(p[0], p[1]);
      std::printf("  %s -> %s : %llu cycles (%u hops)\n",
                  format_address(p[0]).c_str(), format_address(p[1]).c_str(),
                  static_cast<unsigned long long>(zl.latency),
                  zero_load_hops(cfg.topology, p[0], p[1]));
    }
  }

  SimStats s = run(cfg);
  std::printf("\nsaturation run (Ir=1.0, uniform, %llu cycles)\n",
              static_cast<unsigned long long>(cfg.total_cycles));
  std::printf("  injected   %llu flits\n",
              static_cast<unsigned long long>(s.injected_flits));
  std::printf("  delivered  %llu packets\n",
              static_cast<unsigned long long>(s.delivered_packets));
  std::printf("  throughput %.2f packets/cycle\n", s.throughput_pkts_per_cycle);
  if (s.avg_latency_cycles)
    std::printf("  avg latency %.1f cycles (p99 %.0f)\n", *s.avg_latency_cycles,
                s.p99_latency_cycles.value_or(0));
  return 0;
}
