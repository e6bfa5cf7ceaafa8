#pragma once

#include <atomic>
#include <cctype>
#include <cmath>
#include <future>
#include <istream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ringmesh/report.hpp"

namespace ringmesh {

struct SweepSpec {
  std::vector<uint32_t> pe_counts = {16};
  std::vector<TrafficPattern> patterns = {TrafficPattern::UniformRandom};
  std::vector<double> rates = {1.0};
  std::vector<uint64_t> seeds = {1};
  std::vector<TopologyKind> topologies = {TopologyKind::RingMesh};
  uint64_t cycles = 10000;
  uint64_t warmup = UINT64_MAX;
  RouterParams router;
  RsParams rs;
  InjectionMode mode = InjectionMode::Bernoulli;
  LatencyMode latency_mode = LatencyMode::FromIntendedInjection;
};

// The full published evaluation grid: 7 sizes x 3 patterns x 4 rates x 2
// topologies (one row per seed per cell), plus rate-averaged aggregates.
inline SweepSpec paper_repro_spec() {
  SweepSpec s;
  s.pe_counts = {16, 32, 64, 128, 256, 512, 1024};
  s.patterns = {TrafficPattern::UniformRandom, TrafficPattern::BitReversal,
                TrafficPattern::Transpose};
  s.rates = {0.25, 0.50, 0.75, 1.00};
  s.topologies = {TopologyKind::RingMesh, TopologyKind::FlatMesh};
  return s;
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : v) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

// Flat key=value format; '#' starts a comment. Keys mirror the CLI flags.
inline SweepSpec parse_sweep_spec(std::istream& in) {
  SweepSpec s;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    auto trim = [](std::string& t) {
      while (!t.empty() && std::isspace(static_cast<unsigned char>(t.front())))
        t.erase(t.begin());
      while (!t.empty() && std::isspace(static_cast<unsigned char>(t.back())))
        t.pop_back();
    };
    trim(key);
    trim(val);
    if (key.empty()) continue;
    try {
      if (key == "pe_counts") {
        s.pe_counts.clear();
        for (const auto& v : split_list(val)) {
          const auto pes = static_cast<uint32_t>(std::stoul(v));
          bool known = false;
          for (uint32_t k : {16u, 32u, 64u, 128u, 256u, 512u, 1024u})
            known |= k == pes;
          if (!known)
            throw ConfigError("sweep spec: pe_counts must come from "
                              "{16,32,64,128,256,512,1024}, got " + v);
          s.pe_counts.push_back(pes);
        }
      } else if (key == "patterns") {
        s.patterns.clear();
        for (const auto& v : split_list(val)) s.patterns.push_back(pattern_from_name(v));
      } else if (key == "rates") {
        s.rates.clear();
        for (const auto& v : split_list(val)) s.rates.push_back(std::stod(v));
      } else if (key == "seeds") {
        s.seeds.clear();
        for (const auto& v : split_list(val)) s.seeds.push_back(std::stoull(v));
      } else if (key == "topologies") {
        s.topologies.clear();
        for (const auto& v : split_list(val))
          s.topologies.push_back(topology_from_name(v));
      } else if (key == "cycles") {
        s.cycles = std::stoull(val);
      } else if (key == "warmup") {
        s.warmup = std::stoull(val);
      } else if (key == "vc_depth") {
        s.router.vc_depth = static_cast<uint8_t>(std::stoul(val));
        s.rs.depth = s.router.vc_depth;
      } else if (key == "starvation_threshold") {
        s.rs.starvation_threshold = static_cast<uint8_t>(std::stoul(val));
      } else if (key == "injection_mode") {
        s.mode = val == "exact" ? InjectionMode::ExactCount : InjectionMode::Bernoulli;
      } else if (key == "latency_mode") {
        s.latency_mode = val == "network" ? LatencyMode::FromNetworkEntry
                                          : LatencyMode::FromIntendedInjection;
      } else {
        throw ConfigError("sweep spec: unknown key '" + key + "'");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("sweep spec: bad value for '" + key + "'");
    }
  }
  if (s.pe_counts.empty() || s.patterns.empty() || s.rates.empty() ||
      s.seeds.empty() || s.topologies.empty())
    throw ConfigError("sweep spec: every axis needs at least one value");
  return s;
}

inline SimConfig cell_config(const SweepSpec& s, TopologyKind kind, uint32_t pes,
                             TrafficPattern pattern, double rate, uint64_t seed) {
  SimConfig c;
  c.topology.kind = kind;
  const TopoDims d =
      kind == TopologyKind::RingMesh ? ring_dims_for_pes(pes) : flat_dims_for_pes(pes);
  c.topology.rows = d.rows;
  c.topology.cols = d.cols;
  c.topology.router = s.router;
  c.topology.rs = s.rs;
  c.traffic.pattern = pattern;
  c.traffic.injection_rate = rate;
  c.traffic.seed = seed;
  c.traffic.mode = s.mode;
  c.total_cycles = s.cycles;
  c.warmup_cycles = s.warmup;
  c.latency_mode = s.latency_mode;
  return c;
}

struct SweepResult {
  std::vector<RunRow> rows;        // one per cell, in cell-index order
  std::vector<RunRow> aggregates;  // rate-averaged rows per size/pattern/seed
  std::vector<std::string> errors; // per-cell failures; the sweep continues
};

inline SweepResult run_sweep(const SweepSpec& spec, unsigned jobs = 0) {
  struct Cell {
    TopologyKind kind;
    uint32_t pes;
    TrafficPattern pattern;
    double rate;
    uint64_t seed;
  };
  std::vector<Cell> cells;
  for (TopologyKind k : spec.topologies)
    for (uint32_t pes : spec.pe_counts)
      for (TrafficPattern p : spec.patterns)
        for (double r : spec.rates)
          for (uint64_t seed : spec.seeds) cells.push_back({k, pes, p, r, seed});

  SweepResult res;
  res.rows.resize(cells.size());
  std::vector<std::string> errors(cells.size());
  std::atomic<std::size_t> next{0};
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min<unsigned>(jobs, static_cast<unsigned>(cells.size()) == 0
                                      ? 1
                                      : static_cast<unsigned>(cells.size()));
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      const Cell& cell = cells[i];
      // A failing cell reports in place; the rest of the sweep continues.
      try {
        const SimConfig cfg = cell_config(spec, cell.kind, cell.pes,
                                          cell.pattern, cell.rate, cell.seed);
        res.rows[i] = make_row(cfg, run(cfg));
      } catch (const std::exception& e) {
        RunRow& r = res.rows[i];
        r.topology = topology_name(cell.kind);
        r.pes = cell.pes;
        r.pattern = pattern_name(cell.pattern);
        r.injection_rate = cell.rate;
        r.seed = cell.seed;
        r.cycles = spec.cycles;
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::future<void>> pool;
  for (unsigned j = 0; j + 1 < jobs; ++j)
    pool.push_back(std::async(std::launch::async, worker));
  worker();
  for (auto& f : pool) f.get();
  for (std::size_t i = 0; i < cells.size(); ++i)
    if (!errors[i].empty())
      res.errors.push_back("cell " + std::to_string(i) + ": " + errors[i]);

  // Rate-averaged aggregates (the published scalability curves average the
  // four injection rates into Ir = 0.625).
  if (spec.rates.size() > 1) {
    double ir_mean = 0;
    for (double r : spec.rates) ir_mean += r;
    ir_mean /= static_cast<double>(spec.rates.size());
    for (TopologyKind k : spec.topologies)
      for (uint32_t pes : spec.pe_counts)
        for (TrafficPattern p : spec.patterns)
          for (uint64_t seed : spec.seeds) {
            RunRow agg;
            int n = 0;
            double lat = 0, p99 = 0, thr = 0;
            int lat_n = 0;
            for (const RunRow& r : res.rows) {
              if (r.rows == 0) continue;  // failed cell: no aggregate
              if (r.topology != topology_name(k) || r.pes != pes ||
                  r.pattern != pattern_name(p) || r.seed != seed)
                continue;
              if (n == 0) agg = r;
              agg.injected += n ? r.injected : 0;
              agg.delivered += n ? r.delivered : 0;
              agg.dropped += n ? r.dropped : 0;
              if (r.avg_latency_cycles) {
                lat += *r.avg_latency_cycles;
                if (r.p99_latency_cycles) p99 += *r.p99_latency_cycles;
                ++lat_n;
              }
              thr += r.throughput_pkts_per_cycle;
              ++n;
            }
            if (n != static_cast<int>(spec.rates.size())) continue;
            agg.injection_rate = ir_mean;
            agg.throughput_pkts_per_cycle = thr / n;
            if (lat_n > 0) {
              agg.avg_latency_cycles = lat / lat_n;
              agg.p99_latency_cycles = p99 / lat_n;
            } else {
              agg.avg_latency_cycles.reset();
              agg.p99_latency_cycles.reset();
            }
            res.aggregates.push_back(agg);
          }
  }
  return res;
}

}  // namespace ringmesh
