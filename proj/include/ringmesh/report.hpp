#pragma once

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "ringmesh/engine.hpp"

namespace ringmesh {

inline constexpr int kCsvSchemaVersion = 1;
inline constexpr const char* kArtifactVersion = "1.0.0";

struct RunRow {
  std::string topology;  // "ringmesh" or "flat"
  uint32_t rows = 0, cols = 0, pes = 0;
  std::string pattern;
  double injection_rate = 0;
  uint64_t seed = 0;
  uint64_t cycles = 0, warmup = 0;
  uint64_t injected = 0, delivered = 0, dropped = 0;
  std::optional<double> avg_latency_cycles;
  std::optional<double> p99_latency_cycles;
  double throughput_pkts_per_cycle = 0;

  bool operator==(const RunRow&) const = default;
};

inline const char* topology_name(TopologyKind k) {
  return k == TopologyKind::RingMesh ? "ringmesh" : "flat";
}

inline TopologyKind topology_from_name(const std::string& s) {
  if (s == "ringmesh") return TopologyKind::RingMesh;
  if (s == "flat") return TopologyKind::FlatMesh;
  throw ConfigError("unknown topology '" + s + "' (ringmesh|flat)");
}

inline RunRow make_row(const SimConfig& cfg, const SimStats& s) {
  RunRow r;
  r.topology = topology_name(cfg.topology.kind);
  r.rows = cfg.topology.rows;
  r.cols = cfg.topology.cols;
  r.pes = cfg.topology.kind == TopologyKind::RingMesh
              ? 16 * cfg.topology.rows * cfg.topology.cols
              : cfg.topology.rows * cfg.topology.cols;
  r.pattern = pattern_name(cfg.traffic.pattern);
  r.injection_rate = cfg.traffic.injection_rate;
  r.seed = cfg.traffic.seed;
  r.cycles = cfg.total_cycles;
  r.warmup = cfg.effective_warmup();
  r.injected = s.injected_flits;
  r.delivered = s.delivered_packets;
  r.dropped = s.dropped_flits;
  r.avg_latency_cycles = s.avg_latency_cycles;
  r.p99_latency_cycles = s.p99_latency_cycles;
  r.throughput_pkts_per_cycle = s.throughput_pkts_per_cycle;
  return r;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string csv_header() {
  return "schema_version,topology,rows,cols,pes,pattern,injection_rate,seed,"
         "cycles,warmup,injected,delivered,dropped,avg_latency_cycles,"
         "p99_latency_cycles,throughput_pkts_per_cycle";
}

inline std::string csv_row(const RunRow& r) {
  std::string out;
  out += std::to_string(kCsvSchemaVersion);
  out += ',' + r.topology;
  out += ',' + std::to_string(r.rows);
  out += ',' + std::to_string(r.cols);
  out += ',' + std::to_string(r.pes);
  out += ',' + r.pattern;
  out += ',' + format_double(r.injection_rate);
  out += ',' + std::to_string(r.seed);
  out += ',' + std::to_string(r.cycles);
  out += ',' + std::to_string(r.warmup);
  out += ',' + std::to_string(r.injected);
  out += ',' + std::to_string(r.delivered);
  out += ',' + std::to_string(r.dropped);
  out += ',';
  if (r.avg_latency_cycles) out += format_double(*r.avg_latency_cycles);
  out += ',';
  if (r.p99_latency_cycles) out += format_double(*r.p99_latency_cycles);
  out += ',' + format_double(r.throughput_pkts_per_cycle);
  return out;
}

// Parses a row previously produced by csv_row (used by the compare command).
inline RunRow parse_csv_row(const std::string& line) {
  std::vector<std::string> f;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      f.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  f.push_back(cur);
  if (f.size() != 16) throw ConfigError("csv row: expected 16 fields");
  if (f[0] != std::to_string(kCsvSchemaVersion))
    throw ConfigError("csv row: unsupported schema version " + f[0]);
  RunRow r;
  r.topology = f[1];
  r.rows = static_cast<uint32_t>(std::stoul(f[2]));
  r.cols = static_cast<uint32_t>(std::stoul(f[3]));
  r.pes = static_cast<uint32_t>(std::stoul(f[4]));
  r.pattern = f[5];
  r.injection_rate = std::stod(f[6]);
  r.seed = std::stoull(f[7]);
  r.cycles = std::stoull(f[8]);
  r.warmup = std::stoull(f[9]);
  r.injected = std::stoull(f[10]);
  r.delivered = std::stoull(f[11]);
  r.dropped = std::stoull(f[12]);
  if (!f[13].empty()) r.avg_latency_cycles = std::stod(f[13]);
  if (!f[14].empty()) r.p99_latency_cycles = std::stod(f[14]);
  r.throughput_pkts_per_cycle = std::stod(f[15]);
  return r;
}

// ---------------------------------------------------------------------------
// Published reference measurements (RTL evaluation of the same design).
// These are trend anchors: the compare command prints ratios, never asserts.
// ---------------------------------------------------------------------------

struct ReferencePoint {
  const char* metric;    // "throughput" | "latency"
  const char* topology;  // "ringmesh" | "flat"
  uint32_t pes;
  const char* pattern;   // "uniform", "transpose", or "any" (pattern-averaged)
  double injection_rate;
  double value;
};

inline const std::vector<ReferencePoint>& reference_table() {
  static const std::vector<ReferencePoint> table = {
      {"throughput", "ringmesh", 16, "uniform", 1.0, 12.0},
      {"throughput", "ringmesh", 32, "uniform", 1.0, 22.0},
      {"throughput", "ringmesh", 512, "uniform", 1.0, 345.0},
      {"throughput", "ringmesh", 1024, "uniform", 1.0, 680.0},
      {"throughput", "ringmesh", 16, "transpose", 0.625, 9.8},
      {"throughput", "ringmesh", 32, "transpose", 0.625, 17.13},
      {"throughput", "ringmesh", 128, "transpose", 0.625, 69.25},
      {"throughput", "ringmesh", 256, "transpose", 0.625, 147.7},
      {"throughput", "ringmesh", 512, "transpose", 0.625, 288.0},
      {"throughput", "ringmesh", 1024, "transpose", 0.625, 570.0},
      {"latency", "ringmesh", 16, "any", 0.625, 65.0},
      {"latency", "ringmesh", 128, "any", 0.625, 100.0},
      {"latency", "ringmesh", 1024, "any", 0.625, 170.0},
      {"latency", "flat", 16, "any", 0.625, 72.0},
      {"latency", "flat", 128, "any", 0.625, 156.0},
      {"latency", "flat", 1024, "any", 0.625, 377.0},
  };
  return table;
}

struct CompareRow {
  std::string metric, topology, pattern;
  uint32_t pes = 0;
  double injection_rate = 0;
  double reference = 0;
  double measured = 0;
  double ratio = 0;  // measured / reference
};

inline std::string compare_csv_header() {
  return "metric,topology,pes,pattern,injection_rate,reference,measured,ratio";
}

inline std::string compare_csv_row(const CompareRow& c) {
  return c.metric + ',' + c.topology + ',' + std::to_string(c.pes) + ',' +
         c.pattern + ',' + format_double(c.injection_rate) + ',' +
         format_double(c.reference) + ',' + format_double(c.measured) + ',' +
         format_double(c.ratio);
}

// Joins measured rows against the reference table. "any"-pattern anchors match
// the mean over whatever patterns are present at that cell.
inline std::vector<CompareRow> compare_against_reference(
    const std::vector<RunRow>& rows) {
  std::vector<CompareRow> out;
  auto close = [](double a, double b) { return a - b < 1e-9 && b - a < 1e-9; };
  for (const ReferencePoint& ref : reference_table()) {
    double sum = 0;
    int n = 0;
    for (const RunRow& r : rows) {
      if (r.topology != ref.topology || r.pes != ref.pes) continue;
      if (!close(r.injection_rate, ref.injection_rate)) continue;
      if (std::string(ref.pattern) != "any" && r.pattern != ref.pattern) continue;
      if (std::string(ref.metric) == "latency") {
        if (!r.avg_latency_cycles) continue;
        sum += *r.avg_latency_cycles;
      } else {
        sum += r.throughput_pkts_per_cycle;
      }
      ++n;
    }
    if (n == 0) continue;
    CompareRow c;
    c.metric = ref.metric;
    c.topology = ref.topology;
    c.pattern = ref.pattern;
    c.pes = ref.pes;
    c.injection_rate = ref.injection_rate;
    c.reference = ref.value;
    c.measured = sum / n;
    c.ratio = c.measured / c.reference;
    out.push_back(c);
  }
  return out;
}

}  // namespace ringmesh
