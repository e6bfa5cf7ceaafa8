// Experiment front-end for the ring-mesh network simulator: single runs,
// sweeps, analytic topology metrics, morph-plan execution and comparison
// against the published reference measurements.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ringmesh/ringmesh.hpp"

using namespace ringmesh;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDeadlock = 3;

uint64_t default_seed() {
  if (const char* env = std::getenv("RINGMESH_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError("RINGMESH_SEED must be an integer");
    }
  }
  return 1;
}

json row_to_json(const RunRow& r) {
  json j;
  j["schema_version"] = kCsvSchemaVersion;
  j["artifact_version"] = kArtifactVersion;
  j["topology"] = r.topology;
  j["rows"] = r.rows;
  j["cols"] = r.cols;
  j["pes"] = r.pes;
  j["pattern"] = r.pattern;
  j["injection_rate"] = r.injection_rate;
  j["seed"] = r.seed;
  j["cycles"] = r.cycles;
  j["warmup"] = r.warmup;
  j["injected"] = r.injected;
  j["delivered"] = r.delivered;
  j["dropped"] = r.dropped;
  if (r.avg_latency_cycles) j["avg_latency_cycles"] = *r.avg_latency_cycles;
  else j["avg_latency_cycles"] = nullptr;
  if (r.p99_latency_cycles) j["p99_latency_cycles"] = *r.p99_latency_cycles;
  else j["p99_latency_cycles"] = nullptr;
  j["throughput_pkts_per_cycle"] = r.throughput_pkts_per_cycle;
  return j;
}

void print_rows(const std::vector<RunRow>& rows, const std::string& format) {
  if (format == "json") {
    json arr = json::array();
    for (const auto& r : rows) arr.push_back(row_to_json(r));
    std::cout << arr.dump(2) << '\n';
    return;
  }
  std::cout << "# ringmesh " << kArtifactVersion << '\n' << csv_header() << '\n';
  for (const auto& r : rows) std::cout << csv_row(r) << '\n';
}

struct SimFlags {
  std::string topology = "ringmesh";
  uint32_t pes = 0;
  uint32_t rows = 0, cols = 0;
  std::string pattern = "uniform";
  double ir = 1.0;
  uint64_t cycles = 10000;
  uint64_t warmup = UINT64_MAX;
  uint64_t seed = default_seed();
  unsigned vc_depth = 4;
  unsigned starvation = 4;
  unsigned ring_weight = 2, mesh_weight = 1;
  std::string injection_mode = "bernoulli";
  std::string latency_mode = "intended";
  std::string payload_policy = "sequential";
  bool drain = false;
  std::string trace_file;
  std::string cycle_trace_file;
};

void add_sim_flags(CLI::App* cmd, SimFlags& f) {
  cmd->add_option("--topology", f.topology, "ringmesh|flat")
      ->check(CLI::IsMember({"ringmesh", "flat"}));
  cmd->add_option("--pes", f.pes,
                  "PE count, one of 16,32,64,128,256,512,1024 (most-square grid)");
  cmd->add_option("--rows", f.rows, "router rows (with --cols, overrides --pes)");
  cmd->add_option("--cols", f.cols, "router cols");
  cmd->add_option("--pattern", f.pattern, "uniform|bitrev|transpose");
  cmd->add_option("--ir", f.ir, "injection rate in (0,1], 0 disables");
  cmd->add_option("--cycles", f.cycles, "simulated cycles");
  cmd->add_option("--warmup", f.warmup, "warm-up cycles (default 10% of cycles)");
  cmd->add_option("--seed", f.seed, "RNG seed (env RINGMESH_SEED)");
  cmd->add_option("--vc-depth", f.vc_depth, "VC/buffer depth in flits");
  cmd->add_option("--starvation", f.starvation, "ring starvation threshold S");
  cmd->add_option("--ring-weight", f.ring_weight, "WRR weight, ringlet-origin");
  cmd->add_option("--mesh-weight", f.mesh_weight, "WRR weight, mesh-origin");
  cmd->add_option("--injection-mode", f.injection_mode, "bernoulli|exact")
      ->check(CLI::IsMember({"bernoulli", "exact"}));
  cmd->add_option("--latency-mode", f.latency_mode, "intended|network")
      ->check(CLI::IsMember({"intended", "network"}));
  cmd->add_option("--payload-policy", f.payload_policy, "sequential|random")
      ->check(CLI::IsMember({"sequential", "random"}));
  cmd->add_flag("--drain", f.drain, "run until in-flight packets drain");
  cmd->add_option("--trace-file", f.trace_file, "write per-packet trace CSV");
  cmd->add_option("--cycle-trace-file", f.cycle_trace_file,
                  "write per-cycle counters CSV");
}

const std::vector<uint32_t> kSupportedPes = {16, 32, 64, 128, 256, 512, 1024};

SimConfig config_from_flags(const SimFlags& f) {
  SimConfig c;
  c.topology.kind = topology_from_name(f.topology);
  if (f.rows > 0 || f.cols > 0) {
    if (f.rows == 0 || f.cols == 0)
      throw ConfigError("--rows and --cols must be given together");
    c.topology.rows = f.rows;
    c.topology.cols = f.cols;
  } else {
    uint32_t pes = f.pes == 0 ? 16 : f.pes;
    bool supported = false;
    for (uint32_t s : kSupportedPes) supported |= s == pes;
    if (!supported)
      throw ConfigError("--pes must be one of 16,32,64,128,256,512,1024");
    const TopoDims d = c.topology.kind == TopologyKind::RingMesh
                           ? ring_dims_for_pes(pes)
                           : flat_dims_for_pes(pes);
    c.topology.rows = d.rows;
    c.topology.cols = d.cols;
  }
  validate_spec(c.topology);
  c.topology.router.vc_depth = static_cast<uint8_t>(f.vc_depth);
  c.topology.router.ringlet_weight = static_cast<uint8_t>(f.ring_weight);
  c.topology.router.mesh_weight = static_cast<uint8_t>(f.mesh_weight);
  c.topology.rs.depth = static_cast<uint8_t>(f.vc_depth);
  c.topology.rs.starvation_threshold = static_cast<uint8_t>(f.starvation);
  c.traffic.pattern = pattern_from_name(f.pattern);
  c.traffic.injection_rate = f.ir;
  c.traffic.seed = f.seed;
  c.traffic.mode = f.injection_mode == "exact" ? InjectionMode::ExactCount
                                               : InjectionMode::Bernoulli;
  c.traffic.payload_policy = f.payload_policy == "random"
                                 ? PayloadPolicy::RandomNonescape
                                 : PayloadPolicy::SequentialCounter;
  c.total_cycles = f.cycles;
  c.warmup_cycles = f.warmup;
  c.latency_mode = f.latency_mode == "network" ? LatencyMode::FromNetworkEntry
                                               : LatencyMode::FromIntendedInjection;
  c.drain = f.drain;
  if (!f.trace_file.empty() && !f.cycle_trace_file.empty())
    throw ConfigError("--trace-file and --cycle-trace-file are exclusive");
  if (!f.trace_file.empty()) c.trace_level = TraceLevel::PerPacket;
  if (!f.cycle_trace_file.empty()) c.trace_level = TraceLevel::PerCycle;
  return c;
}

int cmd_simulate(const SimFlags& f, const std::string& format) {
  SimConfig cfg = config_from_flags(f);
  Engine engine(cfg);
  std::ofstream cycle_trace;
  if (!f.cycle_trace_file.empty()) {
    cycle_trace.open(f.cycle_trace_file);
    if (!cycle_trace)
      throw ConfigError("cannot open cycle trace file " + f.cycle_trace_file);
    cycle_trace << "cycle,injected,delivered,in_flight\n";
    engine.set_trace_stream(&cycle_trace);
  }
  SimStats st = engine.run();
  print_rows({make_row(cfg, st)}, format);
  if (!f.trace_file.empty()) {
    std::ofstream out(f.trace_file);
    if (!out) throw ConfigError("cannot open trace file " + f.trace_file);
    out << "packet_id,src,dst,inject_cycle,deliver_cycle,hops\n";
    for (const PacketTrace& t : st.packet_traces)
      out << t.packet_id << ',' << format_address(t.src) << ','
          << format_address(t.dst) << ',' << t.inject_cycle << ','
          << t.deliver_cycle << ',' << t.hops << '\n';
  }
  return kExitOk;
}

int cmd_sweep(const std::string& spec_file, bool paper_repro, unsigned jobs,
              uint64_t cycles_override, const std::string& format) {
  SweepSpec spec;
  if (paper_repro) {
    spec = paper_repro_spec();
  } else if (!spec_file.empty()) {
    std::ifstream in(spec_file);
    if (!in) throw ConfigError("cannot open sweep spec " + spec_file);
    spec = parse_sweep_spec(in);
  } else {
    throw ConfigError("sweep needs --spec FILE or --paper-repro");
  }
  if (cycles_override > 0) spec.cycles = cycles_override;
  SweepResult res = run_sweep(spec, jobs);
  std::vector<RunRow> all = res.rows;
  all.insert(all.end(), res.aggregates.begin(), res.aggregates.end());
  print_rows(all, format);
  for (const std::string& e : res.errors) std::cerr << "error: " << e << '\n';
  return kExitOk;
}

int cmd_analyze(uint32_t rows, uint32_t cols, const std::string& topology,
                uint32_t link_bits, bool extended, const std::string& format) {
  TopologySpec s;
  s.kind = topology_from_name(topology);
  s.rows = rows;
  s.cols = cols;
  s.link_bandwidth_bits = link_bits;
  validate_spec(s);
  const uint32_t routers = rows * cols;
  const uint32_t ringlets = s.kind == TopologyKind::RingMesh ? 4 * routers : 0;
  const uint32_t pes =
      s.kind == TopologyKind::RingMesh ? 16 * routers : routers;
  const BisectionMetrics b = bisection_bandwidth(s);
  if (b.degenerate)
    std::cerr << "warning: degenerate bisection (single row or column)\n";
  if (format == "json") {
    json j;
    j["kind"] = topology_name(s.kind);
    j["rows"] = rows;
    j["cols"] = cols;
    j["pes"] = pes;
    j["routers"] = routers;
    j["ringlets"] = ringlets;
    j["diameter"] = diameter_hops(s);
    j["bisection_bits_per_cycle"] = b.bits_per_cycle;
    if (extended) {
      j["router_crossbar_half_bits"] = b.router_crossbar_half_bits;
      j["textbook_bisection_bits_per_cycle"] = b.textbook_bits_per_cycle;
    }
    std::cout << j.dump(2) << '\n';
    return kExitOk;
  }
  std::string header =
      "kind,rows,cols,pes,routers,ringlets,diameter,bisection_bits_per_cycle";
  std::string row = std::string(topology_name(s.kind)) + ',' +
                    std::to_string(rows) + ',' + std::to_string(cols) + ',' +
                    std::to_string(pes) + ',' + std::to_string(routers) + ',' +
                    std::to_string(ringlets) + ',' +
                    std::to_string(diameter_hops(s)) + ',' +
                    std::to_string(b.bits_per_cycle);
  if (extended) {
    header += ",router_crossbar_half_bits,textbook_bisection_bits_per_cycle";
    row += ',' + std::to_string(b.router_crossbar_half_bits) + ',' +
           std::to_string(b.textbook_bits_per_cycle);
  }
  std::cout << header << '\n' << row << '\n';
  return kExitOk;
}

std::vector<MorphCmd> parse_plan_file(std::istream& in) {
  std::vector<MorphCmd> cmds;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tok;
    MorphCmd cmd;
    bool saw_dest = false, saw_hl = false, saw_lc = false;
    uint16_t ers = 0;
    uint8_t pts = 0;
    uint16_t lc = 0;
    while (ls >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos)
        throw ConfigError("plan line " + std::to_string(lineno) +
                          ": expected key=value, got '" + tok + "'");
      const std::string key = tok.substr(0, eq);
      const std::string val = tok.substr(eq + 1);
      try {
        if (key == "dest") {
          cmd.dest = parse_address(val);
          saw_dest = true;
        } else if (key == "hl") {
          cmd.payload.hierarchy_level = static_cast<uint8_t>(std::stoul(val));
          saw_hl = true;
        } else if (key == "ers") {
          ers = static_cast<uint16_t>(std::stoul(val));
        } else if (key == "lc") {
          lc = static_cast<uint16_t>(std::stoul(val, nullptr, 16));
          saw_lc = true;
        } else if (key == "pts") {
          pts = static_cast<uint8_t>(std::stoul(val, nullptr, 16));
        } else {
          throw ConfigError("plan line " + std::to_string(lineno) +
                            ": unknown key '" + key + "'");
        }
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception&) {
        throw ConfigError("plan line " + std::to_string(lineno) +
                          ": bad value for '" + key + "'");
      }
    }
    if (!saw_dest && !saw_hl && !saw_lc) continue;  // blank line
    if (!saw_dest || !saw_hl || !saw_lc)
      throw ConfigError("plan line " + std::to_string(lineno) +
                        ": dest=, hl= and lc= are required");
    cmd.payload.execution_region_size = ers;
    cmd.payload.pe_type_selector = pts;
    for (unsigned g = 0; g < 8; ++g)
      cmd.payload.link_config[g] = static_cast<LinkState2b>((lc >> (2 * g)) & 0x3);
    cmds.push_back(cmd);
  }
  return cmds;
}

const char* state_name(LinkState s) {
  switch (s) {
    case LinkState::Active: return "active";
    case LinkState::Bypass: return "bypass";
    case LinkState::SwitchedOff: return "off";
  }
  return "?";
}

void dump_link_states(const Topology& t, bool all, std::ostream& os) {
  static const char* router_links[8] = {"north", "south", "east", "west",
                                        "ringlet0", "ringlet1", "ringlet2",
                                        "ringlet3"};
  static const char* rs_links[4] = {"ring_cw", "ring_ccw", "pe", "router"};
  os << "component,x,y,ringlet,pe,link,state\n";
  for (const auto& r : t.routers)
    for (int p = 0; p < r.port_count(); ++p)
      if (all || r.port_state(p) != LinkState::Active)
        os << "router," << static_cast<int>(r.x()) << ',' << static_cast<int>(r.y())
           << ",,," << router_links[p] << ',' << state_name(r.port_state(p))
           << '\n';
  for (const auto& s : t.switches)
    for (unsigned g = 0; g < 4; ++g)
      if (all || s.group_state(g) != LinkState::Active)
        os << "ring_switch," << static_cast<int>(s.block_x()) << ','
           << static_cast<int>(s.block_y()) << ',' << static_cast<int>(s.ringlet())
           << ',' << static_cast<int>(s.pe()) << ',' << rs_links[g] << ','
           << state_name(s.group_state(g)) << '\n';
}

int cmd_morph(uint32_t rows, uint32_t cols, uint32_t pes,
              const std::string& plan_file, uint32_t request_pes,
              const std::string& anchor, const std::string& source,
              bool emit_plan, bool dump_all) {
  TopologySpec ts;
  ts.kind = TopologyKind::RingMesh;
  if (rows > 0 && cols > 0) {
    ts.rows = rows;
    ts.cols = cols;
  } else {
    const TopoDims d = ring_dims_for_pes(pes == 0 ? 16 : pes);
    ts.rows = d.rows;
    ts.cols = d.cols;
  }
  validate_spec(ts);

  std::vector<MorphCmd> cmds;
  if (!plan_file.empty()) {
    std::ifstream in(plan_file);
    if (!in) throw ConfigError("cannot open plan file " + plan_file);
    cmds = parse_plan_file(in);
  } else if (request_pes > 0) {
    const NodeAddress a = anchor.empty() ? NodeAddress{} : parse_address(anchor + ".0.0");
    RegionPlan plan = plan_region(ts, request_pes, a.router_x, a.router_y);
    cmds = plan.morphs;
    if (emit_plan) {
      for (const MorphCmd& c : cmds) {
        uint16_t lc = 0;
        for (unsigned g = 0; g < 8; ++g)
          lc |= static_cast<uint16_t>(static_cast<unsigned>(c.payload.link_config[g])
                                      << (2 * g));
        char buf[96];
        std::snprintf(buf, sizeof buf, "dest=%s hl=%u ers=%u lc=%04x pts=%02x",
                      format_address(c.dest).c_str(), c.payload.hierarchy_level,
                      c.payload.execution_region_size, lc,
                      c.payload.pe_type_selector);
        std::cout << buf << '\n';
      }
      return kExitOk;
    }
  } else {
    throw ConfigError("morph needs --plan FILE or --request-pes N");
  }

  SimConfig cfg;
  cfg.topology = ts;
  cfg.traffic.injection_rate = 0.0;
  cfg.total_cycles = 1;
  Engine e(cfg);
  const NodeAddress src_addr = source.empty() ? NodeAddress{} : parse_address(source);
  const GlobalPeIndex src = e.topology().index_of(src_addr);
  uint64_t when = 0;
  for (const MorphCmd& c : cmds) {
    e.schedule_morph(when, src, c);
    when += 4ull * (diameter_hops(ts) + 2);
  }
  const uint64_t deadline = when + 10ull * (diameter_hops(ts) + 2) + 50;
  while (e.cycle() < deadline && (e.outstanding() > 0 || e.cycle() <= when))
    e.step();
  dump_link_states(e.topology(), dump_all, std::cout);
  for (const auto& r : e.topology().routers)
    if (r.region_ers() != 0 || r.region_pts() != 0)
      std::cout << "# region router " << static_cast<int>(r.x()) << ','
                << static_cast<int>(r.y()) << " ers=" << r.region_ers()
                << " pts=" << static_cast<int>(r.region_pts()) << '\n';
  for (const auto& s : e.topology().switches)
    if (s.region_ers() != 0 || s.region_pts() != 0)
      std::cout << "# region rs " << format_address({s.block_x(), s.block_y(),
                                                     s.ringlet(), s.pe()})
                << " ers=" << s.region_ers()
                << " pts=" << static_cast<int>(s.region_pts()) << '\n';
  std::cout << "# morphs_applied=" << cmds.size() - e.morph_errors()
            << " morph_errors=" << e.morph_errors()
            << " marker_overhead_flits=" << cmds.size()
            << " reachable_pes=" << reachable_pes(e.topology(), src) << '\n';
  return kExitOk;
}

int cmd_compare(const std::string& input, bool against_paper) {
  if (!against_paper)
    throw ConfigError("compare currently supports --against-paper only");
  std::vector<RunRow> rows;
  auto consume = [&](std::istream& in) {
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#' || line.rfind("schema_version", 0) == 0)
        continue;
      rows.push_back(parse_csv_row(line));
    }
  };
  if (input.empty() || input == "-") {
    consume(std::cin);
  } else {
    std::ifstream in(input);
    if (!in) throw ConfigError("cannot open " + input);
    consume(in);
  }
  std::cout << compare_csv_header() << '\n';
  for (const CompareRow& c : compare_against_reference(rows))
    std::cout << compare_csv_row(c) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ring-mesh network-on-chip simulator"};
  app.require_subcommand(1);
  app.set_config("--config");
  std::string format = "csv";
  app.add_option("--format", format, "csv|json")
      ->check(CLI::IsMember({"csv", "json"}));

  SimFlags sim;
  CLI::App* simulate = app.add_subcommand("simulate", "run one simulation");
  add_sim_flags(simulate, sim);

  std::string sweep_spec_file;
  bool paper_repro = false;
  unsigned jobs = 0;
  uint64_t cycles_override = 0;
  CLI::App* sweep = app.add_subcommand("sweep", "run a grid of simulations");
  sweep->add_option("--spec", sweep_spec_file, "sweep spec file (key=value)");
  sweep->add_flag("--paper-repro", paper_repro,
                  "bundled full evaluation grid (7 sizes x 3 patterns x 4 rates x 2 topologies)");
  sweep->add_option("--jobs", jobs, "parallel cells (default: hardware threads)");
  sweep->add_option("--cycles", cycles_override, "override cycles per cell");

  uint32_t an_rows = 0, an_cols = 0, an_link_bits = kFlitWireBits;
  std::string an_topology = "ringmesh";
  bool an_extended = false;
  CLI::App* analyze = app.add_subcommand("analyze", "print analytic topology metrics");
  analyze->add_option("--rows", an_rows)->required();
  analyze->add_option("--cols", an_cols)->required();
  analyze->add_option("--topology", an_topology, "ringmesh|flat")
      ->check(CLI::IsMember({"ringmesh", "flat"}));
  analyze->add_option("--link-bits", an_link_bits, "bits per link per cycle");
  analyze->add_flag("--extended", an_extended, "extra metric columns");

  uint32_t mo_rows = 0, mo_cols = 0, mo_pes = 0, mo_request = 0;
  std::string mo_plan, mo_anchor, mo_source;
  bool mo_emit = false, mo_all = false;
  CLI::App* morph = app.add_subcommand("morph", "apply or generate a morph plan");
  morph->add_option("--rows", mo_rows);
  morph->add_option("--cols", mo_cols);
  morph->add_option("--pes", mo_pes);
  morph->add_option("--plan", mo_plan, "plan file: dest=<x.y.r.p> hl= ers= lc= pts=");
  morph->add_option("--request-pes", mo_request, "plan a region of N PEs");
  morph->add_option("--anchor", mo_anchor, "anchor block as x.y");
  morph->add_option("--source", mo_source, "config source PE as x.y.r.p");
  morph->add_flag("--emit-plan", mo_emit, "print the generated plan, do not run");
  morph->add_flag("--all", mo_all, "dump every link state, not only changes");

  std::string cmp_input;
  bool cmp_paper = false;
  CLI::App* compare = app.add_subcommand(
      "compare", "ratio measured results against bundled reference values");
  compare->add_option("--input", cmp_input, "CSV produced by simulate/sweep ('-' = stdin)");
  compare->add_flag("--against-paper", cmp_paper,
                    "compare against the published reference table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp")
      return app.exit(e);
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim, format);
    if (sweep->parsed())
      return cmd_sweep(sweep_spec_file, paper_repro, jobs, cycles_override, format);
    if (analyze->parsed())
      return cmd_analyze(an_rows, an_cols, an_topology, an_link_bits, an_extended,
                         format);
    if (morph->parsed())
      return cmd_morph(mo_rows, mo_cols, mo_pes, mo_plan, mo_request, mo_anchor,
                       mo_source, mo_emit, mo_all);
    if (compare->parsed()) return cmd_compare(cmp_input, cmp_paper);
  } catch (const DeadlockError& e) {
    std::cerr << "deadlock: " << e.what() << '\n';
    return kExitDeadlock;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return kExitConfig;
}
