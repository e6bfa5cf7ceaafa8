#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "ringmesh/morph.hpp"
#include "ringmesh/topology.hpp"
#include "ringmesh/traffic.hpp"

namespace ringmesh {

enum class TraceLevel : uint8_t { Off, PerPacket, PerCycle };
enum class LatencyMode : uint8_t { FromIntendedInjection, FromNetworkEntry };

struct SimConfig {
  TopologySpec topology;
  TrafficConfig traffic;
  uint64_t total_cycles = 10000;
  uint64_t warmup_cycles = UINT64_MAX;  // resolved to total/10 when left unset
  bool drain = false;
  TraceLevel trace_level = TraceLevel::Off;
  LatencyMode latency_mode = LatencyMode::FromIntendedInjection;
  bool check_conservation = true;
  uint64_t order_shuffle_seed = 0;  // 0 keeps the natural component order
  uint64_t drain_timeout_cap = 1000000;

  uint64_t effective_warmup() const {
    if (warmup_cycles != UINT64_MAX) return warmup_cycles;
    return total_cycles / 10;
  }
};

struct PacketTrace {
  uint64_t packet_id = 0;
  NodeAddress src, dst;
  uint64_t inject_cycle = 0;
  uint64_t deliver_cycle = 0;
  uint32_t hops = 0;

  bool operator==(const PacketTrace&) const = default;
};

struct SimStats {
  uint64_t injected_flits = 0;
  uint64_t delivered_flits = 0;        // data wire flits that reached their PE
  uint64_t consumed_config_flits = 0;  // marker+config flits absorbed by FSMs
  uint64_t dropped_flits = 0;
  uint64_t delivered_packets = 0;      // logical data packets handed to PEs
  uint64_t skipped_self = 0;
  uint64_t skipped_backpressure = 0;
  uint64_t skipped_disabled = 0;
  uint64_t morph_errors = 0;
  uint64_t in_flight_end = 0;
  uint64_t in_flight_max = 0;
  uint64_t cycles_run = 0;
  uint64_t measured_packets = 0;  // deliveries injected after warm-up
  std::optional<double> avg_latency_cycles;
  std::optional<double> p99_latency_cycles;
  double throughput_pkts_per_cycle = 0.0;
  std::vector<uint32_t> delivered_per_cycle;
  std::vector<uint64_t> latency_histogram;
  std::vector<PacketTrace> packet_traces;

  bool operator==(const SimStats&) const = default;
};

class Engine {
 public:
  explicit Engine(const SimConfig& cfg)
      : cfg_(cfg),
        topo_(build_topology(cfg.topology)),
        gen_(cfg.traffic, topo_.pe_count()),
        warmup_(cfg.effective_warmup()),
        pes_(topo_.pe_count()) {
    if (cfg_.total_cycles > 0 && warmup_ >= cfg_.total_cycles && cfg_.total_cycles > 1)
      throw ConfigError("warmup_cycles must be below total_cycles");
    if (topo_.is_ring_mesh()) {
      rs_of_pe_.resize(topo_.pe_count());
      for (GlobalPeIndex i = 0; i < topo_.pe_count(); ++i) {
        const NodeAddress a = topo_.address_of(i);
        rs_of_pe_[i] = topo_.rs_index(a.router_x, a.router_y, a.ringlet, a.pe);
      }
    }
    order_.reserve(topo_.routers.size() + topo_.switches.size());
    for (uint32_t i = 0; i < topo_.routers.size(); ++i)
      order_.push_back({CompKind::Router, i});
    for (uint32_t i = 0; i < topo_.switches.size(); ++i)
      order_.push_back({CompKind::RingSwitch, i});
    if (cfg_.order_shuffle_seed != 0) {
      std::mt19937_64 rng(cfg_.order_shuffle_seed);
      std::shuffle(order_.begin(), order_.end(), rng);
    }
  }

  Topology& topology() { return topo_; }
  const Topology& topology() const { return topo_; }
  uint64_t cycle() const { return cycle_; }
  uint64_t in_flight() const {
    return injected_flits_ - delivered_flits_ - consumed_config_flits_ -
           dropped_flits_;
  }
  uint64_t outstanding() const {
    uint64_t pending = 0;
    for (const auto& pe : pes_) pending += pe.pending.size();
    return in_flight() + pending;
  }
  void set_trace_stream(std::ostream* os) { trace_out_ = os; }

  // Queue a logical payload for injection by PE `src` at `when` (escape
  // encoding applied). Used by tests, zero-load probes and morph plans.
  void schedule_injection(uint64_t when, GlobalPeIndex src, NodeAddress dst,
                          LogicalPayload payload,
                          std::optional<uint8_t> vc = std::nullopt) {
    if (src >= topo_.pe_count())
      throw ConfigError("schedule_injection: source out of range");
    (void)topo_.index_of(dst);
    Scheduled s;
    s.when = when;
    s.src = src;
    s.dst = dst;
    s.payload = payload;
    s.vc = vc;
    scheduled_.push_back(s);
    std::stable_sort(scheduled_.begin(), scheduled_.end(),
                     [](const Scheduled& a, const Scheduled& b) {
                       return a.when < b.when;
                     });
  }

  void schedule_morph(uint64_t when, GlobalPeIndex src, const MorphCmd& cmd) {
    schedule_injection(when, src, cmd.dest,
                       {LogicalPayload::Kind::Config, encode_morph(cmd.payload)},
                        0);
  }

  // One synchronous network cycle: injection, acceptance publication, all
  // component ticks (order-insensitive), link commits, event collection,
  // morph application, conservation audit.
  void step() {
    this_cycle_delivered_ = 0;
    inject_phase();
    publish_acceptance();
    for (const CompRef& c : order_) {
      if (c.kind == CompKind::Router)
        topo_.routers[c.index].tick(cycle_, topo_.links);
      else
        topo_.switches[c.index].tick(cycle_, topo_.links);
    }
    transfer_phase();
    collect_events();
    apply_pending_morphs();
    if (cfg_.check_conservation) audit_conservation();
    const uint64_t fl = in_flight();
    if (fl > in_flight_max_) in_flight_max_ = fl;
    delivered_per_cycle_.push_back(this_cycle_delivered_);
    if (cfg_.trace_level == TraceLevel::PerCycle && trace_out_)
      (*trace_out_) << cycle_ << ',' << injected_flits_ << ','
                    << delivered_packets_ << ',' << fl << '\n';
    ++cycle_;
  }

  // Full measurement protocol: warm-up + measurement window with synthetic
  // traffic, optional drain, frozen statistics.
  SimStats run() {
    gen_enabled_ = true;
    for (uint64_t i = 0; i < cfg_.total_cycles; ++i) step();
    gen_enabled_ = false;
    if (cfg_.drain) {
      uint64_t budget = std::min<uint64_t>(
          cfg_.drain_timeout_cap,
          10ull * diameter_hops(cfg_.topology) * std::max<uint64_t>(outstanding(), 1) +
              1000);
      while (outstanding() > 0 && budget > 0) {
        step();
        --budget;
      }
      if (outstanding() > 0) throw DeadlockError(describe_stuck());
    }
    return finalize();
  }

  struct ZeroLoadResult {
    bool delivered = false;
    bool dropped = false;
    uint64_t latency = 0;
  };

  // Inject one probe packet into an otherwise idle network and count cycles
  // from injection to delivery at the destination switch.
  ZeroLoadResult measure_zero_load_latency(const NodeAddress& src,
                                           const NodeAddress& dst) {
    if (src == dst)
      throw ConfigError("measure_zero_load_latency: src == dst");
    const GlobalPeIndex si = topo_.index_of(src);
    uint8_t vc = topo_.is_ring_mesh() ? vc_for_destination(dst.pe)
                                      : static_cast<uint8_t>(topo_.index_of(dst) & 1);
    schedule_injection(cycle_, si, dst,
                       {LogicalPayload::Kind::Data, probe_payload_++}, vc);
    const uint64_t before_pkts = delivered_packets_;
    const uint64_t before_drops = dropped_flits_;
    const uint64_t bound = cycle_ + 10ull * (diameter_hops(cfg_.topology) + 2) + 200;
    while (cycle_ < bound) {
      step();
      if (delivered_packets_ > before_pkts)
        return {true, false, last_delivery_latency_};
      if (dropped_flits_ > before_drops) return {false, true, 0};
    }
    return {false, false, 0};
  }

  SimStats finalize() {
    SimStats s;
    s.injected_flits = injected_flits_;
    s.delivered_flits = delivered_flits_;
    s.consumed_config_flits = consumed_config_flits_;
    s.dropped_flits = dropped_flits_;
    s.delivered_packets = delivered_packets_;
    s.skipped_self = skipped_self_;
    s.skipped_backpressure = skipped_backpressure_;
    s.skipped_disabled = skipped_disabled_;
    s.morph_errors = morph_errors_;
    s.in_flight_end = in_flight();
    s.in_flight_max = in_flight_max_;
    s.cycles_run = cycle_;
    s.measured_packets = measured_packets_;
    s.delivered_per_cycle = delivered_per_cycle_;
    s.latency_histogram = latency_histogram_;
    s.packet_traces = traces_;
    if (measured_packets_ > 0) {
      s.avg_latency_cycles = static_cast<double>(latency_sum_) /
                             static_cast<double>(measured_packets_);
      const uint64_t target =
          (99 * measured_packets_ + 99) / 100;  // ceil(0.99 * n)
      uint64_t cum = 0;
      for (std::size_t l = 0; l < latency_histogram_.size(); ++l) {
        cum += latency_histogram_[l];
        if (cum >= target) {
          s.p99_latency_cycles = static_cast<double>(l);
          break;
        }
      }
    }
    const uint64_t total = cfg_.total_cycles;
    if (total > warmup_ && delivered_per_cycle_.size() >= total) {
      uint64_t meas = 0;
      for (uint64_t c = warmup_; c < total; ++c) meas += delivered_per_cycle_[c];
      s.throughput_pkts_per_cycle =
          static_cast<double>(meas) / static_cast<double>(total - warmup_);
    }
    return s;
  }

  uint64_t state_signature() const {
    uint64_t h = topo_.state_signature();
    h = fnv1a_mix(h, cycle_);
    h = fnv1a_mix(h, injected_flits_);
    h = fnv1a_mix(h, delivered_flits_);
    h = fnv1a_mix(h, dropped_flits_);
    for (const auto& pe : pes_)
      for (const auto& f : pe.pending) h = fnv1a_mix(h, flit_signature(f));
    return h;
  }

  // Running counters (tests & acceptance probes).
  uint64_t injected_flits() const { return injected_flits_; }
  uint64_t delivered_packets() const { return delivered_packets_; }
  uint64_t dropped_flits() const { return dropped_flits_; }
  uint64_t morph_errors() const { return morph_errors_; }
  uint64_t last_delivery_latency() const { return last_delivery_latency_; }
  const std::vector<uint32_t>& delivered_per_cycle() const {
    return delivered_per_cycle_;
  }

 private:
  struct PeState {
    std::deque<Flit> pending;
  };
  struct Scheduled {
    uint64_t when = 0;
    GlobalPeIndex src = 0;
    NodeAddress dst;
    LogicalPayload payload;
    std::optional<uint8_t> vc;
  };

  uint8_t data_vc_for(const NodeAddress& dst) const {
    if (topo_.is_ring_mesh()) return vc_for_destination(dst.pe);
    return static_cast<uint8_t>(topo_.index_of(dst) & 1);
  }

  void enqueue_logical(PeState& ps, GlobalPeIndex src, const NodeAddress& dst,
                       const LogicalPayload& lp, std::optional<uint8_t> vc) {
    const std::vector<uint32_t> wire = escape_encode({lp});
    const uint8_t use_vc = vc ? *vc
                              : (lp.kind == LogicalPayload::Kind::Config
                                     ? 0  // configuration traffic rides VC-0
                                     : data_vc_for(dst));
    for (uint32_t w : wire) {
      Flit f;
      f.header.dest = dst;
      f.header.vc_select = use_vc;
      f.payload = w;
      f.packet_id = next_packet_id_++;
      f.inject_cycle = cycle_;
      f.source = topo_.address_of(src);
      ps.pending.push_back(f);
    }
  }

  void inject_phase() {
    while (sched_next_ < scheduled_.size() &&
           scheduled_[sched_next_].when <= cycle_) {
      const Scheduled& sc = scheduled_[sched_next_];
      enqueue_logical(pes_[sc.src], sc.src, sc.dst, sc.payload, sc.vc);
      ++sched_next_;
    }
    if (gen_enabled_) {
      for (uint32_t src : gen_.injectors_for_cycle()) {
        PeState& ps = pes_[src];
        if (!pe_enabled(src)) {
          ++skipped_disabled_;
          continue;
        }
        if (!ps.pending.empty()) {
          ++skipped_backpressure_;  // source back-pressured: skip this cycle
          continue;
        }
        const auto dst = gen_.dest_for(src);
        if (!dst) {
          ++skipped_self_;
          continue;
        }
        enqueue_logical(ps, src, topo_.address_of(*dst),
                        {LogicalPayload::Kind::Data, gen_.payload_for(src)},
                        std::nullopt);
      }
    }
    // Move pending flits into the network, one per PE per cycle.
    for (GlobalPeIndex i = 0; i < pes_.size(); ++i) {
      PeState& ps = pes_[i];
      if (ps.pending.empty()) continue;
      Flit& f = ps.pending.front();
      if (topo_.is_ring_mesh()) {
        RingSwitch& rs = topo_.switches[rs_of_pe_[i]];
        if (!rs.pe_can_inject()) continue;
        f.entry_cycle = cycle_;
        rs.pe_inject(f);
      } else {
        MeshRouter& r = topo_.routers[i];
        if (!r.local_latch_free() ||
            !r.can_accept(MeshRouter::kPortLocal, f.header.vc_select))
          continue;
        f.entry_cycle = cycle_;
        r.receive(MeshRouter::kPortLocal, f);
      }
      ++injected_flits_;
      ps.pending.pop_front();
    }
  }

  bool pe_enabled(GlobalPeIndex i) const {
    if (!topo_.is_ring_mesh()) return true;
    return topo_.switches[rs_of_pe_[i]].group_state(kLcPe) == LinkState::Active;
  }

  void publish_acceptance() {
    for (Link& l : topo_.links) {
      if (l.sink_drop) {
        l.accept[0] = l.accept[1] = true;  // switched-off channels swallow
        continue;
      }
      if (l.sink.comp.kind == CompKind::Router) {
        const MeshRouter& r = topo_.routers[l.sink.comp.index];
        l.accept[0] = r.can_accept(l.sink.port, 0);
        l.accept[1] = r.can_accept(l.sink.port, 1);
      } else {
        const RingSwitch& rs = topo_.switches[l.sink.comp.index];
        l.accept[0] = rs.can_accept(l.sink.port, 0);
        l.accept[1] = rs.can_accept(l.sink.port, 1);
      }
    }
  }

  void transfer_phase() {
    for (Link& l : topo_.links) {
      if (!l.has_flit) continue;
      l.has_flit = false;
      if (l.sink_drop) {
        ++dropped_flits_;
        continue;
      }
      ++l.flit.hops;
      if (l.sink.comp.kind == CompKind::Router)
        topo_.routers[l.sink.comp.index].receive(l.sink.port, l.flit);
      else
        topo_.switches[l.sink.comp.index].receive(l.sink.port, l.flit);
    }
  }

  void collect_from(CycleEvents& ev) {
    for (const Delivery& d : ev.deliveries) {
      delivered_flits_ += d.merged ? 2 : 1;
      ++delivered_packets_;
      ++this_cycle_delivered_;
      const uint64_t base = cfg_.latency_mode == LatencyMode::FromNetworkEntry
                                ? d.flit.entry_cycle
                                : d.flit.inject_cycle;
      const uint64_t lat = cycle_ - base;
      last_delivery_latency_ = lat;
      if (d.flit.inject_cycle >= warmup_) {
        if (latency_histogram_.size() <= lat) latency_histogram_.resize(lat + 1, 0);
        ++latency_histogram_[lat];
        latency_sum_ += lat;
        ++measured_packets_;
      }
      if (cfg_.trace_level == TraceLevel::PerPacket)
        traces_.push_back({d.flit.packet_id, d.flit.source, d.flit.header.dest,
                           d.flit.inject_cycle, cycle_, d.flit.hops});
    }
    for (const MorphEventRec& m : ev.morphs) pending_morphs_.push_back(m);
    consumed_config_flits_ += ev.consumed_config_flits;
    dropped_flits_ += ev.dropped;
    ev.clear();
  }

  void collect_events() {
    for (auto& r : topo_.routers) collect_from(r.events());
    for (auto& s : topo_.switches) collect_from(s.events());
  }

  void apply_pending_morphs() {
    for (const MorphEventRec& m : pending_morphs_) {
      try {
        if (m.consumer.kind == CompKind::RingSwitch) {
          const RingSwitch& rs = topo_.switches[m.consumer.index];
          if (m.payload.hierarchy_level == 0) {
            dropped_flits_ +=
                apply_morph_to_switch(topo_, m.consumer.index, m.payload).dropped;
          } else if (rs.is_master()) {
            const uint32_t ri = topo_.router_index(rs.block_x(), rs.block_y());
            dropped_flits_ += apply_morph_to_router(topo_, ri, m.payload).dropped;
          } else {
            ++morph_errors_;  // HL=1 must land on a master switch
          }
        } else {
          if (m.payload.hierarchy_level == 1)
            dropped_flits_ +=
                apply_morph_to_router(topo_, m.consumer.index, m.payload).dropped;
          else
            ++morph_errors_;  // no ring switches in the flat mesh
        }
      } catch (const ConfigError&) {
        ++morph_errors_;
      }
    }
    pending_morphs_.clear();
  }

  void audit_conservation() {
    const uint64_t census = topo_.count_flits();
    if (census != in_flight())
      throw std::logic_error(
          "conservation violated at cycle " + std::to_string(cycle_) +
          ": census " + std::to_string(census) + " vs counters " +
          std::to_string(in_flight()));
  }

  std::string describe_stuck() const {
    std::string msg = "drain timeout with " + std::to_string(outstanding()) +
                      " packets outstanding at cycle " + std::to_string(cycle_);
    int listed = 0;
    for (uint32_t i = 0; i < topo_.switches.size() && listed < 8; ++i)
      if (topo_.switches[i].count_flits() > 0) {
        msg += "; rs " + std::to_string(i);
        ++listed;
      }
    for (uint32_t i = 0; i < topo_.routers.size() && listed < 8; ++i)
      if (topo_.routers[i].count_flits() > 0) {
        msg += "; router " + std::to_string(i);
        ++listed;
      }
    return msg;
  }

  SimConfig cfg_;
  Topology topo_;
  TrafficGen gen_;
  uint64_t warmup_ = 0;
  std::vector<PeState> pes_;
  std::vector<uint32_t> rs_of_pe_;
  std::vector<CompRef> order_;
  std::vector<Scheduled> scheduled_;
  std::size_t sched_next_ = 0;
  std::vector<MorphEventRec> pending_morphs_;

  bool gen_enabled_ = false;
  uint64_t cycle_ = 0;
  uint64_t next_packet_id_ = 1;
  uint32_t probe_payload_ = 1;

  uint64_t injected_flits_ = 0;
  uint64_t delivered_flits_ = 0;
  uint64_t consumed_config_flits_ = 0;
  uint64_t dropped_flits_ = 0;
  uint64_t delivered_packets_ = 0;
  uint64_t skipped_self_ = 0;
  uint64_t skipped_backpressure_ = 0;
  uint64_t skipped_disabled_ = 0;
  uint64_t morph_errors_ = 0;
  uint64_t in_flight_max_ = 0;
  uint64_t measured_packets_ = 0;
  uint64_t latency_sum_ = 0;
  uint64_t last_delivery_latency_ = 0;
  uint32_t this_cycle_delivered_ = 0;
  std::vector<uint32_t> delivered_per_cycle_;
  std::vector<uint64_t> latency_histogram_;
  std::vector<PacketTrace> traces_;
  std::ostream* trace_out_ = nullptr;
};

// Convenience wrapper matching the one-shot run contract.
inline SimStats run(const SimConfig& cfg) {
  Engine e(cfg);
  return e.run();
}

}  // namespace ringmesh
