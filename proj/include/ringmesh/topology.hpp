#pragma once

#include <cstdint>
#include <cstdlib>
#include <vector>

#include "ringmesh/flit.hpp"
#include "ringmesh/ring_switch.hpp"
#include "ringmesh/router.hpp"
#include "ringmesh/wires.hpp"

namespace ringmesh {

enum class TopologyKind : uint8_t { RingMesh, FlatMesh };

struct TopologySpec {
  TopologyKind kind = TopologyKind::RingMesh;
  uint32_t rows = 1;  // routers in Y
  uint32_t cols = 1;  // routers in X
  uint32_t link_bandwidth_bits = kFlitWireBits;  // b_l
  RouterParams router;
  RsParams rs;
};

inline void validate_spec(const TopologySpec& s) {
  if (s.rows < 1 || s.cols < 1)
    throw ConfigError("topology: rows and cols must be >= 1");
  if (s.kind == TopologyKind::RingMesh && (s.rows > 8 || s.cols > 8))
    throw ConfigError("topology: ring-mesh capped at 8x8 routers (3-bit coordinates)");
  if (s.kind == TopologyKind::FlatMesh && (s.rows > 64 || s.cols > 64))
    throw ConfigError("topology: flat mesh capped at 64x64 routers");
}

// ---------------------------------------------------------------------------
// Analytic metrics
// ---------------------------------------------------------------------------

// Worst-case shortest path in link traversals. The ring-mesh adds 6 to the
// mesh distance: two links inside each end's ringlet plus the link joining
// each ring to its router.
inline uint32_t diameter_hops(const TopologySpec& s) {
  const uint32_t mesh = (s.rows - 1) + (s.cols - 1);
  return s.kind == TopologyKind::RingMesh ? mesh + 6 : mesh;
}

struct BisectionMetrics {
  uint32_t bits_per_cycle = 0;  // min(N_R, N_C) * b_l with N read as hop counts
  bool degenerate = false;      // 1xN meshes make the formula collapse to 0
  uint32_t router_crossbar_half_bits = 0;  // block-level beta
  uint32_t textbook_bits_per_cycle = 0;    // min(rows, cols) * b_l (cut links)
};

inline BisectionMetrics bisection_bandwidth(const TopologySpec& s) {
  BisectionMetrics m;
  const uint32_t nr = s.rows - 1, nc = s.cols - 1;
  m.bits_per_cycle = (nr < nc ? nr : nc) * s.link_bandwidth_bits;
  m.degenerate = m.bits_per_cycle == 0;
  m.router_crossbar_half_bits = 8 * s.link_bandwidth_bits / 2;
  m.textbook_bits_per_cycle =
      (s.rows < s.cols ? s.rows : s.cols) * s.link_bandwidth_bits;
  return m;
}

inline uint32_t ring_distance(uint8_t a, uint8_t b) {
  const uint32_t cw = (b - a) & 3, ccw = (a - b) & 3;
  return cw < ccw ? cw : ccw;
}

// Minimal link count between two PEs on an idle network: ring traversal at
// each end (shorter direction), one link to/from each master, XY hops between.
inline uint32_t zero_load_hops(const TopologySpec& s, const NodeAddress& src,
                               const NodeAddress& dst) {
  if (src == dst) throw ConfigError("zero_load_hops: src == dst");
  if (src.router_x >= s.cols || src.router_y >= s.rows ||
      dst.router_x >= s.cols || dst.router_y >= s.rows)
    throw ConfigError("zero_load_hops: address outside topology");
  const uint32_t dx = static_cast<uint32_t>(
      std::abs(static_cast<int>(src.router_x) - static_cast<int>(dst.router_x)));
  const uint32_t dy = static_cast<uint32_t>(
      std::abs(static_cast<int>(src.router_y) - static_cast<int>(dst.router_y)));
  if (s.kind == TopologyKind::FlatMesh) return dx + dy;
  if (dx == 0 && dy == 0 && src.ringlet == dst.ringlet)
    return ring_distance(src.pe, dst.pe);
  return ring_distance(src.pe, 0) + 1 + dx + dy + 1 + ring_distance(0, dst.pe);
}

// ---------------------------------------------------------------------------
// Built network
// ---------------------------------------------------------------------------

class Topology {
 public:
  TopologySpec spec;
  std::vector<MeshRouter> routers;
  std::vector<RingSwitch> switches;
  std::vector<Link> links;

  TopoDims dims() const { return {spec.rows, spec.cols}; }
  bool is_ring_mesh() const { return spec.kind == TopologyKind::RingMesh; }
  uint32_t router_count() const { return spec.rows * spec.cols; }
  uint32_t ringlet_count() const {
    return is_ring_mesh() ? 4 * router_count() : 0;
  }
  uint32_t pe_count() const {
    return is_ring_mesh() ? 16 * router_count() : router_count();
  }

  uint32_t router_index(uint32_t x, uint32_t y) const { return y * spec.cols + x; }
  uint32_t rs_index(uint32_t x, uint32_t y, uint32_t ringlet, uint32_t pe) const {
    return (router_index(x, y) * 4 + ringlet) * 4 + pe;
  }

  NodeAddress address_of(GlobalPeIndex idx) const {
    if (idx >= pe_count()) throw ConfigError("address_of: index out of range");
    if (is_ring_mesh()) return index_to_address(idx, dims());
    NodeAddress a;
    a.router_x = static_cast<uint8_t>(idx % spec.cols);
    a.router_y = static_cast<uint8_t>(idx / spec.cols);
    return a;
  }

  GlobalPeIndex index_of(const NodeAddress& a) const {
    if (is_ring_mesh()) return address_to_index(a, dims());
    if (a.router_x >= spec.cols || a.router_y >= spec.rows)
      throw ConfigError("index_of: address outside topology");
    return a.router_y * spec.cols + a.router_x;
  }

  LinkState in_port_state(const PortRef& p) const {
    if (p.comp.kind == CompKind::Router)
      return routers[p.comp.index].port_state(p.port);
    const RingSwitch& rs = switches[p.comp.index];
    switch (p.port) {
      case RingSwitch::kInCw: return rs.group_state(kLcRingCw);
      case RingSwitch::kInCcw: return rs.group_state(kLcRingCcw);
      default: return rs.group_state(kLcRouter);
    }
  }

  // Follow bypass splices from a link's nominal destination to the component
  // input that actually latches the flit, or to a drop.
  void resolve_sinks() {
    for (Link& l : links) {
      PortRef cur = l.dst;
      l.sink_drop = false;
      int steps = 0;
      for (;;) {
        const LinkState st = in_port_state(cur);
        if (st == LinkState::SwitchedOff) {
          l.sink_drop = true;
          break;
        }
        if (st == LinkState::Active) {
          l.sink = cur;
          break;
        }
        // Bypassed input: continue through the straight-through output.
        LinkId next = kNoLink;
        if (cur.comp.kind == CompKind::Router) {
          const MeshRouter& r = routers[cur.comp.index];
          const int opp = MeshRouter::opposite(cur.port);
          if (opp >= 0 && r.port_state(opp) != LinkState::SwitchedOff)
            next = r.out_link(opp);
        } else {
          const RingSwitch& rs = switches[cur.comp.index];
          next = cur.port == RingSwitch::kInCw ? rs.cw_out_link
                 : cur.port == RingSwitch::kInCcw ? rs.ccw_out_link
                                                  : kNoLink;
        }
        // A splice into a missing output or a splice loop sinks the traffic.
        if (next == kNoLink || ++steps > 64) {
          l.sink_drop = true;
          break;
        }
        cur = links[static_cast<std::size_t>(next)].dst;
      }
    }
  }

  uint64_t count_flits() const {
    uint64_t n = 0;
    for (const auto& r : routers) n += r.count_flits();
    for (const auto& s : switches) n += s.count_flits();
    for (const auto& l : links) n += l.has_flit ? 1 : 0;
    return n;
  }

  uint64_t state_signature() const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& r : routers) h = fnv1a_mix(h, r.state_signature());
    for (const auto& s : switches) h = fnv1a_mix(h, s.state_signature());
    return h;
  }
};

inline Topology build_ring_mesh(const TopologySpec& spec) {
  if (spec.kind != TopologyKind::RingMesh)
    throw ConfigError("build_ring_mesh: spec.kind must be RingMesh");
  validate_spec(spec);
  Topology t;
  t.spec = spec;

  for (uint32_t y = 0; y < spec.rows; ++y)
    for (uint32_t x = 0; x < spec.cols; ++x) {
      t.routers.emplace_back(false, static_cast<uint8_t>(x),
                             static_cast<uint8_t>(y), spec.router);
      t.routers.back().self_index_ = t.router_index(x, y);
    }

  for (uint32_t y = 0; y < spec.rows; ++y)
    for (uint32_t x = 0; x < spec.cols; ++x)
      for (uint32_t g = 0; g < 4; ++g)
        for (uint32_t p = 0; p < 4; ++p) {
          t.switches.emplace_back(static_cast<uint8_t>(x), static_cast<uint8_t>(y),
                                  static_cast<uint8_t>(g), static_cast<uint8_t>(p),
                                  spec.rs);
          t.switches.back().self_index_ = t.rs_index(x, y, g, p);
        }

  auto add_link = [&](PortRef src, PortRef dst) {
    Link l;
    l.src = src;
    l.dst = dst;
    t.links.push_back(l);
    return static_cast<LinkId>(t.links.size() - 1);
  };

  // Mesh channels.
  for (uint32_t y = 0; y < spec.rows; ++y)
    for (uint32_t x = 0; x < spec.cols; ++x) {
      const uint32_t i = t.router_index(x, y);
      if (x + 1 < spec.cols) {
        const uint32_t j = t.router_index(x + 1, y);
        LinkId e = add_link({{CompKind::Router, i}, MeshRouter::kPortE},
                            {{CompKind::Router, j}, MeshRouter::kPortW});
        t.routers[i].set_out_link(MeshRouter::kPortE, e);
        t.routers[j].set_in_link(MeshRouter::kPortW, e);
        LinkId w = add_link({{CompKind::Router, j}, MeshRouter::kPortW},
                            {{CompKind::Router, i}, MeshRouter::kPortE});
        t.routers[j].set_out_link(MeshRouter::kPortW, w);
        t.routers[i].set_in_link(MeshRouter::kPortE, w);
      }
      if (y + 1 < spec.rows) {
        const uint32_t j = t.router_index(x, y + 1);
        LinkId s = add_link({{CompKind::Router, i}, MeshRouter::kPortS},
                            {{CompKind::Router, j}, MeshRouter::kPortN});
        t.routers[i].set_out_link(MeshRouter::kPortS, s);
        t.routers[j].set_in_link(MeshRouter::kPortN, s);
        LinkId n = add_link({{CompKind::Router, j}, MeshRouter::kPortN},
                            {{CompKind::Router, i}, MeshRouter::kPortS});
        t.routers[j].set_out_link(MeshRouter::kPortN, n);
        t.routers[i].set_in_link(MeshRouter::kPortS, n);
      }
    }

  // Ringlets: bidirectional 4-rings plus the master/router channel pair.
  for (uint32_t y = 0; y < spec.rows; ++y)
    for (uint32_t x = 0; x < spec.cols; ++x) {
      const uint32_t ri = t.router_index(x, y);
      for (uint32_t g = 0; g < 4; ++g) {
        for (uint32_t p = 0; p < 4; ++p) {
          const uint32_t a = t.rs_index(x, y, g, p);
          const uint32_t b = t.rs_index(x, y, g, (p + 1) % 4);
          LinkId cw = add_link({{CompKind::RingSwitch, a}, RingSwitch::kOutCw},
                               {{CompKind::RingSwitch, b}, RingSwitch::kInCw});
          t.switches[a].cw_out_link = cw;
          t.switches[b].cw_in_link = cw;
          LinkId ccw = add_link({{CompKind::RingSwitch, b}, RingSwitch::kOutCcw},
                                {{CompKind::RingSwitch, a}, RingSwitch::kInCcw});
          t.switches[b].ccw_out_link = ccw;
          t.switches[a].ccw_in_link = ccw;
        }
        const uint32_t master = t.rs_index(x, y, g, 0);
        const auto rport = static_cast<uint8_t>(MeshRouter::kPortR0 + g);
        LinkId down = add_link({{CompKind::Router, ri}, rport},
                               {{CompKind::RingSwitch, master}, RingSwitch::kInRouter});
        t.routers[ri].set_out_link(rport, down);
        t.switches[master].rtr_in_link = down;
        LinkId up = add_link({{CompKind::RingSwitch, master}, RingSwitch::kOutRouter},
                             {{CompKind::Router, ri}, rport});
        t.switches[master].rtr_out_link = up;
        t.routers[ri].set_in_link(rport, up);
      }
    }

  t.resolve_sinks();
  return t;
}

inline Topology build_flat_mesh(const TopologySpec& spec) {
  if (spec.kind != TopologyKind::FlatMesh)
    throw ConfigError("build_flat_mesh: spec.kind must be FlatMesh");
  validate_spec(spec);
  Topology t;
  t.spec = spec;
  for (uint32_t y = 0; y < spec.rows; ++y)
    for (uint32_t x = 0; x < spec.cols; ++x) {
      t.routers.emplace_back(true, static_cast<uint8_t>(x),
                             static_cast<uint8_t>(y), spec.router);
      t.routers.back().self_index_ = t.router_index(x, y);
    }
  auto add_link = [&](PortRef src, PortRef dst) {
    Link l;
    l.src = src;
    l.dst = dst;
    t.links.push_back(l);
    return static_cast<LinkId>(t.links.size() - 1);
  };
  for (uint32_t y = 0; y < spec.rows; ++y)
    for (uint32_t x = 0; x < spec.cols; ++x) {
      const uint32_t i = t.router_index(x, y);
      if (x + 1 < spec.cols) {
        const uint32_t j = t.router_index(x + 1, y);
        LinkId e = add_link({{CompKind::Router, i}, MeshRouter::kPortE},
                            {{CompKind::Router, j}, MeshRouter::kPortW});
        t.routers[i].set_out_link(MeshRouter::kPortE, e);
        t.routers[j].set_in_link(MeshRouter::kPortW, e);
        LinkId w = add_link({{CompKind::Router, j}, MeshRouter::kPortW},
                            {{CompKind::Router, i}, MeshRouter::kPortE});
        t.routers[j].set_out_link(MeshRouter::kPortW, w);
        t.routers[i].set_in_link(MeshRouter::kPortE, w);
      }
      if (y + 1 < spec.rows) {
        const uint32_t j = t.router_index(x, y + 1);
        LinkId s = add_link({{CompKind::Router, i}, MeshRouter::kPortS},
                            {{CompKind::Router, j}, MeshRouter::kPortN});
        t.routers[i].set_out_link(MeshRouter::kPortS, s);
        t.routers[j].set_in_link(MeshRouter::kPortN, s);
        LinkId n = add_link({{CompKind::Router, j}, MeshRouter::kPortN},
                            {{CompKind::Router, i}, MeshRouter::kPortS});
        t.routers[j].set_out_link(MeshRouter::kPortN, n);
        t.routers[i].set_in_link(MeshRouter::kPortS, n);
      }
    }
  t.resolve_sinks();
  return t;
}

inline Topology build_topology(const TopologySpec& spec) {
  return spec.kind == TopologyKind::RingMesh ? build_ring_mesh(spec)
                                             : build_flat_mesh(spec);
}

// Most-square router grid for a PE count (wider-than-tall on ties), used by
// the --pes convenience flag and the sweep driver.
inline TopoDims ring_dims_for_pes(uint32_t pes) {
  if (pes == 0 || pes % 16 != 0)
    throw ConfigError("ring-mesh PE count must be a positive multiple of 16");
  const uint32_t blocks = pes / 16;
  uint32_t rows = 1;
  for (uint32_t r = 1; r * r <= blocks; ++r)
    if (blocks % r == 0) rows = r;
  const uint32_t cols = blocks / rows;
  if (rows > 8 || cols > 8)
    throw ConfigError("ring-mesh PE count exceeds the 8x8 router cap");
  return {rows, cols};
}

inline TopoDims flat_dims_for_pes(uint32_t pes) {
  if (pes == 0) throw ConfigError("flat mesh PE count must be positive");
  uint32_t rows = 1;
  for (uint32_t r = 1; r * r <= pes; ++r)
    if (pes % r == 0) rows = r;
  const uint32_t cols = pes / rows;
  if (rows > 64 || cols > 64)
    throw ConfigError("flat mesh PE count exceeds the 64x64 router cap");
  return {rows, cols};
}

}  // namespace ringmesh
