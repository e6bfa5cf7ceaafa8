#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <utility>
#include <deque>
#include <vector>

#include "ringmesh/morph_payload.hpp"
#include "ringmesh/topology.hpp"

namespace ringmesh {

struct ApplyResult {
  uint64_t dropped = 0;  // flits lost to a switched-off channel mid-hop
};

inline LinkState to_link_state(LinkState2b s) {
  switch (s) {
    case LinkState2b::Active: return LinkState::Active;
    case LinkState2b::Bypass: return LinkState::Bypass;
    case LinkState2b::SwitchOff: return LinkState::SwitchedOff;
    case LinkState2b::NoChange: break;
  }
  return LinkState::Active;
}

// Apply a router-targeted configuration (HL=1). Link groups are
// N,S,E,W,Ringlet0..3; bypass is defined only for the geometric mesh pairs.
inline ApplyResult apply_morph_to_router(Topology& t, uint32_t router_idx,
                                         const MorphPayload& m) {
  if (m.hierarchy_level != 1)
    throw ConfigError("apply_morph: HL=0 payload aimed at a mesh router");
  MeshRouter& r = t.routers[router_idx];
  for (unsigned g = 0; g < 8; ++g) {
    if (m.link_config[g] == LinkState2b::NoChange) continue;
    if (static_cast<int>(g) >= r.port_count())
      throw ConfigError("apply_morph: link group beyond the router's ports");
    if (m.link_config[g] == LinkState2b::Bypass && g > kLcWest)
      throw ConfigError("apply_morph: bypass is only defined for mesh channels");
  }
  ApplyResult res;
  for (unsigned g = 0; g < 8; ++g) {
    if (m.link_config[g] == LinkState2b::NoChange) continue;
    res.dropped += r.set_port_state(static_cast<int>(g),
                                    to_link_state(m.link_config[g]));
  }
  r.set_region_meta(m.execution_region_size, m.pe_type_selector);
  t.resolve_sinks();
  return res;
}

// Apply a ring-switch-targeted configuration (HL=0). Link groups are
// ring-CW, ring-CCW, PE, router; groups 4..7 must be NoChange, bypass is
// defined only for the ring directions, and only the master has a router link.
inline ApplyResult apply_morph_to_switch(Topology& t, uint32_t rs_idx,
                                         const MorphPayload& m) {
  if (m.hierarchy_level != 0)
    throw ConfigError("apply_morph: HL=1 payload aimed at a ring switch");
  RingSwitch& rs = t.switches[rs_idx];
  for (unsigned g = 4; g < 8; ++g)
    if (m.link_config[g] != LinkState2b::NoChange)
      throw ConfigError("apply_morph: ring switch has only four links");
  for (unsigned g = 0; g < 4; ++g) {
    if (m.link_config[g] == LinkState2b::NoChange) continue;
    if (m.link_config[g] == LinkState2b::Bypass && g != kLcRingCw &&
        g != kLcRingCcw)
      throw ConfigError("apply_morph: bypass is only defined for ring channels");
    if (g == kLcRouter && !rs.is_master())
      throw ConfigError("apply_morph: non-master switch has no router link");
  }
  ApplyResult res;
  for (unsigned g = 0; g < 4; ++g) {
    if (m.link_config[g] == LinkState2b::NoChange) continue;
    res.dropped += rs.set_group_state(g, to_link_state(m.link_config[g]));
  }
  rs.set_region_meta(m.execution_region_size, m.pe_type_selector);
  t.resolve_sinks();
  return res;
}

inline ApplyResult apply_morph(Topology& t, CompRef target, const MorphPayload& m) {
  return target.kind == CompKind::Router
             ? apply_morph_to_router(t, target.index, m)
             : apply_morph_to_switch(t, target.index, m);
}

// ---------------------------------------------------------------------------
// Execution-region planner
// ---------------------------------------------------------------------------

struct MorphCmd {
  NodeAddress dest;  // header destination of the morph pair
  MorphPayload payload;
};

struct RegionPlan {
  std::vector<MorphCmd> morphs;
  std::vector<GlobalPeIndex> members;
  uint16_t ers = 0;
};

// Greedy whole-ringlet allocation outward from the anchor block. Every block
// with unallocated ringlets gets one router morph switching those ringlet
// channels off, so walking the link states afterwards counts exactly the
// requested PEs as attached.
inline RegionPlan plan_region(const TopologySpec& spec, uint32_t requested_pes,
                              uint32_t anchor_x, uint32_t anchor_y) {
  validate_spec(spec);
  if (spec.kind != TopologyKind::RingMesh)
    throw ConfigError("plan_region: regions are defined on the ring-mesh");
  if (anchor_x >= spec.cols || anchor_y >= spec.rows)
    throw ConfigError("plan_region: anchor outside topology");
  const uint32_t total = 16 * spec.rows * spec.cols;
  if (requested_pes == 0 || requested_pes % 4 != 0)
    throw ConfigError("plan_region: PE count must be a positive multiple of 4");
  if (requested_pes > total)
    throw ConfigError("plan_region: not enough PEs in the topology");

  // Blocks ordered by Manhattan distance from the anchor, then row-major.
  std::vector<std::pair<uint32_t, uint32_t>> blocks;
  for (uint32_t y = 0; y < spec.rows; ++y)
    for (uint32_t x = 0; x < spec.cols; ++x) blocks.push_back({x, y});
  auto dist = [&](const std::pair<uint32_t, uint32_t>& b) {
    const auto dx = static_cast<int>(b.first) - static_cast<int>(anchor_x);
    const auto dy = static_cast<int>(b.second) - static_cast<int>(anchor_y);
    return std::abs(dx) + std::abs(dy);
  };
  std::stable_sort(blocks.begin(), blocks.end(),
                   [&](const auto& a, const auto& b) { return dist(a) < dist(b); });

  RegionPlan plan;
  plan.ers = static_cast<uint16_t>(requested_pes > 1023 ? 1023 : requested_pes);
  uint32_t ringlets_left = requested_pes / 4;
  const TopoDims dims{spec.rows, spec.cols};
  for (const auto& [bx, by] : blocks) {
    uint32_t used_here = 0;
    for (uint32_t g = 0; g < 4 && ringlets_left > 0; ++g, --ringlets_left) {
      ++used_here;
      for (uint32_t p = 0; p < 4; ++p)
        plan.members.push_back(address_to_index(
            {static_cast<uint8_t>(bx), static_cast<uint8_t>(by),
             static_cast<uint8_t>(g), static_cast<uint8_t>(p)},
            dims));
    }
    if (used_here == 4) continue;  // whole block stays as-is
    MorphCmd cmd;
    cmd.dest = {static_cast<uint8_t>(bx), static_cast<uint8_t>(by), 0, 0};
    cmd.payload.hierarchy_level = 1;
    cmd.payload.execution_region_size = plan.ers;
    for (uint32_t g = used_here; g < 4; ++g)
      cmd.payload.link_config[kLcRinglet0 + g] = LinkState2b::SwitchOff;
    plan.morphs.push_back(cmd);
  }
  return plan;
}

// PEs reachable from `from` walking only Active links (used by the morph CLI;
// the acceptance suite carries its own independent flood).
inline uint32_t reachable_pes(const Topology& t, GlobalPeIndex from) {
  if (!t.is_ring_mesh()) throw ConfigError("reachable_pes: ring-mesh only");
  const uint32_t n_rs = static_cast<uint32_t>(t.switches.size());
  const uint32_t n_r = t.router_count();
  // Node ids: [0, n_rs) ring switches, [n_rs, n_rs+n_r) routers.
  std::vector<bool> seen(n_rs + n_r, false);
  std::deque<uint32_t> work;
  const NodeAddress a = t.address_of(from);
  const uint32_t start = t.rs_index(a.router_x, a.router_y, a.ringlet, a.pe);
  if (t.switches[start].group_state(kLcPe) != LinkState::Active) return 0;
  seen[start] = true;
  work.push_back(start);
  uint32_t pes = 0;
  auto visit = [&](uint32_t node) {
    if (!seen[node]) {
      seen[node] = true;
      work.push_back(node);
    }
  };
  while (!work.empty()) {
    const uint32_t node = work.front();
    work.pop_front();
    if (node < n_rs) {
      const RingSwitch& rs = t.switches[node];
      if (rs.group_state(kLcPe) == LinkState::Active) ++pes;
      const uint32_t base = t.rs_index(rs.block_x(), rs.block_y(), rs.ringlet(), 0);
      const uint32_t cw = base + (rs.pe() + 1u) % 4u;
      const uint32_t ccw = base + (rs.pe() + 3u) % 4u;
      if (rs.group_state(kLcRingCw) == LinkState::Active &&
          t.switches[cw].group_state(kLcRingCw) == LinkState::Active)
        visit(cw);
      if (rs.group_state(kLcRingCcw) == LinkState::Active &&
          t.switches[ccw].group_state(kLcRingCcw) == LinkState::Active)
        visit(ccw);
      if (rs.is_master() && rs.group_state(kLcRouter) == LinkState::Active) {
        const uint32_t ri = t.router_index(rs.block_x(), rs.block_y());
        if (t.routers[ri].port_state(MeshRouter::kPortR0 + rs.ringlet()) ==
            LinkState::Active)
          visit(n_rs + ri);
      }
    } else {
      const MeshRouter& r = t.routers[node - n_rs];
      for (uint32_t g = 0; g < 4; ++g) {
        if (r.port_state(MeshRouter::kPortR0 + static_cast<int>(g)) !=
            LinkState::Active)
          continue;
        const uint32_t master = t.rs_index(r.x(), r.y(), g, 0);
        if (t.switches[master].group_state(kLcRouter) == LinkState::Active)
          visit(master);
      }
      const int dirs[4] = {MeshRouter::kPortN, MeshRouter::kPortS,
                           MeshRouter::kPortE, MeshRouter::kPortW};
      const int dx[4] = {0, 0, 1, -1};
      const int dy[4] = {-1, 1, 0, 0};
      for (int d = 0; d < 4; ++d) {
        const int nx = static_cast<int>(r.x()) + dx[d];
        const int ny = static_cast<int>(r.y()) + dy[d];
        if (nx < 0 || ny < 0 || nx >= static_cast<int>(t.spec.cols) ||
            ny >= static_cast<int>(t.spec.rows))
          continue;
        if (r.port_state(dirs[d]) != LinkState::Active) continue;
        const uint32_t nbr = t.router_index(static_cast<uint32_t>(nx),
                                            static_cast<uint32_t>(ny));
        const int back = MeshRouter::opposite(dirs[d]);
        if (t.routers[nbr].port_state(back) != LinkState::Active) continue;
        visit(n_rs + nbr);
      }
    }
  }
  return pes;
}

}  // namespace ringmesh
