#pragma once

#include <cassert>
#include <cstdint>
#include <vector>

#include "ringmesh/arbiter.hpp"
#include "ringmesh/fifo.hpp"
#include "ringmesh/flit.hpp"
#include "ringmesh/morph_payload.hpp"
#include "ringmesh/wires.hpp"

namespace ringmesh {

struct RouterParams {
  uint8_t vc_depth = 4;
  uint8_t ringlet_weight = 2;  // arbitration weight of ringlet-origin traffic
  uint8_t mesh_weight = 1;
};

// Shared escape FSM state for ejection points (RS PE interface, flat-mesh
// local port): a marker flit is held until its follower arrives, then the pair
// resolves to either an escaped all-ones data packet or a consumed config.
struct EjectState {
  bool held_valid = false;
  Flit held;
};

inline void eject_flit(EjectState& st, const Flit& f, CompRef self,
                       CycleEvents& ev) {
  if (st.held_valid) {
    st.held_valid = false;
    if (is_morph_marker(f)) {
      Delivery d;
      d.flit = f;
      d.merged = true;
      d.flit.packet_id = st.held.packet_id;
      d.flit.inject_cycle = st.held.inject_cycle;
      d.flit.entry_cycle = st.held.entry_cycle;
      d.flit.hops = st.held.hops;
      ev.deliveries.push_back(d);
    } else {
      MorphEventRec m;
      m.payload = decode_morph(f.payload);
      m.consumer = self;
      m.dest = f.header.dest;
      ev.morphs.push_back(m);
      ev.consumed_config_flits += 2;
    }
  } else if (is_morph_marker(f)) {
    st.held = f;
    st.held_valid = true;
  } else {
    ev.deliveries.push_back({f, false});
  }
}

// Cycle-accurate model of the 8-port modified mesh router (4 mesh channels +
// 4 ringlet channels) and, with flat=true, of the conventional 5-port router
// used by the flattened 2D-mesh baseline. Same pipeline, arbitration and flow
// control in both roles; only the port list differs.
//
// Timing contract: a flit whose speculative allocation succeeds crosses in one
// cycle; on speculation failure it is buffered into its header-selected VC and
// re-emerges through VCA/SA/ST, four cycles total.
class MeshRouter {
 public:
  static constexpr int kPortN = 0, kPortS = 1, kPortE = 2, kPortW = 3;
  static constexpr int kPortR0 = 4;   // ringlet ports 4..7 (ring-mesh)
  static constexpr int kPortLocal = 4;  // PE port (flat mesh)
  static constexpr int kMaxPorts = 8;
  static constexpr uint64_t kSlowPathDelay = 3;  // VCA+SA+ST after buffering

  MeshRouter() = default;
  MeshRouter(bool flat, uint8_t x, uint8_t y, const RouterParams& params)
      : flat_(flat), x_(x), y_(y), params_(params) {
    const int np = port_count();
    std::vector<uint8_t> weights(static_cast<std::size_t>(np));
    for (int p = 0; p < np; ++p)
      weights[static_cast<std::size_t>(p)] =
          (!flat_ && p >= kPortR0) ? params_.ringlet_weight : params_.mesh_weight;
    for (int p = 0; p < np; ++p) {
      in_[p].vcq[0].set_capacity(params_.vc_depth);
      in_[p].vcq[1].set_capacity(params_.vc_depth);
      out_[p].arb = WrrArbiter(weights);
    }
  }

  int port_count() const { return flat_ ? 5 : 8; }
  bool is_flat() const { return flat_; }
  uint8_t x() const { return x_; }
  uint8_t y() const { return y_; }

  LinkId in_link(int port) const { return in_[port].link; }
  LinkId out_link(int port) const { return out_[port].link; }
  void set_in_link(int port, LinkId id) { in_[port].link = id; }
  void set_out_link(int port, LinkId id) { out_[port].link = id; }

  LinkState port_state(int port) const { return port_state_[port]; }

  // Morph application entry point. Returns the number of flits dropped as a
  // side effect (a blocked output register on a switched-off channel).
  uint64_t set_port_state(int port, LinkState s) {
    uint64_t dropped = 0;
    if (s == LinkState::Bypass && port_state_[port] == LinkState::SwitchedOff)
      return 0;  // switch-off dominates until an explicit Active
    if (s == LinkState::SwitchedOff && out_[port].reg_valid) {
      out_[port].reg_valid = false;
      ++dropped;
    }
    port_state_[port] = s;
    return dropped;
  }

  static int opposite(int port) {
    switch (port) {
      case kPortN: return kPortS;
      case kPortS: return kPortN;
      case kPortE: return kPortW;
      case kPortW: return kPortE;
      default: return -1;
    }
  }

  bool has_mesh_opposite(int port) const {
    return port >= kPortN && port <= kPortW;
  }

  // XY dimension-order route: X first, then Y (y grows southward), ejecting to
  // the destination ringlet port (or the local PE port) at the home block.
  int route_compute(const Header& h) const {
    if (h.dest.router_x == x_ && h.dest.router_y == y_)
      return flat_ ? kPortLocal : kPortR0 + h.dest.ringlet;
    if (h.dest.router_x != x_) return h.dest.router_x > x_ ? kPortE : kPortW;
    return h.dest.router_y > y_ ? kPortS : kPortN;
  }

  // The currently latched flit may still park into the same VC this cycle, so
  // it holds a credit until it moves.
  bool can_accept(int port, int vc) const {
    const InPort& ip = in_[port];
    const std::size_t reserved =
        (ip.latch_valid && ip.latch.header.vc_select == vc) ? 1 : 0;
    return ip.vcq[vc].size() + reserved < ip.vcq[vc].capacity();
  }

  void receive(int port, const Flit& f) {
    assert(!in_[port].latch_valid);
    in_[port].latch = f;
    in_[port].latch_valid = true;
  }

  // Injection interface for the flat-mesh local port.
  bool local_latch_free() const { return !in_[kPortLocal].latch_valid; }

  void tick(uint64_t cycle, std::vector<Link>& links) {
    const int np = port_count();
    bool out_avail[kMaxPorts] = {};
    bool link_used[kMaxPorts] = {};
    bool out_granted[kMaxPorts] = {};
    bool input_used[kMaxPorts] = {};

    // Output registers holding previously blocked flits retry their link.
    for (int o = 0; o < np; ++o) {
      OutPort& op = out_[o];
      const bool frozen = output_consumed_by_bypass(o);
      if (op.reg_valid && !frozen) {
        assert(op.link != kNoLink);
        Link& l = links[static_cast<std::size_t>(op.link)];
        if (l.accept[op.reg.header.vc_select]) {
          l.has_flit = true;
          l.flit = op.reg;
          op.reg_valid = false;
          link_used[o] = true;
        }
      }
      const bool usable = port_state_[o] != LinkState::SwitchedOff && !frozen &&
                          (op.link != kNoLink || is_local_out(o));
      out_avail[o] = usable && !op.reg_valid;
    }

    // Stage 1: per input port, select at most one eligible buffered VC head.
    struct Cand {
      bool valid = false;
      uint8_t vc = 0;
      int out = -1;
    };
    Cand cand[kMaxPorts];
    for (int p = 0; p < np; ++p) {
      InPort& ip = in_[p];
      bool head_ok[2];
      for (int v = 0; v < 2; ++v)
        head_ok[v] = !ip.vcq[v].empty() && cycle >= ip.vcq[v].front().eligible;
      if (!head_ok[0] && !head_ok[1]) continue;
      int v = ip.vc_ptr;
      if (!head_ok[v]) v = 1 - v;
      // A pending pair lock naming this input pins the VC choice.
      for (int o = 0; o < np; ++o)
        if (out_[o].lock.active && lock_port(out_[o].lock) == p &&
            head_ok[lock_vc(out_[o].lock)])
          v = lock_vc(out_[o].lock);
      const Flit& head = ip.vcq[v].front().flit;
      const int o = route_compute(head.header);
      if (port_state_[o] == LinkState::SwitchedOff) {
        ip.vcq[v].pop();  // traffic toward a switched-off channel is dropped
        ++events_.dropped;
        continue;
      }
      cand[p] = {true, static_cast<uint8_t>(v), o};
    }

    // Stage 2: per output port, arbitrate buffered claimants (non-speculative
    // requests beat speculative arrivals).
    std::vector<bool> req(static_cast<std::size_t>(np));
    for (int o = 0; o < np; ++o) {
      if (!out_avail[o]) continue;
      const PairLock& lock = out_[o].lock;
      bool any = false;
      for (int p = 0; p < np; ++p) {
        bool r = cand[p].valid && cand[p].out == o;
        if (r && lock.active &&
            !(lock_port(lock) == p && lock_vc(lock) == cand[p].vc))
          r = false;
        req[static_cast<std::size_t>(p)] = r;
        any |= r;
      }
      if (!any) continue;
      int p;
      if (lock.active) {
        p = -1;
        for (int i = 0; i < np; ++i)
          if (req[static_cast<std::size_t>(i)]) p = i;
      } else {
        p = out_[o].arb.pick(req);
      }
      if (p < 0) continue;
      Flit f = in_[p].vcq[cand[p].vc].pop().flit;
      emit(f, o, cycle, links, link_used, static_cast<uint8_t>(p), cand[p].vc);
      in_[p].vc_ptr = 1 - cand[p].vc;
      out_granted[o] = true;
      input_used[p] = true;
    }

    // Speculative path: arriving flits bid directly for the crossbar. Success
    // requires a free output, an empty header-selected VC (order preserving)
    // and no competing non-speculative grant.
    struct Spec {
      bool want = false;
      int out = -1;
    };
    Spec spec[kMaxPorts];
    for (int p = 0; p < np; ++p) {
      InPort& ip = in_[p];
      if (!ip.latch_valid || input_used[p]) continue;
      const int o = route_compute(ip.latch.header);
      if (port_state_[o] == LinkState::SwitchedOff) {
        ip.latch_valid = false;
        ++events_.dropped;
        continue;
      }
      spec[p] = {true, o};
    }
    for (int o = 0; o < np; ++o) {
      if (!out_avail[o] || out_granted[o]) continue;
      const PairLock& lock = out_[o].lock;
      bool any = false;
      for (int p = 0; p < np; ++p) {
        const InPort& ip = in_[p];
        bool r = spec[p].want && spec[p].out == o && !input_used[p] &&
                 ip.vcq[ip.latch.header.vc_select].empty();
        if (r && lock.active &&
            !(lock_port(lock) == p && lock_vc(lock) == ip.latch.header.vc_select))
          r = false;
        req[static_cast<std::size_t>(p)] = r;
        any |= r;
      }
      if (!any) continue;
      int p;
      if (lock.active) {
        p = -1;
        for (int i = 0; i < np; ++i)
          if (req[static_cast<std::size_t>(i)]) p = i;
      } else {
        p = out_[o].arb.pick(req);
      }
      if (p < 0) continue;
      Flit f = in_[p].latch;
      in_[p].latch_valid = false;
      emit(f, o, cycle, links, link_used, static_cast<uint8_t>(p),
           f.header.vc_select);
      out_granted[o] = true;
      input_used[p] = true;
    }

    // Arrivals that failed speculation buffer into their header-selected VC.
    for (int p = 0; p < np; ++p) {
      InPort& ip = in_[p];
      if (!ip.latch_valid) continue;
      auto& q = ip.vcq[ip.latch.header.vc_select];
      assert(!q.full());
      q.push({ip.latch, cycle + kSlowPathDelay});
      ip.latch_valid = false;
    }
  }

  uint64_t count_flits() const {
    uint64_t n = 0;
    for (int p = 0; p < port_count(); ++p) {
      n += in_[p].latch_valid ? 1 : 0;
      n += in_[p].vcq[0].size() + in_[p].vcq[1].size();
      n += out_[p].reg_valid ? 1 : 0;
    }
    n += eject_.held_valid ? 1 : 0;
    return n;
  }

  uint64_t state_signature() const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (int p = 0; p < port_count(); ++p) {
      const InPort& ip = in_[p];
      h = fnv1a_mix(h, ip.latch_valid ? flit_signature(ip.latch) : 0x5a5a);
      for (int v = 0; v < 2; ++v)
        for (std::size_t i = 0; i < ip.vcq[v].size(); ++i)
          h = fnv1a_mix(h, flit_signature(ip.vcq[v].at(i).flit));
      h = fnv1a_mix(h, ip.vc_ptr);
      const OutPort& op = out_[p];
      h = fnv1a_mix(h, op.reg_valid ? flit_signature(op.reg) : 0xa5a5);
      h = fnv1a_mix(h, op.arb.state_signature());
      h = fnv1a_mix(h, (static_cast<uint64_t>(op.lock.active) << 9) | op.lock.stream);
      h = fnv1a_mix(h, static_cast<uint64_t>(port_state_[p]));
    }
    return h;
  }

  CycleEvents& events() { return events_; }
  uint16_t region_ers() const { return region_ers_; }
  uint8_t region_pts() const { return region_pts_; }
  void set_region_meta(uint16_t ers, uint8_t pts) {
    region_ers_ = ers;
    region_pts_ = pts;
  }

  // Test access to microarchitectural occupancy.
  std::size_t vc_occupancy(int port, int vc) const {
    return in_[port].vcq[vc].size();
  }
  bool out_reg_valid(int port) const { return out_[port].reg_valid; }

 private:
  struct Queued {
    Flit flit;
    uint64_t eligible = 0;
  };
  struct InPort {
    bool latch_valid = false;
    Flit latch;
    FixedFifo<Queued> vcq[2];
    uint8_t vc_ptr = 0;
    LinkId link = kNoLink;
  };
  struct OutPort {
    bool reg_valid = false;
    Flit reg;
    WrrArbiter arb;
    PairLock lock;
    LinkId link = kNoLink;
  };

  bool is_local_out(int o) const { return flat_ && o == kPortLocal; }

  bool output_consumed_by_bypass(int o) const {
    const int opp = opposite(o);
    return opp >= 0 && port_state_[opp] == LinkState::Bypass;
  }

  static uint8_t lock_stream(uint8_t port, uint8_t vc) {
    return static_cast<uint8_t>((port << 1) | vc);
  }
  static int lock_port(const PairLock& l) { return l.stream >> 1; }
  static int lock_vc(const PairLock& l) { return l.stream & 1; }

  void emit(Flit& f, int o, uint64_t cycle, std::vector<Link>& links,
            bool link_used[], uint8_t from_port, uint8_t vc) {
    out_[o].lock.update_on_grant(is_morph_marker(f), lock_stream(from_port, vc));
    if (is_local_out(o)) {
      (void)cycle;
      eject_flit(eject_, f, CompRef{CompKind::Router, self_index_}, events_);
      return;
    }
    Link& l = links[static_cast<std::size_t>(out_[o].link)];
    if (!link_used[o] && l.accept[f.header.vc_select]) {
      l.has_flit = true;
      l.flit = f;
      link_used[o] = true;
    } else {
      assert(!out_[o].reg_valid);
      out_[o].reg = f;
      out_[o].reg_valid = true;
    }
  }

  bool flat_ = false;
  uint8_t x_ = 0, y_ = 0;
  RouterParams params_;
  InPort in_[kMaxPorts];
  OutPort out_[kMaxPorts];
  LinkState port_state_[kMaxPorts] = {};
  EjectState eject_;
  CycleEvents events_;
  uint16_t region_ers_ = 0;
  uint8_t region_pts_ = 0;

 public:
  uint32_t self_index_ = 0;  // set by the topology builder
};

}  // namespace ringmesh
