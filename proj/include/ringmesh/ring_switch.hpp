#pragma once

#include <cassert>
#include <cstdint>
#include <vector>

#include "ringmesh/arbiter.hpp"
#include "ringmesh/fifo.hpp"
#include "ringmesh/flit.hpp"
#include "ringmesh/morph_payload.hpp"
#include "ringmesh/router.hpp"
#include "ringmesh/wires.hpp"

namespace ringmesh {

struct RsParams {
  uint8_t depth = 4;                 // every RS buffer shares the VC depth knob
  uint8_t starvation_threshold = 4;  // S: forced grant after S denied cycles
  uint8_t vc0_weight = 1;            // drain weights of the router-side VCs
  uint8_t vc1_weight = 1;
  bool cw_high_priority = true;      // which in-ring direction moves first
};

enum class RsAction : uint8_t { ForwardCW, ForwardCCW, EjectToPE, EjectToRouter };

// Cycle-accurate ring switch: one node of a bidirectional 4-PE ringlet. The
// master switch (PE 0) additionally owns the router interface with its two
// ejection VCs and the injection staging buffer. In-ring traffic has priority;
// PE- and router-originated traffic fills free slots, with a starvation bound
// of `starvation_threshold` denied cycles.
class RingSwitch {
 public:
  // Input port ids (link destinations).
  static constexpr int kInCw = 0, kInCcw = 1, kInRouter = 2;
  // Output ids / arbitration points.
  static constexpr int kOutCw = 0, kOutCcw = 1, kOutRouter = 2, kOutPe = 3;
  // Ingress source classes.
  static constexpr int kSrcRingCw = 0, kSrcRingCcw = 1, kSrcPe = 2,
                       kSrcVc0 = 3, kSrcVc1 = 4, kSrcCount = 5;

  RingSwitch() = default;
  RingSwitch(uint8_t bx, uint8_t by, uint8_t ringlet, uint8_t pe,
             const RsParams& params)
      : bx_(bx), by_(by), ringlet_(ringlet), pe_(pe), master_(pe == 0),
        params_(params),
        low_arb_({1, params.vc0_weight, params.vc1_weight}) {
    buf1_.set_capacity(params_.depth);
    buf2_.set_capacity(params_.depth);
    buf3_.set_capacity(params_.depth);
    if (master_) {
      vcq_[0].set_capacity(params_.depth);
      vcq_[1].set_capacity(params_.depth);
      rinj_.set_capacity(params_.depth);
    }
  }

  bool is_master() const { return master_; }
  uint8_t block_x() const { return bx_; }
  uint8_t block_y() const { return by_; }
  uint8_t ringlet() const { return ringlet_; }
  uint8_t pe() const { return pe_; }

  LinkId cw_in_link = kNoLink, ccw_in_link = kNoLink, rtr_in_link = kNoLink;
  LinkId cw_out_link = kNoLink, ccw_out_link = kNoLink, rtr_out_link = kNoLink;

  LinkState group_state(unsigned group) const { return group_state_[group]; }

  uint64_t set_group_state(unsigned group, LinkState s) {
    uint64_t dropped = 0;
    if (s == LinkState::Bypass && group_state_[group] == LinkState::SwitchedOff)
      return 0;  // switch-off dominates until an explicit Active
    if (s == LinkState::SwitchedOff && group == kLcRouter) {
      dropped += rinj_.size();  // staged flits lose their channel mid-hop
      rinj_.clear();
    }
    group_state_[group] = s;
    return dropped;
  }

  // Forward along the shorter ring direction; clockwise on ties. Traffic bound
  // for another block walks the ring to the master, the only router exit.
  RsAction rs_route(const Header& h) const {
    const bool same_ring = h.dest.router_x == bx_ && h.dest.router_y == by_ &&
                           h.dest.ringlet == ringlet_;
    if (!same_ring) {
      if (master_) return RsAction::EjectToRouter;
      return direction_to(0);
    }
    if (h.dest.pe == pe_) return RsAction::EjectToPE;
    return direction_to(h.dest.pe);
  }

  // Latched arrivals may still park into their buffer this cycle; they hold a
  // credit until they move.
  bool can_accept(int port, int vc) const {
    switch (port) {
      case kInCw:
        return buf1_.size() + (cw_latch_.valid ? 1 : 0) < buf1_.capacity();
      case kInCcw:
        return buf2_.size() + (ccw_latch_.valid ? 1 : 0) < buf2_.capacity();
      case kInRouter: {
        if (!master_) return false;
        const std::size_t reserved =
            (rtr_latch_.valid && rtr_latch_.flit.header.vc_select == vc) ? 1 : 0;
        return vcq_[vc].size() + reserved < vcq_[vc].capacity();
      }
      default:
        return false;
    }
  }

  void receive(int port, const Flit& f) {
    Latch& l = latch_for(port);
    assert(!l.valid);
    l.flit = f;
    l.valid = true;
  }

  // PE injection interface (engine-driven).
  bool pe_can_inject() const {
    return group_state_[kLcPe] == LinkState::Active && !buf3_.full();
  }
  void pe_inject(const Flit& f) {
    assert(pe_can_inject());
    buf3_.push(f);
  }

  void tick(uint64_t cycle, std::vector<Link>& links) {
    // Heads of the five ingress classes, with cut-through for empty buffers.
    struct Head {
      bool valid = false;
      bool from_latch = false;
      int out = -1;
      const Flit* flit = nullptr;
    };
    Head heads[kSrcCount];
    resolve_head(heads[kSrcRingCw], buf1_, cw_latch_);
    resolve_head(heads[kSrcRingCcw], buf2_, ccw_latch_);
    if (!buf3_.empty()) {
      heads[kSrcPe].valid = true;
      heads[kSrcPe].flit = &buf3_.front();
    }
    if (master_) {
      for (int v = 0; v < 2; ++v) {
        Head& h = heads[kSrcVc0 + v];
        if (!vcq_[v].empty()) {
          h.valid = true;
          h.flit = &vcq_[v].front();
        } else if (rtr_latch_.valid && rtr_latch_.flit.header.vc_select == v) {
          h.valid = true;
          h.from_latch = true;
          h.flit = &rtr_latch_.flit;
        }
      }
    }

    // Route each head; traffic aimed at a switched-off channel is dropped.
    for (int s = 0; s < kSrcCount; ++s) {
      Head& h = heads[s];
      if (!h.valid) continue;
      h.out = action_output(rs_route(h.flit->header));
      if (output_off(h.out)) {
        consume(s, h);
        h.valid = false;
        ++events_.dropped;
      }
    }

    // Drain the router-injection staging buffer.
    bool rtr_wire_used = false;
    if (master_ && !rinj_.empty() &&
        group_state_[kLcRouter] == LinkState::Active) {
      Link& l = links[static_cast<std::size_t>(rtr_out_link)];
      if (l.accept[rinj_.front().header.vc_select]) {
        l.has_flit = true;
        l.flit = rinj_.pop();
        rtr_wire_used = true;
      }
    }

    // Per-output arbitration.
    bool granted_low[3] = {false, false, false};  // PE, VC0, VC1
    for (int o = 0; o < 4; ++o) {
      bool grantable[kSrcCount];
      bool any = false;
      for (int s = 0; s < kSrcCount; ++s) {
        bool g = heads[s].valid && heads[s].out == o &&
                 capacity_ok(o, *heads[s].flit, rtr_wire_used, links);
        if (g && lock_[o].active && lock_[o].stream != s) g = false;
        grantable[s] = g;
        any |= g;
      }
      if (!any) continue;

      int winner = -1;
      if (lock_[o].active) {
        winner = lock_[o].stream;
      } else {
        // Starvation relief: a low-priority source denied S times preempts.
        int best = -1;
        for (int s : {kSrcPe, kSrcVc0, kSrcVc1})
          if (grantable[s] && starve_[low_index(s)] >= params_.starvation_threshold &&
              (best < 0 || starve_[low_index(s)] > starve_[low_index(best)]))
            best = s;
        if (best >= 0) {
          winner = best;
        } else {
          const int first = params_.cw_high_priority ? kSrcRingCw : kSrcRingCcw;
          const int second = params_.cw_high_priority ? kSrcRingCcw : kSrcRingCw;
          if (grantable[first]) winner = first;
          else if (grantable[second]) winner = second;
          else {
            std::vector<bool> low_req = {grantable[kSrcPe], grantable[kSrcVc0],
                                         grantable[kSrcVc1]};
            const int li = low_arb_.pick(low_req);
            if (li >= 0) winner = (li == 0) ? kSrcPe : (kSrcVc0 + li - 1);
          }
        }
      }
      if (winner < 0) continue;

      Flit f = *heads[winner].flit;
      consume(winner, heads[winner]);
      heads[winner].valid = false;
      lock_[o].update_on_grant(is_morph_marker(f), static_cast<uint8_t>(winner));
      if (winner == kSrcPe || winner == kSrcVc0 || winner == kSrcVc1) {
        granted_low[low_index(winner)] = true;
        starve_[low_index(winner)] = 0;
      }
      dispatch(f, o, rtr_wire_used, links);
    }

    // Starvation accounting for heads that existed but were not granted.
    for (int s : {kSrcPe, kSrcVc0, kSrcVc1})
      if (heads[s].valid && !granted_low[low_index(s)] &&
          starve_[low_index(s)] < 255)
        ++starve_[low_index(s)];

    // Park unmoved arrivals in their direction buffers / VCs.
    if (cw_latch_.valid) {
      assert(!buf1_.full());
      buf1_.push(cw_latch_.flit);
      cw_latch_.valid = false;
    }
    if (ccw_latch_.valid) {
      assert(!buf2_.full());
      buf2_.push(ccw_latch_.flit);
      ccw_latch_.valid = false;
    }
    if (rtr_latch_.valid) {
      auto& q = vcq_[rtr_latch_.flit.header.vc_select];
      assert(!q.full());
      q.push(rtr_latch_.flit);
      rtr_latch_.valid = false;
    }
    (void)cycle;
  }

  uint64_t count_flits() const {
    uint64_t n = buf1_.size() + buf2_.size() + buf3_.size();
    n += cw_latch_.valid ? 1 : 0;
    n += ccw_latch_.valid ? 1 : 0;
    n += rtr_latch_.valid ? 1 : 0;
    n += vcq_[0].size() + vcq_[1].size() + rinj_.size();
    n += eject_.held_valid ? 1 : 0;
    return n;
  }

  uint64_t state_signature() const {
    uint64_t h = 0xcbf29ce484222325ull;
    auto mix_fifo = [&](const FixedFifo<Flit>& q) {
      for (std::size_t i = 0; i < q.size(); ++i)
        h = fnv1a_mix(h, flit_signature(q.at(i)));
      h = fnv1a_mix(h, q.size());
    };
    mix_fifo(buf1_);
    mix_fifo(buf2_);
    mix_fifo(buf3_);
    mix_fifo(vcq_[0]);
    mix_fifo(vcq_[1]);
    mix_fifo(rinj_);
    h = fnv1a_mix(h, cw_latch_.valid ? flit_signature(cw_latch_.flit) : 1);
    h = fnv1a_mix(h, ccw_latch_.valid ? flit_signature(ccw_latch_.flit) : 2);
    h = fnv1a_mix(h, rtr_latch_.valid ? flit_signature(rtr_latch_.flit) : 3);
    h = fnv1a_mix(h, eject_.held_valid ? flit_signature(eject_.held) : 4);
    for (int i = 0; i < 3; ++i) h = fnv1a_mix(h, starve_[i]);
    for (int o = 0; o < 4; ++o)
      h = fnv1a_mix(h, (static_cast<uint64_t>(lock_[o].active) << 9) | lock_[o].stream);
    h = fnv1a_mix(h, low_arb_.state_signature());
    for (int g = 0; g < 4; ++g)
      h = fnv1a_mix(h, static_cast<uint64_t>(group_state_[g]));
    return h;
  }

  CycleEvents& events() { return events_; }
  uint8_t starve_counter(int low) const { return starve_[low]; }
  std::size_t buf_occupancy(int which) const {
    switch (which) {
      case 1: return buf1_.size();
      case 2: return buf2_.size();
      case 3: return buf3_.size();
      default: return 0;
    }
  }
  std::size_t vc_occupancy(int v) const { return vcq_[v].size(); }
  std::size_t rinj_occupancy() const { return rinj_.size(); }
  void set_region_meta(uint16_t ers, uint8_t pts) {
    region_ers_ = ers;
    region_pts_ = pts;
  }
  uint16_t region_ers() const { return region_ers_; }
  uint8_t region_pts() const { return region_pts_; }

  uint32_t self_index_ = 0;  // set by the topology builder

 private:
  struct Latch {
    bool valid = false;
    Flit flit;
  };

  RsAction direction_to(uint8_t target) const {
    const uint8_t cw = static_cast<uint8_t>((target - pe_) & 3);
    const uint8_t ccw = static_cast<uint8_t>((pe_ - target) & 3);
    return cw <= ccw ? RsAction::ForwardCW : RsAction::ForwardCCW;
  }

  static int action_output(RsAction a) {
    switch (a) {
      case RsAction::ForwardCW: return kOutCw;
      case RsAction::ForwardCCW: return kOutCcw;
      case RsAction::EjectToRouter: return kOutRouter;
      case RsAction::EjectToPE: return kOutPe;
    }
    return kOutPe;
  }

  bool output_off(int o) const {
    switch (o) {
      case kOutCw: return group_state_[kLcRingCw] == LinkState::SwitchedOff;
      case kOutCcw: return group_state_[kLcRingCcw] == LinkState::SwitchedOff;
      case kOutRouter:
        return !master_ || group_state_[kLcRouter] == LinkState::SwitchedOff;
      case kOutPe: return group_state_[kLcPe] == LinkState::SwitchedOff;
    }
    return true;
  }

  bool output_bypass_consumed(int o) const {
    // A bypassed ring direction splices straight through this switch; its
    // output belongs to the splice.
    if (o == kOutCw) return group_state_[kLcRingCw] == LinkState::Bypass;
    if (o == kOutCcw) return group_state_[kLcRingCcw] == LinkState::Bypass;
    return false;
  }

  bool capacity_ok(int o, const Flit& f, bool rtr_wire_used,
                   std::vector<Link>& links) const {
    switch (o) {
      case kOutCw:
        return !output_bypass_consumed(o) && cw_out_link != kNoLink &&
               links[static_cast<std::size_t>(cw_out_link)].accept[f.header.vc_select];
      case kOutCcw:
        return !output_bypass_consumed(o) && ccw_out_link != kNoLink &&
               links[static_cast<std::size_t>(ccw_out_link)].accept[f.header.vc_select];
      case kOutRouter:
        (void)rtr_wire_used;
        return !rinj_.full();
      case kOutPe:
        return true;
    }
    return false;
  }

  static int low_index(int src) {
    return src == kSrcPe ? 0 : (src == kSrcVc0 ? 1 : 2);
  }

  void resolve_head(auto& head, FixedFifo<Flit>& buf, Latch& latch) {
    if (!buf.empty()) {
      head.valid = true;
      head.flit = &buf.front();
    } else if (latch.valid) {
      head.valid = true;
      head.from_latch = true;
      head.flit = &latch.flit;
    }
  }

  void consume(int src, const auto& head) {
    switch (src) {
      case kSrcRingCw:
        if (head.from_latch) cw_latch_.valid = false;
        else buf1_.pop();
        break;
      case kSrcRingCcw:
        if (head.from_latch) ccw_latch_.valid = false;
        else buf2_.pop();
        break;
      case kSrcPe:
        buf3_.pop();
        break;
      case kSrcVc0:
      case kSrcVc1:
        if (head.from_latch) rtr_latch_.valid = false;
        else vcq_[src - kSrcVc0].pop();
        break;
    }
  }

  void dispatch(Flit& f, int o, bool rtr_wire_used, std::vector<Link>& links) {
    switch (o) {
      case kOutCw: {
        Link& l = links[static_cast<std::size_t>(cw_out_link)];
        l.has_flit = true;
        l.flit = f;
        break;
      }
      case kOutCcw: {
        Link& l = links[static_cast<std::size_t>(ccw_out_link)];
        l.has_flit = true;
        l.flit = f;
        break;
      }
      case kOutRouter: {
        Link& l = links[static_cast<std::size_t>(rtr_out_link)];
        if (!rtr_wire_used && rinj_.empty() &&
            group_state_[kLcRouter] == LinkState::Active &&
            l.accept[f.header.vc_select]) {
          l.has_flit = true;
          l.flit = f;
        } else {
          rinj_.push(f);
        }
        break;
      }
      case kOutPe:
        eject_flit(eject_, f, CompRef{CompKind::RingSwitch, self_index_}, events_);
        break;
    }
  }

  Latch& latch_for(int port) {
    switch (port) {
      case kInCw: return cw_latch_;
      case kInCcw: return ccw_latch_;
      default: return rtr_latch_;
    }
  }

  uint8_t bx_ = 0, by_ = 0, ringlet_ = 0, pe_ = 0;
  bool master_ = false;
  RsParams params_;

  Latch cw_latch_, ccw_latch_, rtr_latch_;
  FixedFifo<Flit> buf1_, buf2_, buf3_;
  FixedFifo<Flit> vcq_[2];
  FixedFifo<Flit> rinj_;
  uint8_t starve_[3] = {0, 0, 0};  // PE, VC0, VC1
  WrrArbiter low_arb_;
  PairLock lock_[4];
  LinkState group_state_[4] = {};
  EjectState eject_;
  CycleEvents events_;
  uint16_t region_ers_ = 0;
  uint8_t region_pts_ = 0;
};

}  // namespace ringmesh
