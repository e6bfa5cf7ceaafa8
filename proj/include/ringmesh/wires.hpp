#pragma once

#include <cstdint>
#include <vector>

#include "ringmesh/flit.hpp"
#include "ringmesh/morph_payload.hpp"

namespace ringmesh {

enum class CompKind : uint8_t { Router, RingSwitch };

struct CompRef {
  CompKind kind = CompKind::Router;
  uint32_t index = 0;

  bool operator==(const CompRef&) const = default;
};

using LinkId = int32_t;
inline constexpr LinkId kNoLink = -1;

struct PortRef {
  CompRef comp;
  uint8_t port = 0;

  bool operator==(const PortRef&) const = default;
};

// Directed component-to-component channel. `src.port` is an output port id of
// the sender, `dst.port` an input port id of the receiver. The wire slot and
// acceptance flags are per-cycle scratch; `sink` is the bypass-resolved
// landing point, recomputed whenever link states change.
struct Link {
  PortRef src;
  PortRef dst;

  bool has_flit = false;
  Flit flit;
  bool accept[2] = {false, false};

  bool sink_drop = false;
  PortRef sink;
};

// A data packet handed to a PE. `merged` marks the reconstruction of an
// escaped all-ones payload from its two wire flits.
struct Delivery {
  Flit flit;
  bool merged = false;
};

// A configuration consumed by an ejection-point escape FSM, to be applied by
// the engine at commit time.
struct MorphEventRec {
  MorphPayload payload;
  CompRef consumer;       // the component whose FSM consumed the pair
  NodeAddress dest;       // header destination of the pair
};

// Per-cycle component outputs collected by the engine after every tick.
struct CycleEvents {
  std::vector<Delivery> deliveries;
  std::vector<MorphEventRec> morphs;
  uint64_t consumed_config_flits = 0;  // marker+config flits absorbed
  uint64_t dropped = 0;

  void clear() {
    deliveries.clear();
    morphs.clear();
    consumed_config_flits = 0;
    dropped = 0;
  }
};

// Lock that keeps an escape pair back-to-back through one output port: after a
// marker is granted, the next grant at that output must come from the same
// ingress stream.
struct PairLock {
  bool active = false;
  uint8_t stream = 0;  // component-specific ingress id

  void update_on_grant(bool flit_is_marker, uint8_t stream_id) {
    if (active) {
      active = false;  // the follower just went through
    } else if (flit_is_marker) {
      active = true;
      stream = stream_id;
    }
  }
};

inline uint64_t fnv1a_mix(uint64_t h, uint64_t v) {
  h ^= v;
  h *= 0x100000001b3ull;
  return h;
}

inline uint64_t flit_signature(const Flit& f) {
  uint64_t h = 0xcbf29ce484222325ull;
  h = fnv1a_mix(h, f.header.dest.router_x);
  h = fnv1a_mix(h, f.header.dest.router_y);
  h = fnv1a_mix(h, (static_cast<uint64_t>(f.header.dest.ringlet) << 4) |
                       (static_cast<uint64_t>(f.header.dest.pe) << 1) |
                       f.header.vc_select);
  h = fnv1a_mix(h, f.payload);
  h = fnv1a_mix(h, f.packet_id);
  return h;
}

}  // namespace ringmesh
