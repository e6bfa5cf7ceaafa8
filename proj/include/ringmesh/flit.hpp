#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ringmesh {

// Thrown on invalid configuration or field values (bad dimensions, out-of-range
// addresses, malformed plan files, ...). The CLI maps it to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a drain phase times out with packets still in flight.
// The CLI maps it to exit code 3.
struct DeadlockError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Payload value reserved as the starting-flit escape marker.
inline constexpr uint32_t kEscapeMarker = 0xFFFFFFFFu;

// Hierarchical destination: mesh router coordinates, ringlet within the block,
// PE within the ringlet. The 11-bit wire format caps router coordinates at 3
// bits; the flat-mesh baseline widens them internally (never encoded to wire
// beyond 8x8).
struct NodeAddress {
  uint8_t router_x = 0;
  uint8_t router_y = 0;
  uint8_t ringlet = 0;
  uint8_t pe = 0;

  bool operator==(const NodeAddress&) const = default;
};

struct Header {
  NodeAddress dest;
  uint8_t vc_select = 0;  // 0 or 1

  bool operator==(const Header&) const = default;
};

// Canonical 11-bit wire layout, most significant field first:
//   bits[10:8]=router_x  bits[7:5]=router_y  bits[4:3]=ringlet
//   bits[2:1]=pe         bit[0]=vc_select
inline uint16_t encode_header(const Header& h) {
  if (h.dest.router_x > 7 || h.dest.router_y > 7 || h.dest.ringlet > 3 ||
      h.dest.pe > 3 || h.vc_select > 1) {
    throw ConfigError("encode_header: field out of range");
  }
  return static_cast<uint16_t>((h.dest.router_x << 8) | (h.dest.router_y << 5) |
                               (h.dest.ringlet << 3) | (h.dest.pe << 1) |
                               h.vc_select);
}

inline Header decode_header(uint16_t bits) {
  if (bits > 0x7FF) throw ConfigError("decode_header: value exceeds 11 bits");
  Header h;
  h.dest.router_x = static_cast<uint8_t>((bits >> 8) & 0x7);
  h.dest.router_y = static_cast<uint8_t>((bits >> 5) & 0x7);
  h.dest.ringlet = static_cast<uint8_t>((bits >> 3) & 0x3);
  h.dest.pe = static_cast<uint8_t>((bits >> 1) & 0x3);
  h.vc_select = static_cast<uint8_t>(bits & 0x1);
  return h;
}

inline constexpr unsigned kHeaderBits = 11;
inline constexpr unsigned kPayloadBits = 32;
inline constexpr unsigned kFlitWireBits = kHeaderBits + kPayloadBits;  // 43

// The atomic network unit. Wire content is header + payload; the remaining
// fields are simulator bookkeeping and must never influence routing.
struct Flit {
  Header header;
  uint32_t payload = 0;

  // --- simulator-only metadata ---
  uint64_t packet_id = 0;
  uint64_t inject_cycle = 0;  // intended injection cycle (source clock start)
  uint64_t entry_cycle = 0;   // cycle the flit entered the network
  NodeAddress source;
  uint32_t hops = 0;

  bool operator==(const Flit&) const = default;
};

inline bool is_morph_marker(const Flit& f) { return f.payload == kEscapeMarker; }

// Dense PE numbering used by the traffic patterns: blocks row-major, then
// ringlet, then PE.
using GlobalPeIndex = uint32_t;

struct TopoDims {
  uint32_t rows = 1;  // routers in Y
  uint32_t cols = 1;  // routers in X

  bool operator==(const TopoDims&) const = default;
};

inline GlobalPeIndex address_to_index(const NodeAddress& a, const TopoDims& d) {
  if (a.router_x >= d.cols || a.router_y >= d.rows || a.ringlet > 3 || a.pe > 3)
    throw ConfigError("address_to_index: address outside topology");
  return ((static_cast<uint32_t>(a.router_y) * d.cols + a.router_x) * 4 +
          a.ringlet) *
             4 +
         a.pe;
}

inline NodeAddress index_to_address(GlobalPeIndex idx, const TopoDims& d) {
  const uint32_t n = 16u * d.rows * d.cols;
  if (idx >= n) throw ConfigError("index_to_address: index outside topology");
  NodeAddress a;
  a.pe = static_cast<uint8_t>(idx % 4);
  idx /= 4;
  a.ringlet = static_cast<uint8_t>(idx % 4);
  idx /= 4;
  a.router_x = static_cast<uint8_t>(idx % d.cols);
  a.router_y = static_cast<uint8_t>(idx / d.cols);
  return a;
}

// Textual form used by the CLI and CSV output: "x.y.r.p".
inline std::string format_address(const NodeAddress& a) {
  return std::to_string(a.router_x) + "." + std::to_string(a.router_y) + "." +
         std::to_string(a.ringlet) + "." + std::to_string(a.pe);
}

inline NodeAddress parse_address(const std::string& s) {
  NodeAddress a;
  unsigned fields[4] = {0, 0, 0, 0};
  std::size_t pos = 0;
  for (int i = 0; i < 4; ++i) {
    std::size_t next = (i < 3) ? s.find('.', pos) : s.size();
    if (next == std::string::npos || next == pos)
      throw ConfigError("parse_address: expected x.y.r.p, got '" + s + "'");
    try {
      fields[i] = static_cast<unsigned>(std::stoul(s.substr(pos, next - pos)));
    } catch (const std::exception&) {
      throw ConfigError("parse_address: expected x.y.r.p, got '" + s + "'");
    }
    pos = next + 1;
  }
  if (fields[0] > 255 || fields[1] > 255 || fields[2] > 3 || fields[3] > 3)
    throw ConfigError("parse_address: field out of range in '" + s + "'");
  a.router_x = static_cast<uint8_t>(fields[0]);
  a.router_y = static_cast<uint8_t>(fields[1]);
  a.ringlet = static_cast<uint8_t>(fields[2]);
  a.pe = static_cast<uint8_t>(fields[3]);
  return a;
}

// Destination-based VC selection at the ring/router interface: PEs 0 and 1 map
// to VC-0, PEs 2 and 3 to VC-1. Sources use this to set the header vc bit.
inline uint8_t vc_for_destination(uint8_t pe) { return pe <= 1 ? 0 : 1; }

}  // namespace ringmesh
