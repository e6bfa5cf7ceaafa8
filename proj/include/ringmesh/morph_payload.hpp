#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ringmesh/flit.hpp"

namespace ringmesh {

// Runtime state of a network link/port.
enum class LinkState : uint8_t { Active, Bypass, SwitchedOff };

// 2-bit link-state group in the morph payload. The wire field has four code
// points for three architectural states; the spare one means "leave the link
// alone" so one packet can reconfigure a single link.
enum class LinkState2b : uint8_t {
  NoChange = 0b00,
  Active = 0b01,
  Bypass = 0b10,
  SwitchOff = 0b11,
};

// Configuration payload carried by a morph packet.
//   bit  [31]    HL   hierarchy level: 0 = ring switch, 1 = mesh router
//   bits [30:21] ERS  execution region size (10 bits)
//   bits [20:5]  LC   link configuration, 8 groups of 2 bits; group i covers
//                     link i and sits at bits [5+2i+1 : 5+2i]
//   bits [4:0]   PTS  PE-type selector; the LSB must be 0 whenever every other
//                     payload bit is 1, so a config can never collide with the
//                     0xFFFFFFFF escape marker
struct MorphPayload {
  uint8_t hierarchy_level = 0;  // 0 = RS, 1 = router
  uint16_t execution_region_size = 0;
  std::array<LinkState2b, 8> link_config{};
  uint8_t pe_type_selector = 0;

  bool operator==(const MorphPayload&) const = default;
};

// Router link-configuration group order.
inline constexpr unsigned kLcNorth = 0, kLcSouth = 1, kLcEast = 2, kLcWest = 3;
inline constexpr unsigned kLcRinglet0 = 4;
// Ring-switch group order (groups 4..7 must be NoChange when HL=0).
inline constexpr unsigned kLcRingCw = 0, kLcRingCcw = 1, kLcPe = 2, kLcRouter = 3;

inline uint32_t encode_morph(const MorphPayload& m) {
  if (m.hierarchy_level > 1) throw ConfigError("encode_morph: HL out of range");
  if (m.execution_region_size > 1023)
    throw ConfigError("encode_morph: ERS exceeds 10 bits");
  if (m.pe_type_selector > 31)
    throw ConfigError("encode_morph: PTS exceeds 5 bits");
  uint32_t w = 0;
  w |= static_cast<uint32_t>(m.hierarchy_level) << 31;
  w |= static_cast<uint32_t>(m.execution_region_size) << 21;
  for (unsigned i = 0; i < 8; ++i)
    w |= static_cast<uint32_t>(m.link_config[i]) << (5 + 2 * i);
  w |= m.pe_type_selector;
  if (w == kEscapeMarker)
    throw ConfigError(
        "encode_morph: payload collides with escape marker (PTS LSB must be 0)");
  return w;
}

inline MorphPayload decode_morph(uint32_t word) {
  if (word == kEscapeMarker)
    throw ConfigError("decode_morph: 0xFFFFFFFF is the escape marker, not a config");
  MorphPayload m;
  m.hierarchy_level = static_cast<uint8_t>(word >> 31);
  m.execution_region_size = static_cast<uint16_t>((word >> 21) & 0x3FF);
  for (unsigned i = 0; i < 8; ++i)
    m.link_config[i] = static_cast<LinkState2b>((word >> (5 + 2 * i)) & 0x3);
  m.pe_type_selector = static_cast<uint8_t>(word & 0x1F);
  return m;
}

// A logical payload before escape encoding: either application data or a
// configuration word.
struct LogicalPayload {
  enum class Kind : uint8_t { Data, Config };
  Kind kind = Kind::Data;
  uint32_t value = 0;

  bool operator==(const LogicalPayload&) const = default;
};

// Starting-flit escape protocol. A config payload travels as a marker flit
// followed by the config word; a data payload equal to the marker value
// travels as two marker flits; everything else passes through unchanged.
inline std::vector<uint32_t> escape_encode(const std::vector<LogicalPayload>& in) {
  std::vector<uint32_t> out;
  out.reserve(in.size() * 2);
  for (const auto& p : in) {
    if (p.kind == LogicalPayload::Kind::Config) {
      if (p.value == kEscapeMarker)
        throw ConfigError("escape_encode: config payload equals escape marker");
      out.push_back(kEscapeMarker);
      out.push_back(p.value);
    } else if (p.value == kEscapeMarker) {
      out.push_back(kEscapeMarker);
      out.push_back(kEscapeMarker);
    } else {
      out.push_back(p.value);
    }
  }
  return out;
}

inline std::vector<LogicalPayload> escape_decode(const std::vector<uint32_t>& in) {
  std::vector<LogicalPayload> out;
  out.reserve(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] == kEscapeMarker) {
      if (i + 1 >= in.size())
        throw ConfigError("escape_decode: truncated escape sequence");
      ++i;
      if (in[i] == kEscapeMarker)
        out.push_back({LogicalPayload::Kind::Data, kEscapeMarker});
      else
        out.push_back({LogicalPayload::Kind::Config, in[i]});
    } else {
      out.push_back({LogicalPayload::Kind::Data, in[i]});
    }
  }
  return out;
}

}  // namespace ringmesh
