#include <catch2/catch_amalgamated.hpp>

#include <optional>

#include "ringmesh/ring_switch.hpp"

using namespace ringmesh;

namespace {

struct RsBench {
  RingSwitch rs;
  std::vector<Link> links;
  uint64_t cycle = 0;

  explicit RsBench(uint8_t pe = 0, RsParams params = {})
      : rs(0, 0, 0, pe, params) {
    auto mk = [&]() {
      Link l;
      l.accept[0] = l.accept[1] = true;
      links.push_back(l);
      return static_cast<LinkId>(links.size() - 1);
    };
    rs.cw_out_link = mk();
    rs.ccw_out_link = mk();
    if (rs.is_master()) rs.rtr_out_link = mk();
  }

  void set_accept(LinkId id, bool a) {
    links[static_cast<std::size_t>(id)].accept[0] = a;
    links[static_cast<std::size_t>(id)].accept[1] = a;
  }

  std::optional<Flit> tick_and_probe(LinkId id) {
    rs.tick(cycle++, links);
    std::optional<Flit> out;
    for (std::size_t i = 0; i < links.size(); ++i) {
      if (links[i].has_flit && static_cast<LinkId>(i) == id) out = links[i].flit;
      links[i].has_flit = false;
    }
    return out;
  }

  static Flit make_flit(NodeAddress dest, uint32_t payload = 7) {
    Flit f;
    f.header.dest = dest;
    f.header.vc_select = vc_for_destination(dest.pe);
    f.payload = payload;
    return f;
  }
};

// Independent shortest-direction oracle: walk the 4-ring both ways.
int oracle_cw_steps(int from, int to) {
  int d = 0, p = from;
  while (p != to) {
    p = (p + 1) % 4;
    ++d;
  }
  return d;
}

}  // namespace

TEST_CASE("rs_route examples") {
  RingSwitch at_pe1(0, 0, 2, 1, {});
  CHECK(at_pe1.rs_route({{0, 0, 2, 1}, 0}) == RsAction::EjectToPE);

  RingSwitch at_pe0(0, 0, 0, 0, {});
  CHECK(at_pe0.rs_route({{0, 0, 0, 3}, 1}) == RsAction::ForwardCCW);

  CHECK(at_pe0.rs_route({{1, 0, 0, 0}, 0}) == RsAction::EjectToRouter);
}

TEST_CASE("ring direction follows the shorter path, clockwise on ties") {
  for (int pos = 0; pos < 4; ++pos) {
    RingSwitch rs(0, 0, 0, static_cast<uint8_t>(pos), {});
    for (int dest = 0; dest < 4; ++dest) {
      if (dest == pos) continue;
      const int cw = oracle_cw_steps(pos, dest);
      const int ccw = oracle_cw_steps(dest, pos);
      const RsAction a = rs.rs_route({{0, 0, 0, static_cast<uint8_t>(dest)},
                                      vc_for_destination(static_cast<uint8_t>(dest))});
      if (cw < ccw) CHECK(a == RsAction::ForwardCW);
      else if (ccw < cw) CHECK(a == RsAction::ForwardCCW);
      else CHECK(a == RsAction::ForwardCW);  // tie
    }
  }
}

TEST_CASE("empty switch forwards a ring flit in one cycle") {
  RsBench b(1);
  b.rs.receive(RingSwitch::kInCw, RsBench::make_flit({0, 0, 0, 3}, 42));
  auto out = b.tick_and_probe(b.rs.cw_out_link);
  REQUIRE(out.has_value());
  CHECK(out->payload == 42);
  CHECK(b.rs.count_flits() == 0);
}

TEST_CASE("in-ring traffic beats PE injection; PE goes next cycle") {
  RsBench b(1);
  // PE flit and a through-going ring flit both want the CW output.
  Flit pe_flit = RsBench::make_flit({0, 0, 0, 2}, 2);
  REQUIRE(b.rs.pe_can_inject());
  b.rs.pe_inject(pe_flit);
  b.rs.receive(RingSwitch::kInCw, RsBench::make_flit({0, 0, 0, 3}, 1));

  auto first = b.tick_and_probe(b.rs.cw_out_link);
  REQUIRE(first.has_value());
  CHECK(first->payload == 1);
  auto second = b.tick_and_probe(b.rs.cw_out_link);
  REQUIRE(second.has_value());
  CHECK(second->payload == 2);
}

TEST_CASE("starving PE flit is granted at cycle S+1 under continuous ring traffic") {
  RsParams params;
  params.starvation_threshold = 4;
  RsBench b(1, params);
  b.rs.pe_inject(RsBench::make_flit({0, 0, 0, 2}, 99));
  std::vector<uint32_t> emitted;
  for (int i = 0; i < 8; ++i) {
    b.rs.receive(RingSwitch::kInCw, RsBench::make_flit({0, 0, 0, 3}, 10 + i));
    auto out = b.tick_and_probe(b.rs.cw_out_link);
    REQUIRE(out.has_value());
    emitted.push_back(out->payload);
    CHECK(b.rs.starve_counter(0) <= params.starvation_threshold);
  }
  // Denied for cycles 1..4, forced through on cycle 5.
  CHECK(emitted[0] == 10);
  CHECK(emitted[1] == 11);
  CHECK(emitted[2] == 12);
  CHECK(emitted[3] == 13);
  CHECK(emitted[4] == 99);
}

TEST_CASE("master cut-through: router arrival enters the ring same cycle") {
  RsBench b(0);
  Flit f = RsBench::make_flit({0, 0, 0, 2}, 5);
  REQUIRE(b.rs.can_accept(RingSwitch::kInRouter, f.header.vc_select));
  b.rs.receive(RingSwitch::kInRouter, f);
  auto out = b.tick_and_probe(b.rs.cw_out_link);
  REQUIRE(out.has_value());
  CHECK(out->payload == 5);
}

TEST_CASE("router-bound traffic stages through the injection buffer when blocked") {
  RsBench b(0);
  b.set_accept(b.rs.rtr_out_link, false);
  b.rs.receive(RingSwitch::kInCw, RsBench::make_flit({1, 0, 0, 0}, 21));
  CHECK_FALSE(b.tick_and_probe(b.rs.rtr_out_link).has_value());
  CHECK(b.rs.rinj_occupancy() == 1);
  b.set_accept(b.rs.rtr_out_link, true);
  auto out = b.tick_and_probe(b.rs.rtr_out_link);
  REQUIRE(out.has_value());
  CHECK(out->payload == 21);
}

TEST_CASE("router-ejected flits wait in the VC selected by the header bit") {
  RsBench b(0);
  b.set_accept(b.rs.cw_out_link, false);
  b.set_accept(b.rs.ccw_out_link, false);
  Flit hi = RsBench::make_flit({0, 0, 0, 3}, 31);  // pe 3 -> VC-1
  REQUIRE(hi.header.vc_select == 1);
  b.rs.receive(RingSwitch::kInRouter, hi);
  b.tick_and_probe(b.rs.cw_out_link);
  CHECK(b.rs.vc_occupancy(1) == 1);
  CHECK(b.rs.vc_occupancy(0) == 0);

  Flit lo = RsBench::make_flit({0, 0, 0, 1}, 30);  // pe 1 -> VC-0
  REQUIRE(lo.header.vc_select == 0);
  b.rs.receive(RingSwitch::kInRouter, lo);
  b.tick_and_probe(b.rs.cw_out_link);
  CHECK(b.rs.vc_occupancy(0) == 1);
}

TEST_CASE("ejection FSM consumes a morph pair and reports the config") {
  RsBench b(2);
  MorphPayload m;
  m.hierarchy_level = 0;
  m.link_config[kLcRingCw] = LinkState2b::SwitchOff;
  const uint32_t word = encode_morph(m);

  Flit marker = RsBench::make_flit({0, 0, 0, 2}, kEscapeMarker);
  Flit config = RsBench::make_flit({0, 0, 0, 2}, word);
  b.rs.receive(RingSwitch::kInCw, marker);
  b.tick_and_probe(b.rs.cw_out_link);
  CHECK(b.rs.events().deliveries.empty());
  CHECK(b.rs.count_flits() == 1);  // held marker
  b.rs.receive(RingSwitch::kInCw, config);
  b.tick_and_probe(b.rs.cw_out_link);
  REQUIRE(b.rs.events().morphs.size() == 1);
  CHECK(b.rs.events().morphs[0].payload == m);
  CHECK(b.rs.events().consumed_config_flits == 2);
  CHECK(b.rs.events().deliveries.empty());
  CHECK(b.rs.count_flits() == 0);
}

TEST_CASE("ejection FSM reassembles an escaped all-ones data payload") {
  RsBench b(2);
  Flit m1 = RsBench::make_flit({0, 0, 0, 2}, kEscapeMarker);
  m1.packet_id = 77;
  Flit m2 = RsBench::make_flit({0, 0, 0, 2}, kEscapeMarker);
  b.rs.receive(RingSwitch::kInCw, m1);
  b.tick_and_probe(b.rs.cw_out_link);
  b.rs.receive(RingSwitch::kInCw, m2);
  b.tick_and_probe(b.rs.cw_out_link);
  REQUIRE(b.rs.events().deliveries.size() == 1);
  const Delivery& d = b.rs.events().deliveries[0];
  CHECK(d.merged);
  CHECK(d.flit.payload == kEscapeMarker);
  CHECK(d.flit.packet_id == 77);
}
