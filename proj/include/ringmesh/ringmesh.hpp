#pragma once

#include "ringmesh/arbiter.hpp"
#include "ringmesh/engine.hpp"
#include "ringmesh/fifo.hpp"
#include "ringmesh/flit.hpp"
#include "ringmesh/morph.hpp"
#include "ringmesh/morph_payload.hpp"
#include "ringmesh/report.hpp"
#include "ringmesh/ring_switch.hpp"
#include "ringmesh/router.hpp"
#include "ringmesh/sweep.hpp"
#include "ringmesh/topology.hpp"
#include "ringmesh/traffic.hpp"
