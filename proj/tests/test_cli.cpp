#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include <json.hpp>

namespace {

std::string binary() {
  const char* p = std::getenv("RINGMESH_BIN");
  REQUIRE(p != nullptr);
  return p;
}

struct CmdResult {
  int exit_code = -1;
  std::string out;
};

CmdResult run_cmd(const std::string& args) {
  const std::string cmd = binary() + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CmdResult res;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0)
    res.out.append(buf.data(), n);
  const int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s)
    if (c == '\n') ++n;
  return n;
}

}  // namespace

TEST_CASE("simulate emits one CSV row and exits 0") {
  auto r = run_cmd(
      "simulate --topology ringmesh --pes 256 --pattern uniform --ir 0.75 "
      "--cycles 2000 --seed 7");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("schema_version,topology,") != std::string::npos);
  CHECK(r.out.find("\n1,ringmesh,4,4,256,uniform,0.75,7,2000,200,") !=
        std::string::npos);
  CHECK(count_lines(r.out) == 3);  // version comment + header + row
}

TEST_CASE("identical invocations are byte-identical") {
  const std::string cmd =
      "simulate --pes 64 --pattern transpose --ir 1.0 --cycles 1500 --seed 3";
  auto a = run_cmd(cmd);
  auto b = run_cmd(cmd);
  CHECK(a.exit_code == 0);
  CHECK(a.out == b.out);
}

TEST_CASE("unsupported PE count exits 2") {
  auto r = run_cmd("simulate --pes 48 --cycles 100");
  CHECK(r.exit_code == 2);
}

TEST_CASE("unknown pattern exits 2") {
  auto r = run_cmd("simulate --pes 16 --pattern hotspot --cycles 100");
  CHECK(r.exit_code == 2);
}

TEST_CASE("analyze prints the pinned metric columns") {
  auto r = run_cmd("analyze --rows 8 --cols 8");
  CHECK(r.exit_code == 0);
  CHECK(r.out ==
        "kind,rows,cols,pes,routers,ringlets,diameter,bisection_bits_per_cycle\n"
        "ringmesh,8,8,1024,64,256,20,301\n");

  auto r44 = run_cmd("analyze --rows 4 --cols 4");
  CHECK(r44.out.find("ringmesh,4,4,256,16,64,12,129") != std::string::npos);

  CHECK(run_cmd("analyze --rows 9 --cols 4").exit_code == 2);
}

TEST_CASE("json output is valid and carries the config") {
  auto r = run_cmd("--format json simulate --pes 16 --ir 0.5 --cycles 800 --seed 5");
  CHECK(r.exit_code == 0);
  auto j = nlohmann::json::parse(r.out);
  REQUIRE(j.is_array());
  REQUIRE(j.size() == 1);
  CHECK(j[0]["pes"] == 16);
  CHECK(j[0]["seed"] == 5);
  CHECK(j[0]["schema_version"] == 1);
  CHECK(j[0]["delivered"].get<uint64_t>() > 0);
}

TEST_CASE("env var supplies the default seed") {
  auto a = run_cmd("simulate --pes 16 --cycles 500 --seed 77");
  const std::string cmd = std::string("RINGMESH_SEED=77 ") + binary() +
                          " simulate --pes 16 --cycles 500 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
  pclose(pipe);
  CHECK(a.out == out);
}

TEST_CASE("sweep over a small spec file") {
  const std::string spec = "/tmp/ringmesh_test_sweep.spec";
  {
    std::ofstream f(spec);
    f << "pe_counts=16\npatterns=uniform\nrates=0.25,0.5,0.75,1.0\n"
      << "seeds=1\ntopologies=ringmesh\ncycles=400\n";
  }
  auto r = run_cmd("sweep --spec " + spec + " --jobs 2");
  CHECK(r.exit_code == 0);
  // comment + header + 4 cells + 1 aggregate
  CHECK(count_lines(r.out) == 7);
  CHECK(r.out.find(",0.625,") != std::string::npos);
  std::remove(spec.c_str());
}

TEST_CASE("flags can come from a flat key=value config file") {
  const std::string conf = "/tmp/ringmesh_test.conf";
  {
    std::ofstream f(conf);
    f << "simulate.pes=64\nsimulate.cycles=300\nsimulate.seed=9\n";
  }
  auto from_file = run_cmd("--config " + conf + " simulate");
  auto from_flags = run_cmd("simulate --pes 64 --cycles 300 --seed 9");
  CHECK(from_file.exit_code == 0);
  CHECK(from_file.out == from_flags.out);
  std::remove(conf.c_str());
}

TEST_CASE("paper-repro sweep emits the full grid plus aggregates") {
  // 168 cells + 42 rate-averaged aggregates + comment + header. Short cycles
  // keep this fast; the row structure is what matters here.
  auto r = run_cmd("sweep --paper-repro --cycles 200 --jobs 2");
  CHECK(r.exit_code == 0);
  CHECK(count_lines(r.out) == 2 + 168 + 42);
  CHECK(r.out.find(",flat,32,32,1024,") != std::string::npos);
  CHECK(r.out.find(",ringmesh,8,8,1024,") != std::string::npos);
}

TEST_CASE("morph executes a plan file and reports reachability") {
  const std::string plan = "/tmp/ringmesh_test_plan.txt";
  {
    std::ofstream f(plan);
    // Switch off ringlets 2 and 3 of block (0,0): lc groups 6,7 = 11.
    f << "dest=0.0.0.0 hl=1 ers=8 lc=f000 pts=00\n";
  }
  auto r = run_cmd("morph --rows 1 --cols 1 --plan " + plan);
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("router,0,0,,,ringlet2,off") != std::string::npos);
  CHECK(r.out.find("router,0,0,,,ringlet3,off") != std::string::npos);
  CHECK(r.out.find("reachable_pes=8") != std::string::npos);
  CHECK(r.out.find("morph_errors=0") != std::string::npos);
  std::remove(plan.c_str());
}

TEST_CASE("morph plans a region and emits a plan file") {
  auto r = run_cmd("morph --rows 1 --cols 1 --request-pes 8 --emit-plan");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("dest=0.0.0.0 hl=1 ers=8 lc=") != std::string::npos);

  auto applied = run_cmd("morph --rows 1 --cols 1 --request-pes 8");
  CHECK(applied.exit_code == 0);
  CHECK(applied.out.find("reachable_pes=8") != std::string::npos);
}

TEST_CASE("compare joins a sweep CSV against the reference table") {
  auto sim = run_cmd("simulate --pes 16 --pattern uniform --ir 1.0 --cycles 1500 --seed 2");
  REQUIRE(sim.exit_code == 0);
  const std::string csv = "/tmp/ringmesh_test_rows.csv";
  {
    std::ofstream f(csv);
    f << sim.out;
  }
  auto cmp = run_cmd("compare --against-paper --input " + csv);
  CHECK(cmp.exit_code == 0);
  CHECK(cmp.out.find("metric,topology,pes,pattern,injection_rate,reference,"
                     "measured,ratio") != std::string::npos);
  CHECK(cmp.out.find("throughput,ringmesh,16,uniform,1,12,") != std::string::npos);
  std::remove(csv.c_str());

  CHECK(run_cmd("compare --input /nonexistent --against-paper").exit_code == 2);
}

TEST_CASE("per-packet trace file follows the documented record format") {
  const std::string trace = "/tmp/ringmesh_test_trace.csv";
  auto r = run_cmd("simulate --pes 16 --ir 0.3 --cycles 400 --seed 4 --trace-file " +
                   trace);
  CHECK(r.exit_code == 0);
  std::ifstream in(trace);
  REQUIRE(in.good());
  std::string header;
  std::getline(in, header);
  CHECK(header == "packet_id,src,dst,inject_cycle,deliver_cycle,hops");
  std::string first;
  std::getline(in, first);
  CHECK(std::count(first.begin(), first.end(), ',') == 5);
  CHECK(first.find('.') != std::string::npos);  // x.y.r.p addresses
  std::remove(trace.c_str());
}

TEST_CASE("per-cycle trace file carries running counters") {
  const std::string trace = "/tmp/ringmesh_test_cycles.csv";
  auto r = run_cmd(
      "simulate --pes 16 --ir 0.5 --cycles 100 --seed 4 --cycle-trace-file " +
      trace);
  CHECK(r.exit_code == 0);
  std::ifstream in(trace);
  REQUIRE(in.good());
  std::string header;
  std::getline(in, header);
  CHECK(header == "cycle,injected,delivered,in_flight");
  int lines = 0;
  std::string line;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 100);
  std::remove(trace.c_str());

  CHECK(run_cmd("simulate --pes 16 --cycles 50 --trace-file /tmp/a.csv "
                "--cycle-trace-file /tmp/b.csv")
            .exit_code == 2);
}

TEST_CASE("deadlock exit code is reserved") {
  // No deadlock is reachable in a healthy build; just pin the documented code
  // by checking a drain run completes with 0.
  auto r = run_cmd("simulate --pes 16 --ir 0.2 --cycles 300 --drain");
  CHECK(r.exit_code == 0);
}
