#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "warpkit/checker.hpp"
#include "warpkit/core.hpp"
#include "warpkit/harness.hpp"
#include "warpkit/isa.hpp"

using namespace warpkit;
using stagegraph::StageMap;

namespace {

core::CoreConfig config_for(int stages, int latency = 1) {
  core::CoreConfig cfg;
  cfg.stage_map = *StageMap::preset(stages);
  cfg.mem_latency = latency;
  cfg.mem_size = 4096;
  return cfg;
}

RvfiTrace run(const std::string& src, int stages, int latency = 1) {
  auto image = isa::words_to_image(isa::assemble(src));
  auto res = core::simulate(config_for(stages, latency), image);
  REQUIRE(res.stats.halted);
  return res.trace;
}

RvfiRecord find_order(const RvfiTrace& trace, uint64_t order) {
  for (const auto& r : trace.records) {
    if (r.order == order) return r;
  }
  FAIL("order not present");
  return {};
}

}  // namespace

TEST_CASE("harness attachment performs identical mutations for every map") {
  // the attachment happens after the core build; its log slice must be
  // byte-identical whatever map will be used
  std::vector<std::string> slices;
  for (int stages : {1, 5, 7}) {
    auto cfg = config_for(stages);
    auto g = core::build_core(cfg);
    size_t before = g.log().size();
    harness::attach_rvfi(g);
    std::string slice;
    for (size_t i = before; i < g.log().size(); ++i) slice += g.log()[i] + "\n";
    slices.push_back(slice);
  }
  CHECK(slices[0] == slices[1]);
  CHECK(slices[1] == slices[2]);
  CHECK(slices[0].find("mux") != std::string::npos);
}

TEST_CASE("attachment is refused without the core signals") {
  stagegraph::DesignGraph empty;
  CHECK_THROWS_AS(harness::attach_rvfi(empty), stagegraph::GraphError);
}

TEST_CASE("register-source reporting follows the is-reg rule") {
  auto trace = run(R"(
    lui   x5, 0xfffff
    auipc x6, 0x1
    jal   x7, 4
    addi  x8, x5, 1
    ebreak
  )", 5);
  // lui/auipc/jal read no registers: both source fields report zero even
  // though the raw fields carry immediate bits
  for (uint64_t k : {uint64_t{0}, uint64_t{1}, uint64_t{2}}) {
    auto r = find_order(trace, k);
    CHECK(r.rs1_addr == 0);
    CHECK(r.rs2_addr == 0);
    CHECK(r.rs1_rdata == 0);
    CHECK(r.rs2_rdata == 0);
  }
  auto addi = find_order(trace, 3);
  CHECK(addi.rs1_addr == 5);
  CHECK(addi.rs2_addr == 0);
}

TEST_CASE("store retirements carry write masks and no read mask") {
  auto trace = run(R"(
    addi x1, x0, -2
    sw   x1, 64(x0)
    sh   x1, 70(x0)
    sb   x1, 65(x0)
    ebreak
  )", 7);
  auto sw = find_order(trace, 1);
  CHECK(sw.mem_wmask == 0xf);
  CHECK(sw.mem_rmask == 0);
  CHECK(sw.mem_addr == 64);
  CHECK(sw.mem_wdata == 0xfffffffe);
  auto sh = find_order(trace, 2);
  CHECK(sh.mem_wmask == 0b1100);
  CHECK(sh.mem_addr == 68);
  CHECK(sh.mem_wdata == 0xfffe0000);
  auto sb = find_order(trace, 3);
  CHECK(sb.mem_wmask == 0b0010);
  CHECK(sb.mem_wdata == 0x0000fe00);
}

TEST_CASE("the pseudo-load-return presents the original load") {
  auto trace = run(R"(
    addi x1, x0, 77
    sw   x1, 80(x0)
    lw   x2, 80(x0)
    ebreak
  )", 7, 3);
  auto lw = find_order(trace, 2);
  CHECK(lw.insn == isa::assemble("lw x2, 80(x0)")[0]);
  CHECK(lw.pc_rdata == 8);
  CHECK(lw.pc_wdata == 12);
  CHECK(lw.rd_addr == 2);
  CHECK(lw.rd_wdata == 77);
  CHECK(lw.mem_rmask == 0xf);
  CHECK(lw.mem_rdata == 77);
  CHECK(lw.mem_wmask == 0);
  CHECK(!lw.trap);
  CHECK(!lw.halt);
}

TEST_CASE("ebreak retires with halt set and ends the trace") {
  auto trace = run("addi x1, x0, 1\nebreak", 5);
  REQUIRE(trace.records.size() == 2);
  CHECK(trace.records.back().halt);
  CHECK(trace.complete);
}

TEST_CASE("bubble cycles produce no record") {
  auto cfg = config_for(5);
  auto g = core::build_core(cfg);
  harness::attach_rvfi(g);
  auto design = stagegraph::elaborate(g, cfg.stage_map);
  stagegraph::EvalState st(design, cfg.mem_size);
  std::vector<uint64_t> inputs(design.num_inputs(), 0);  // all idle
  auto ports = harness::find_rvfi_ports(design);
  for (int t = 0; t < 12; ++t) {
    auto out = stagegraph::eval_cycle(design, st, inputs);
    CHECK(!harness::read_rvfi(ports, out).has_value());
    CHECK(!harness::extract_record(design, out).has_value());
  }
}

TEST_CASE("load-irrelevant fields are not recirculated") {
  auto g = core::build_core(config_for(5));
  harness::attach_rvfi(g);
  int rec = harness::recirculated_width(g);
  CHECK(rec > 0);
  CHECK(rec < harness::full_record_width());
}

// ---------------------------------------------------------------------------
// trace files
// ---------------------------------------------------------------------------

TEST_CASE("trace lines carry exactly the rvfi keys in order") {
  RvfiRecord r;
  r.order = 3;
  r.insn = 0x00500093;
  r.rd_addr = 1;
  r.rd_wdata = 5;
  r.pc_rdata = 12;
  r.pc_wdata = 16;
  std::string line = harness::record_to_jsonl(r);
  const char* keys[] = {
      "rvfi_order", "rvfi_insn", "rvfi_trap", "rvfi_halt", "rvfi_intr",
      "rvfi_rs1_addr", "rvfi_rs2_addr", "rvfi_rs1_rdata", "rvfi_rs2_rdata",
      "rvfi_rd_addr", "rvfi_rd_wdata", "rvfi_pc_rdata", "rvfi_pc_wdata",
      "rvfi_mem_addr", "rvfi_mem_rmask", "rvfi_mem_wmask", "rvfi_mem_rdata",
      "rvfi_mem_wdata"};
  size_t pos = 0;
  for (const char* k : keys) {
    size_t found = line.find(std::string("\"") + k + "\":");
    CAPTURE(k);
    REQUIRE(found != std::string::npos);
    CHECK(found >= pos);
    pos = found;
  }
  // unsigned decimals only
  CHECK(line.find("0x") == std::string::npos);
  CHECK(line.find('-') == std::string::npos);
}

TEST_CASE("negative-looking values serialize as unsigned decimals") {
  RvfiRecord r;
  r.rd_addr = 1;
  r.rd_wdata = 0xffffffffu;
  std::string line = harness::record_to_jsonl(r);
  CHECK(line.find("\"rvfi_rd_wdata\":4294967295") != std::string::npos);
}

TEST_CASE("traces round-trip through the file form") {
  auto trace = run(R"(
    addi x1, x0, 42
    sw   x1, 64(x0)
    lw   x2, 64(x0)
    beq  x2, x1, 4
    ebreak
  )", 7, 2);
  std::string text = harness::trace_to_jsonl(trace);
  RvfiTrace parsed = harness::trace_from_jsonl(text);
  CHECK(parsed.records == trace.records);
  CHECK(parsed.complete);
}

TEST_CASE("malformed trace lines are rejected with their line number") {
  CHECK_THROWS_AS(harness::trace_from_jsonl("{\"rvfi_order\":0"), harness::TraceParseError);
  CHECK_THROWS_AS(harness::trace_from_jsonl("[1,2,3]\n"), harness::TraceParseError);
  CHECK_THROWS_AS(harness::trace_from_jsonl("{\"rvfi_order\":0}\n"),
                  harness::TraceParseError);  // missing fields
  try {
    harness::trace_from_jsonl("{}\nnot json\n");
  } catch (const harness::TraceParseError& e) {
    CHECK(e.line() >= 1);
  }
  // negative numbers violate the unsigned-decimal contract
  std::string good = harness::record_to_jsonl(RvfiRecord{});
  std::string bad = good;
  bad.replace(bad.find("\"rvfi_insn\":0"), 13, "\"rvfi_insn\":-1");
  CHECK_THROWS_AS(harness::trace_from_jsonl(bad + "\n"), harness::TraceParseError);
}

TEST_CASE("a parsed trace without a halt record is incomplete") {
  RvfiRecord r;
  auto text = harness::record_to_jsonl(r) + "\n";
  CHECK(!harness::trace_from_jsonl(text).complete);
  r.halt = true;
  CHECK(harness::trace_from_jsonl(harness::record_to_jsonl(r) + "\n").complete);
}
