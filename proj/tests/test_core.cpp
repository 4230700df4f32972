#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>

#include "warpkit/checker.hpp"
#include "warpkit/core.hpp"
#include "warpkit/harness.hpp"
#include "warpkit/isa.hpp"

using namespace warpkit;
using stagegraph::StageMap;
using stagegraph::VirtualStage;

namespace {

core::CoreConfig config_for(int stages, int latency = 1) {
  core::CoreConfig cfg;
  cfg.stage_map = *StageMap::preset(stages);
  cfg.mem_latency = latency;
  cfg.mem_size = 4096;
  cfg.max_cycles = 100000;
  return cfg;
}

std::vector<uint8_t> assemble_image(const std::string& src) {
  return isa::words_to_image(isa::assemble(src));
}

std::vector<RvfiRecord> order_sorted(const RvfiTrace& trace) {
  auto recs = trace.records;
  std::stable_sort(recs.begin(), recs.end(),
                   [](const RvfiRecord& a, const RvfiRecord& b) { return a.order < b.order; });
  return recs;
}

const char* kSmokeProgram = R"(
    addi x1, x0, 5
    addi x2, x0, 7
    add  x3, x1, x2
    sw   x3, 64(x0)
    lw   x4, 64(x0)
    beq  x4, x3, next
next:
    sub  x6, x3, x1
    sltiu x7, x6, 100
    xori x5, x3, 15
    lui  x8, 0x12345
    ebreak
)";

}  // namespace

TEST_CASE("load return alignment formula") {
  CHECK(core::load_return_alignment(config_for(1, 1)) == 2);
  CHECK(core::load_return_alignment(config_for(7, 1)) == 7);
  CHECK(core::load_return_alignment(config_for(5, 1)) == 5);
  CHECK(core::load_return_alignment(config_for(5, 3)) == 7);
  for (int stages : {1, 5, 7}) {
    for (int lat : {1, 2, 5}) {
      CHECK(core::load_return_alignment(config_for(stages, lat)) >= 1);
    }
  }
}

TEST_CASE("core graph construction never reads the stage map") {
  auto g1 = core::build_core(config_for(1));
  auto g5 = core::build_core(config_for(5));
  auto g7 = core::build_core(config_for(7));
  CHECK(g1.log_text() == g5.log_text());
  CHECK(g5.log_text() == g7.log_text());
  CHECK(g1.nodes().size() == g7.nodes().size());
}

TEST_CASE("the core has exactly one feedback arc, the load-return bundle") {
  auto g = core::build_core(config_for(5));
  REQUIRE(g.arcs().size() == 1);
  CHECK(g.arcs()[0].name == "ld_return");
  // resolved against each preset it matches the alignment formula
  for (int stages : {1, 5, 7}) {
    auto cfg = config_for(stages, 2);
    auto graph = core::build_core(cfg);
    CHECK(graph.arcs()[0].delay.resolve(cfg.stage_map) == core::load_return_alignment(cfg));
  }
}

TEST_CASE("single-stage elaboration inserts no staging registers") {
  auto cfg = config_for(1);
  auto g = core::build_core(cfg);
  CHECK(stagegraph::elaborate(g, cfg.stage_map).staging_stats().registers == 0);
  harness::attach_rvfi(g);
  CHECK(stagegraph::elaborate(g, cfg.stage_map).staging_stats().registers == 0);
}

TEST_CASE("deeper maps insert strictly more staging registers") {
  auto g = core::build_core(config_for(5));
  harness::attach_rvfi(g);
  auto r1 = stagegraph::elaborate(g, StageMap::single_stage()).staging_stats().registers;
  auto r5 = stagegraph::elaborate(g, StageMap::five_stage()).staging_stats().registers;
  auto r7 = stagegraph::elaborate(g, StageMap::seven_stage()).staging_stats().registers;
  CHECK(r1 == 0);
  CHECK(r1 < r5);
  CHECK(r5 < r7);
}

TEST_CASE("smoke program retires all eleven instructions on every preset") {
  auto image = assemble_image(kSmokeProgram);
  for (int stages : {1, 5, 7}) {
    CAPTURE(stages);
    auto res = core::simulate(config_for(stages), image);
    REQUIRE(res.stats.halted);
    CHECK(res.stats.retirements == 11);
    REQUIRE(res.trace.records.size() == 11);
    auto sorted = order_sorted(res.trace);
    for (size_t i = 0; i < sorted.size(); ++i) CHECK(sorted[i].order == i);
    CHECK(sorted.back().halt);
    auto report = checker::check_trace(res.trace, image, 4096);
    CHECK(report.pass);
    CHECK(report.violations.empty());
    // the taken branch squashes exactly phys(EXECUTE) slots
    int pe = config_for(stages).stage_map.phys(VirtualStage::Execute);
    CHECK(res.stats.squashed_slots == static_cast<uint64_t>(pe));
    CHECK(res.stats.load_return_injections == 1);
  }
}

TEST_CASE("straight-line alu code retires one instruction per cycle on one stage") {
  std::string src;
  for (int i = 0; i < 20; ++i) src += "addi x1, x1, 1\n";
  src += "ebreak\n";
  auto image = assemble_image(src);
  auto res = core::simulate(config_for(1), image);
  REQUIRE(res.stats.halted);
  CHECK(res.stats.retirements == 21);
  CHECK(res.stats.cycles == 21);  // CPI exactly 1
  CHECK(res.stats.stall_cycles == 0);
  CHECK(res.stats.squashed_slots == 0);
}

TEST_CASE("a taken branch squashes the execute-depth younger slots") {
  // straight-line filler so the wrong path is full when the branch resolves
  auto image = assemble_image(R"(
    addi x1, x0, 1
    beq  x1, x1, target
    addi x2, x0, 2
    addi x3, x0, 3
    addi x4, x0, 4
    addi x5, x0, 5
  target:
    addi x6, x0, 6
    ebreak
  )");
  for (int stages : {1, 5, 7}) {
    CAPTURE(stages);
    auto cfg = config_for(stages);
    auto res = core::simulate(cfg, image);
    REQUIRE(res.stats.halted);
    int pe = cfg.stage_map.phys(VirtualStage::Execute);
    CHECK(res.stats.squashed_slots == static_cast<uint64_t>(pe));
    CHECK(res.stats.retirements == 4);  // addi, beq, target addi, ebreak
    CHECK(checker::check_trace(res.trace, image, 4096).pass);
    // the wrong-path registers were never written
    auto sorted = order_sorted(res.trace);
    for (const auto& r : sorted) {
      CHECK(r.rd_addr != 2);
      CHECK(r.rd_addr != 3);
    }
    // retirement gap between branch and target covers the squashed slots
    size_t bi = 1, ti = 2;
    CHECK(res.trace.records[ti].order == sorted[2].order);
    CHECK(res.trace.commit_cycles[ti] - res.trace.commit_cycles[bi] ==
          static_cast<uint64_t>(pe) + 1);
  }
}

TEST_CASE("the original load's fields ride the pseudo-load-return") {
  // lw plus a dependent add: the retirement carries the load's own pc, insn
  // and source fields, with the loaded data as rd_wdata
  auto image = assemble_image(R"(
    addi x2, x0, 96
    addi x3, x0, -1
    sw   x3, 0(x2)
    lw   x1, 0(x2)
    add  x4, x1, x1
    ebreak
  )");
  for (int stages : {1, 5, 7}) {
    for (int lat : {1, 2, 5}) {
      CAPTURE(stages);
      CAPTURE(lat);
      auto res = core::simulate(config_for(stages, lat), image);
      REQUIRE(res.stats.halted);
      auto sorted = order_sorted(res.trace);
      REQUIRE(sorted.size() == 6);
      const RvfiRecord& lw = sorted[3];
      CHECK(lw.insn == isa::assemble("lw x1, 0(x2)")[0]);
      CHECK(lw.pc_rdata == 12);
      CHECK(lw.pc_wdata == 16);
      CHECK(lw.rs1_addr == 2);
      CHECK(lw.rs1_rdata == 96);
      CHECK(lw.rs2_addr == 0);
      CHECK(lw.rd_addr == 1);
      CHECK(lw.rd_wdata == 0xffffffff);
      CHECK(lw.mem_addr == 96);
      CHECK(lw.mem_rmask == 0xf);
      CHECK(lw.mem_rdata == 0xffffffff);
      const RvfiRecord& add = sorted[4];
      CHECK(add.rs1_rdata == 0xffffffff);
      CHECK(add.rd_wdata == 0xfffffffe);
      CHECK(checker::check_trace(res.trace, image, 4096).pass);
    }
  }
}

TEST_CASE("loads present out of order; everything else stays ordered") {
  auto image = assemble_image(R"(
    addi x2, x0, 64
    lw   x1, 0(x2)
    addi x9, x0, 9
    ebreak
  )");
  for (int stages : {1, 5, 7}) {
    CAPTURE(stages);
    auto res = core::simulate(config_for(stages, 2), image);
    REQUIRE(res.stats.halted);
    const auto& recs = res.trace.records;
    REQUIRE(recs.size() == 4);
    // the independent addi retires before the load's pseudo-return
    std::vector<uint64_t> presented;
    for (const auto& r : recs) presented.push_back(r.order);
    CHECK(presented == std::vector<uint64_t>{0, 2, 1, 3});
    // any record presented late belongs to a load
    for (size_t i = 0; i + 1 < recs.size(); ++i) {
      for (size_t j = i + 1; j < recs.size(); ++j) {
        if (recs[j].order < recs[i].order) {
          CHECK(isa::decode(recs[j].insn).is_load());
        }
      }
    }
    CHECK(checker::check_trace(res.trace, image, 4096).pass);
  }
}

TEST_CASE("single-stage load return enters two cycles after the load") {
  auto image = assemble_image(R"(
    addi x2, x0, 64
    lw   x1, 0(x2)
    addi x9, x0, 9
    ebreak
  )");
  auto res = core::simulate(config_for(1, 1), image);
  REQUIRE(res.stats.halted);
  // launch cycles are commit cycles on the single-stage map; the lw launches
  // at cycle 1 and its pseudo-return commits at 1 + alignment = 3
  REQUIRE(res.trace.records.size() == 4);
  CHECK(res.trace.records[2].order == 1);       // the load's record
  CHECK(res.trace.commit_cycles[2] == 3);
  CHECK(core::load_return_alignment(config_for(1, 1)) == 2);
}

TEST_CASE("the return trails the original by the alignment on deep maps") {
  auto image = assemble_image(R"(
    addi x2, x0, 64
    lw   x1, 64(x0)
    addi x9, x0, 9
    ebreak
  )");
  // stall-free prefix: the lw launches at cycle 1, so its pseudo-return
  // occupies each stage exactly load_return_alignment cycles later and
  // commits at 1 + alignment + phys(REG_WR)
  for (int lat : {1, 2, 5}) {
    auto cfg = config_for(7, lat);
    auto res = core::simulate(cfg, image);
    REQUIRE(res.stats.halted);
    int align = core::load_return_alignment(cfg);
    size_t lw_pos = 0;
    for (size_t i = 0; i < res.trace.records.size(); ++i) {
      if (res.trace.records[i].order == 1) lw_pos = i;
    }
    CHECK(res.trace.commit_cycles[lw_pos] ==
          1 + static_cast<uint64_t>(align) +
              static_cast<uint64_t>(cfg.stage_map.phys(VirtualStage::RegWr)));
  }
}

TEST_CASE("dependent readers stall until the load writes back") {
  auto image = assemble_image(R"(
    addi x2, x0, 64
    lw   x1, 0(x2)
    add  x4, x1, x1
    ebreak
  )");
  for (int stages : {5, 7}) {
    auto res = core::simulate(config_for(stages, 3), image);
    REQUIRE(res.stats.halted);
    CHECK(res.stats.stall_cycles > 0);
    CHECK(checker::check_trace(res.trace, image, 4096).pass);
  }
}

TEST_CASE("memory ordering holds for store-then-load to the same word") {
  auto image = assemble_image(R"(
    addi x1, x0, 1234
    sw   x1, 100(x0)
    lw   x2, 100(x0)
    sw   x2, 104(x0)
    lw   x3, 104(x0)
    add  x4, x2, x3
    ebreak
  )");
  for (int stages : {1, 5, 7}) {
    auto res = core::simulate(config_for(stages, 2), image);
    REQUIRE(res.stats.halted);
    auto sorted = order_sorted(res.trace);
    CHECK(sorted[5].rd_wdata == 2468);
    CHECK(checker::check_trace(res.trace, image, 4096).pass);
  }
}

TEST_CASE("pending-load queue capacity bounds issue") {
  std::string src = "addi x9, x0, 64\n";
  for (int i = 0; i < 6; ++i) {
    src += "lw x" + std::to_string(i + 1) + ", " + std::to_string(64 + 4 * i) + "(x0)\n";
  }
  src += "ebreak\n";
  auto image = assemble_image(src);
  auto cfg = config_for(7, 5);
  cfg.max_pending_loads = 1;
  auto tight = core::simulate(cfg, image);
  REQUIRE(tight.stats.halted);
  CHECK(checker::check_trace(tight.trace, image, 4096).pass);

  cfg.max_pending_loads = 8;
  auto roomy = core::simulate(cfg, image);
  REQUIRE(roomy.stats.halted);
  CHECK(checker::check_trace(roomy.trace, image, 4096).pass);
  // capacity only changes timing
  CHECK(tight.stats.cycles > roomy.stats.cycles);
  CHECK(order_sorted(tight.trace) == order_sorted(roomy.trace));
  // returns drain in issue order
  std::vector<uint64_t> load_orders;
  for (const auto& r : tight.trace.records) {
    if (isa::decode(r.insn).is_load()) load_orders.push_back(r.order);
  }
  CHECK(std::is_sorted(load_orders.begin(), load_orders.end()));
}

TEST_CASE("traps retire in order with writes suppressed") {
  auto image = assemble_image(R"(
    addi x1, x0, 3
    .word 0x00000000
    lw   x2, 65(x0)
    sh   x1, 33(x0)
    addi x4, x0, 4
    ebreak
  )");
  for (int stages : {1, 5, 7}) {
    CAPTURE(stages);
    auto res = core::simulate(config_for(stages), image);
    REQUIRE(res.stats.halted);
    auto sorted = order_sorted(res.trace);
    REQUIRE(sorted.size() == 6);
    CHECK(sorted[1].trap);  // illegal word
    CHECK(sorted[2].trap);  // misaligned load: no pseudo-return
    CHECK(sorted[2].mem_rmask == 0);
    CHECK(sorted[3].trap);  // misaligned store
    CHECK(sorted[3].mem_wmask == 0);
    CHECK(res.stats.load_return_injections == 0);
    CHECK(checker::check_trace(res.trace, image, 4096).pass);
  }
}

TEST_CASE("order-sorted traces are identical across maps and latencies") {
  for (int i = 0; i < 25; ++i) {
    auto image = checker::gen_program(5000 + i, 80);
    std::vector<RvfiRecord> reference;
    bool first = true;
    for (int stages : {1, 5, 7}) {
      for (int lat : {1, 2, 5}) {
        auto res = core::simulate(config_for(stages, lat), image);
        REQUIRE(res.stats.halted);
        auto sorted = order_sorted(res.trace);
        if (first) {
          reference = sorted;
          first = false;
        } else {
          CHECK(sorted == reference);
        }
      }
    }
  }
}

TEST_CASE("every trace is dense and loads are the only reordering") {
  for (int i = 0; i < 30; ++i) {
    auto image = checker::gen_program(7000 + i, 60);
    auto res = core::simulate(config_for(7, 2), image);
    REQUIRE(res.stats.halted);
    auto sorted = order_sorted(res.trace);
    for (size_t k = 0; k < sorted.size(); ++k) CHECK(sorted[k].order == k);
    const auto& recs = res.trace.records;
    for (size_t a = 0; a + 1 < recs.size(); ++a) {
      for (size_t b = a + 1; b < recs.size(); ++b) {
        if (recs[b].order < recs[a].order) {
          CHECK(isa::decode(recs[b].insn).is_load());
        }
      }
    }
  }
}

TEST_CASE("custom monotone maps behave like the presets") {
  const std::array<int, 7> maps[] = {
      {0, 0, 1, 1, 1, 2, 3},
      {0, 1, 1, 2, 3, 4, 4},
      {0, 2, 2, 4, 4, 6, 6},  // stage gaps are fine
  };
  for (const auto& phys : maps) {
    core::CoreConfig cfg;
    cfg.stage_map = stagegraph::StageMap{"custom", phys};
    cfg.mem_latency = 3;
    cfg.mem_size = 4096;
    cfg.max_pending_loads = 2;
    cfg.max_cycles = 200000;
    for (int i = 0; i < 10; ++i) {
      auto image = checker::gen_program(9000 + i, 60);
      auto res = core::simulate(cfg, image);
      REQUIRE(res.stats.halted);
      CHECK(checker::check_trace(res.trace, image, 4096).pass);
      auto ref = core::simulate(config_for(5), image);
      CHECK(order_sorted(res.trace) == order_sorted(ref.trace));
    }
  }
}

TEST_CASE("two loads to one register resolve in program order") {
  auto image = assemble_image(R"(
    addi x1, x0, 9
    sw   x1, 512(x0)
    lw   x2, 512(x0)
    lw   x2, 516(x0)
    add  x3, x2, x2
    ebreak
  )");
  for (int stages : {1, 5, 7}) {
    auto res = core::simulate(config_for(stages, 2), image);
    REQUIRE(res.stats.halted);
    auto sorted = order_sorted(res.trace);
    CHECK(sorted[4].rd_wdata == 0);  // the second load (empty word) wins
    CHECK(checker::check_trace(res.trace, image, 4096).pass);
  }
}

TEST_CASE("timeouts flag the trace incomplete") {
  auto image = assemble_image(R"(
    addi x2, x0, 64
    lw x1, 0(x2)
    add x3, x1, x1
    ebreak
  )");
  auto cfg = config_for(7, 5);
  cfg.max_cycles = 6;
  auto res = core::simulate(cfg, image);
  CHECK(!res.stats.halted);
  CHECK(!res.trace.complete);
  CHECK(res.stats.cycles == 6);
  auto report = checker::check_trace(res.trace, image, 4096);
  CHECK(!report.pass);
  bool incomplete = false;
  for (const auto& v : report.violations) {
    if (v.kind == checker::ViolationKind::IncompleteTrace) incomplete = true;
  }
  CHECK(incomplete);
}

TEST_CASE("simulation is deterministic") {
  auto image = checker::gen_program(123, 100);
  auto cfg = config_for(5, 2);
  auto a = core::simulate(cfg, image);
  auto b = core::simulate(cfg, image);
  CHECK(a.trace.records == b.trace.records);
  CHECK(a.trace.commit_cycles == b.trace.commit_cycles);
  CHECK(a.stats.cycles == b.stats.cycles);
  CHECK(a.stats.stall_cycles == b.stats.stall_cycles);
}

TEST_CASE("config validation rejects broken configs") {
  auto cfg = config_for(5);
  cfg.mem_latency = 0;
  CHECK_THROWS_AS(core::validate_config(cfg), core::ConfigError);
  cfg = config_for(5);
  cfg.mem_size = 1001;
  CHECK_THROWS_AS(core::validate_config(cfg), core::ConfigError);
  cfg = config_for(5);
  cfg.max_pending_loads = 0;
  CHECK_THROWS_AS(core::validate_config(cfg), core::ConfigError);
  cfg = config_for(5);
  cfg.stage_map.physical = {1, 0, 2, 2, 2, 2, 2};
  CHECK_THROWS_AS(core::validate_config(cfg), core::ConfigError);
}

TEST_CASE("scoreboard pending bits never cover x0") {
  // a load to x0 still produces its pseudo-return record but no stall
  auto image = assemble_image(R"(
    addi x2, x0, 64
    sw   x2, 64(x0)
    lw   x0, 0(x2)
    addi x3, x0, 1
    ebreak
  )");
  for (int stages : {1, 5, 7}) {
    auto res = core::simulate(config_for(stages, 2), image);
    REQUIRE(res.stats.halted);
    auto sorted = order_sorted(res.trace);
    REQUIRE(sorted.size() == 5);
    CHECK(sorted[2].rd_addr == 0);
    CHECK(sorted[2].rd_wdata == 0);
    CHECK(sorted[2].mem_rmask == 0xf);  // presented via its return
    CHECK(sorted[3].rd_wdata == 1);     // untouched by the pending machinery
    CHECK(checker::check_trace(res.trace, image, 4096).pass);
  }
}
