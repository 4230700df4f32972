#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cctype>
#include <sstream>

#include "warpkit/backend.hpp"
#include "warpkit/core.hpp"
#include "warpkit/harness.hpp"

using namespace warpkit;
using stagegraph::DesignGraph;
using stagegraph::StageMap;
using stagegraph::VirtualStage;

namespace {

core::CoreConfig config_for(int stages) {
  core::CoreConfig cfg;
  cfg.stage_map = *StageMap::preset(stages);
  cfg.mem_size = 4096;
  return cfg;
}

stagegraph::ElaboratedDesign full_core(int stages) {
  auto cfg = config_for(stages);
  auto g = core::build_core(cfg);
  harness::attach_rvfi(g);
  return stagegraph::elaborate(g, cfg.stage_map);
}

int count_staging_decls(const std::string& text) {
  int count = 0;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.find("  reg ") == 0 && line.find("_e") != std::string::npos &&
        line.find("_fb") == std::string::npos) {
      ++count;
    }
  }
  return count;
}

}  // namespace

TEST_CASE("lint passes the elaborated core") {
  for (int stages : {1, 5, 7}) {
    CHECK(backend::lint(full_core(stages)).empty());
  }
}

TEST_CASE("lint flags a zero-delay feedback arc") {
  DesignGraph g;
  auto a = g.input("a", 8, VirtualStage::Decode);
  stagegraph::FeedbackArc arc;
  arc.name = "loop";
  arc.delay.fixed = 0;
  arc.sources = {a};
  g.add_raw_feedback(arc);
  g.output("o", a, VirtualStage::Decode);
  auto design = stagegraph::elaborate(g, StageMap::five_stage());
  auto violations = backend::lint(design);
  REQUIRE(!violations.empty());
  CHECK(violations[0].what.find("loop") != std::string::npos);
}

TEST_CASE("lint flags width-mismatched nodes") {
  DesignGraph g;
  auto a = g.input("a", 8, VirtualStage::Decode);
  auto b = g.input("b", 4, VirtualStage::Decode);
  auto sel = g.input("s", 1, VirtualStage::Decode);
  stagegraph::ExprNode bad;
  bad.op = stagegraph::Op::Mux;
  bad.stage = VirtualStage::Decode;
  bad.width = 8;
  bad.args = {sel, a, b};
  auto m = g.add_raw_node(bad);
  g.output("o", m, VirtualStage::Decode);
  auto design = stagegraph::elaborate(g, StageMap::five_stage());
  auto violations = backend::lint(design);
  REQUIRE(!violations.empty());
  CHECK(violations[0].what.find("mux") != std::string::npos);
}

TEST_CASE("single-stage output declares no staging registers") {
  auto text = backend::emit_verilog(full_core(1), "warp_core", 4096);
  CHECK(count_staging_decls(text) == 0);
}

TEST_CASE("a depth-d read emits exactly d registers for that signal") {
  DesignGraph g;
  auto a = g.input("probe", 16, VirtualStage::Decode);
  g.output("late", a, VirtualStage::RegWr);
  auto design = stagegraph::elaborate(g, StageMap::seven_stage());
  REQUIRE(design.staging_stats().registers == 4);
  auto text = backend::emit_verilog(design, "probe_mod", 64);
  CHECK(count_staging_decls(text) == 4);
  for (int d = 1; d <= 4; ++d) {
    CHECK(text.find("_d" + std::to_string(d) + ";") != std::string::npos);
  }
}

TEST_CASE("every staging register is both shifted and consumed") {
  auto design = full_core(5);
  auto text = backend::emit_verilog(design, "warp_core", 4096);
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (!(line.find("  reg ") == 0 && line.find("_e") != std::string::npos &&
          line.find("_fb") == std::string::npos)) {
      continue;
    }
    auto name_end = line.rfind(';');
    auto name_start = line.rfind(' ', name_end);
    std::string name = line.substr(name_start + 1, name_end - name_start - 1);
    size_t uses = 0;
    for (size_t pos = text.find(name); pos != std::string::npos;
         pos = text.find(name, pos + 1)) {
      // exclude longer names sharing the prefix (e.g. _d1 inside _d10)
      char after = text[pos + name.size()];
      if (!std::isalnum(static_cast<unsigned char>(after)) && after != '_') ++uses;
    }
    CAPTURE(name);
    CHECK(uses >= 3);  // declaration, shift, and at least one read
  }
}

TEST_CASE("staging declarations match the elaboration stats") {
  for (int stages : {5, 7}) {
    auto design = full_core(stages);
    auto text = backend::emit_verilog(design, "warp_core", 4096);
    CHECK(count_staging_decls(text) ==
          static_cast<int>(design.staging_stats().registers));
  }
}

TEST_CASE("emission is deterministic and structurally well formed") {
  auto design = full_core(5);
  auto a = backend::emit_verilog(design, "warp_core", 4096);
  auto b = backend::emit_verilog(design, "warp_core", 4096);
  CHECK(a == b);
  CHECK(a.rfind("// generated", 0) == 0);
  CHECK(a.find("module warp_core(") != std::string::npos);
  CHECK(a.find("always @(posedge clk)") != std::string::npos);
  CHECK(a.find("// ==== section: core ====") != std::string::npos);
  CHECK(a.find("// ==== section: harness ====") != std::string::npos);
  CHECK(a.substr(a.size() - 10) == "endmodule\n");
  // every rvfi field is a module output
  for (const char* port : {"o_rvfi_valid", "o_rvfi_order", "o_rvfi_insn", "o_rvfi_rd_wdata",
                           "o_rvfi_mem_wdata"}) {
    CHECK(a.find(port) != std::string::npos);
  }
}

TEST_CASE("stripped sizes ignore comments and collapse whitespace") {
  CHECK(backend::stripped_size("") == 0);
  CHECK(backend::stripped_size("// only a comment\n") == 0);
  CHECK(backend::stripped_size("ab  cd") == 5);
  CHECK(backend::stripped_size("ab\n\n\t cd // tail\n") == 5);
  CHECK(backend::stripped_size("  ab") == 2);
  CHECK(backend::stripped_size("wire x; // c\nwire y;") == 15);
}

TEST_CASE("size report reproduces the depth trends") {
  std::vector<core::CoreConfig> cfgs = {config_for(1), config_for(5), config_for(7)};
  auto report = backend::size_report(cfgs);
  REQUIRE(report.entries.size() == 3);
  const auto& e1 = report.entries[0];
  const auto& e5 = report.entries[1];
  const auto& e7 = report.entries[2];

  CHECK(e1.staging_registers == 0);
  CHECK(e1.staging_registers < e5.staging_registers);
  CHECK(e5.staging_registers < e7.staging_registers);

  CHECK(e1.construction_ops == e5.construction_ops);
  CHECK(e5.construction_ops == e7.construction_ops);
  CHECK(e1.construction_log == e5.construction_log);
  CHECK(e5.construction_log == e7.construction_log);

  double core_growth = static_cast<double>(e7.core_chars) / static_cast<double>(e1.core_chars);
  double harness_growth =
      static_cast<double>(e7.harness_chars) / static_cast<double>(e1.harness_chars);
  CHECK(harness_growth >= core_growth);
  CHECK(core_growth > 1.0);
}

TEST_CASE("size report is deterministic") {
  std::vector<core::CoreConfig> cfgs = {config_for(1), config_for(7)};
  auto a = backend::size_report(cfgs);
  auto b = backend::size_report(cfgs);
  REQUIRE(a.entries.size() == b.entries.size());
  for (size_t i = 0; i < a.entries.size(); ++i) {
    CHECK(a.entries[i].core_chars == b.entries[i].core_chars);
    CHECK(a.entries[i].harness_chars == b.entries[i].harness_chars);
    CHECK(a.entries[i].staging_registers == b.entries[i].staging_registers);
  }
  CHECK(backend::report_to_json(a) == backend::report_to_json(b));
  CHECK(backend::render_table(a) == backend::render_table(b));
}

TEST_CASE("rendered tables carry one row per configuration") {
  auto report = backend::size_report({config_for(1), config_for(5)});
  auto table = backend::render_table(report);
  CHECK(table.find("1-stage") != std::string::npos);
  CHECK(table.find("5-stage") != std::string::npos);
  auto json = backend::report_to_json(report);
  CHECK(json.find("\"staging_registers\"") != std::string::npos);
}
