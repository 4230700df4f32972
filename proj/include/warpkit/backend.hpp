#pragma once
// Verilog emission from an elaborated design, structural lint, and the
// cross-configuration size report.

#include <cstdint>
#include <string>
#include <vector>

#include "warpkit/core.hpp"
#include "warpkit/stagegraph.hpp"

namespace warpkit::backend {

struct LintViolation {
  std::string what;
};

// Structural checks over an elaborated design: stage ordering of every
// read, operand width consistency, feedback delays >= 1.
std::vector<LintViolation> lint(const stagegraph::ElaboratedDesign& design);

// One flat module: wire declarations, per-read staging register chains, a
// clocked block, combinational assignments in evaluation order, regfile and
// memory as behavioral arrays. Deterministic output; sections delimited by
// `// ==== section: core|harness ====` markers.
std::string emit_verilog(const stagegraph::ElaboratedDesign& design,
                         const std::string& module_name = "warp_core",
                         uint32_t mem_bytes = 65536);

struct SizeEntry {
  std::string config_name;
  uint64_t construction_ops = 0;      // graph-construction log lines (map-independent)
  uint64_t staging_registers = 0;
  uint64_t staging_bits = 0;
  uint64_t core_chars = 0;            // emitted text, comments/whitespace stripped
  uint64_t harness_chars = 0;
  std::string construction_log;       // full log text for identity checks
};

struct SizeReport {
  std::vector<SizeEntry> entries;
};

SizeReport size_report(const std::vector<core::CoreConfig>& configs);

std::string render_table(const SizeReport& report);
std::string report_to_json(const SizeReport& report);

// Comment- and whitespace-stripped character count (whitespace runs collapse
// to single spaces).
uint64_t stripped_size(const std::string& text);

}  // namespace warpkit::backend
