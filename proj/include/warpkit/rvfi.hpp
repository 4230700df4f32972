#pragma once
// Per-retirement record in the style of the RISC-V Formal Interface: the
// instruction, its operands, results, pc transition and memory access,
// tagged with a program-order identifier. `valid` is implicit: a record
// exists in a trace only for actual retirements.

#include <cstdint>
#include <vector>

namespace warpkit {

struct RvfiRecord {
  uint64_t order = 0;
  uint32_t insn = 0;
  bool trap = false;
  bool halt = false;
  bool intr = false;
  uint8_t rs1_addr = 0;
  uint8_t rs2_addr = 0;
  uint8_t rd_addr = 0;
  uint32_t rs1_rdata = 0;
  uint32_t rs2_rdata = 0;
  uint32_t rd_wdata = 0;
  uint32_t pc_rdata = 0;
  uint32_t pc_wdata = 0;
  uint32_t mem_addr = 0;
  uint8_t mem_rmask = 0;
  uint8_t mem_wmask = 0;
  uint32_t mem_rdata = 0;
  uint32_t mem_wdata = 0;

  bool operator==(const RvfiRecord&) const = default;
};

struct RvfiTrace {
  std::vector<RvfiRecord> records;
  // Commit cycle per record; in-memory only, not part of the trace file.
  std::vector<uint64_t> commit_cycles;
  bool complete = false;  // run reached its halt instruction
};

}  // namespace warpkit
