#pragma once
// RV32I decode, a golden in-order reference executor, and a small assembler
// for writing test programs.

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "warpkit/rvfi.hpp"

namespace warpkit::isa {

enum class InstrKind : uint8_t {
  LUI, AUIPC, JAL, JALR,
  BEQ, BNE, BLT, BGE, BLTU, BGEU,
  LB, LH, LW, LBU, LHU,
  SB, SH, SW,
  ADDI, SLTI, SLTIU, XORI, ORI, ANDI, SLLI, SRLI, SRAI,
  ADD, SUB, SLL, SLT, SLTU, XOR, SRL, SRA, OR, AND,
  EBREAK,
  ILLEGAL,
};

inline constexpr int kNumInstrKinds = static_cast<int>(InstrKind::ILLEGAL) + 1;

const char* kind_name(InstrKind k);

struct Instr {
  InstrKind kind = InstrKind::ILLEGAL;
  uint8_t rd = 0;
  uint8_t rs1 = 0;
  uint8_t rs2 = 0;
  int32_t imm = 0;       // sign-extended
  uint32_t raw = 0;
  bool rs1_is_reg = false;
  bool rs2_is_reg = false;

  bool is_load() const;
  bool is_store() const;
  bool is_branch() const;
  bool is_jump() const;     // JAL or JALR
  bool writes_rd() const;   // architectural rd write (loads included)
};

// Total: undecodable words come back as ILLEGAL with `raw` preserved.
Instr decode(uint32_t word);

// Inverse of decode for legal kinds; used by the assembler and tests.
uint32_t encode(const Instr& instr);

struct ArchState {
  uint32_t pc = 0;
  std::array<uint32_t, 32> regs{};
  std::vector<uint8_t> mem;

  explicit ArchState(size_t mem_size = 65536) : mem(mem_size, 0) {}
  void load_image(const std::vector<uint8_t>& image);
};

// Golden-model view of one retirement; same field set as a trace record.
using RetireInfo = RvfiRecord;

class GoldenError : public std::runtime_error {
 public:
  enum class Kind { PcOutOfRange, PcMisaligned };
  GoldenError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Executes the instruction at state.pc and advances the state. Traps
// (illegal instructions, misaligned or out-of-range data accesses,
// misaligned taken-branch targets) retire with trap=1, suppress all
// architectural writes and fall through to pc+4. EBREAK sets halt.
// The order field is left 0; callers number retirements.
RetireInfo golden_step(ArchState& state);

// ---------------------------------------------------------------------------
// Assembler
// ---------------------------------------------------------------------------

class AsmError : public std::runtime_error {
 public:
  enum class Kind { SyntaxError, UnknownMnemonic, ImmediateOutOfRange };
  AsmError(Kind kind, int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        kind_(kind), line_(line) {}
  Kind kind() const { return kind_; }
  int line() const { return line_; }

 private:
  Kind kind_;
  int line_;
};

// One instruction per line; `#` comments; `label:` definitions; `.word N`
// emits a raw word. Branch/jump targets may be labels or byte offsets.
std::vector<uint32_t> assemble(const std::string& source);

std::vector<uint8_t> words_to_image(const std::vector<uint32_t>& words);

}  // namespace warpkit::isa
