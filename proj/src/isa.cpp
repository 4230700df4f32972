#include "warpkit/isa.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <sstream>
#include <unordered_map>

namespace warpkit::isa {

namespace {

constexpr const char* kKindNames[kNumInstrKinds] = {
    "lui", "auipc", "jal", "jalr",
    "beq", "bne", "blt", "bge", "bltu", "bgeu",
    "lb", "lh", "lw", "lbu", "lhu",
    "sb", "sh", "sw",
    "addi", "slti", "sltiu", "xori", "ori", "andi", "slli", "srli", "srai",
    "add", "sub", "sll", "slt", "sltu", "xor", "srl", "sra", "or", "and",
    "ebreak",
    "illegal",
};

int32_t sext(uint32_t value, int bits) {
  int shift = 32 - bits;
  return static_cast<int32_t>(value << shift) >> shift;
}

uint32_t bits(uint32_t word, int low, int count) {
  return (word >> low) & ((count >= 32) ? ~0u : ((1u << count) - 1));
}

}  // namespace

const char* kind_name(InstrKind k) { return kKindNames[static_cast<size_t>(k)]; }

bool Instr::is_load() const {
  return kind >= InstrKind::LB && kind <= InstrKind::LHU;
}

bool Instr::is_store() const {
  return kind >= InstrKind::SB && kind <= InstrKind::SW;
}

bool Instr::is_branch() const {
  return kind >= InstrKind::BEQ && kind <= InstrKind::BGEU;
}

bool Instr::is_jump() const {
  return kind == InstrKind::JAL || kind == InstrKind::JALR;
}

bool Instr::writes_rd() const {
  if (is_store() || is_branch()) return false;
  if (kind == InstrKind::EBREAK || kind == InstrKind::ILLEGAL) return false;
  return true;
}

Instr decode(uint32_t word) {
  Instr d;
  d.raw = word;
  uint32_t opcode = bits(word, 0, 7);
  uint32_t rd = bits(word, 7, 5);
  uint32_t funct3 = bits(word, 12, 3);
  uint32_t rs1 = bits(word, 15, 5);
  uint32_t rs2 = bits(word, 20, 5);
  uint32_t funct7 = bits(word, 25, 7);

  auto imm_i = [&] { return sext(bits(word, 20, 12), 12); };
  auto imm_s = [&] { return sext((bits(word, 25, 7) << 5) | bits(word, 7, 5), 12); };
  auto imm_b = [&] {
    return sext((bits(word, 31, 1) << 12) | (bits(word, 7, 1) << 11) |
                    (bits(word, 25, 6) << 5) | (bits(word, 8, 4) << 1),
                13);
  };
  auto imm_u = [&] { return static_cast<int32_t>(word & 0xfffff000u); };
  auto imm_j = [&] {
    return sext((bits(word, 31, 1) << 20) | (bits(word, 12, 8) << 12) |
                    (bits(word, 20, 1) << 11) | (bits(word, 21, 10) << 1),
                21);
  };

  auto u_type = [&](InstrKind k) {
    d.kind = k;
    d.rd = static_cast<uint8_t>(rd);
    d.imm = imm_u();
  };
  auto i_type = [&](InstrKind k) {
    d.kind = k;
    d.rd = static_cast<uint8_t>(rd);
    d.rs1 = static_cast<uint8_t>(rs1);
    d.imm = imm_i();
    d.rs1_is_reg = true;
  };

  switch (opcode) {
    case 0x37: u_type(InstrKind::LUI); break;
    case 0x17: u_type(InstrKind::AUIPC); break;
    case 0x6f:
      d.kind = InstrKind::JAL;
      d.rd = static_cast<uint8_t>(rd);
      d.imm = imm_j();
      break;
    case 0x67:
      if (funct3 == 0) i_type(InstrKind::JALR);
      break;
    case 0x63: {
      static constexpr InstrKind table[8] = {
          InstrKind::BEQ, InstrKind::BNE, InstrKind::ILLEGAL, InstrKind::ILLEGAL,
          InstrKind::BLT, InstrKind::BGE, InstrKind::BLTU, InstrKind::BGEU};
      InstrKind k = table[funct3];
      if (k != InstrKind::ILLEGAL) {
        d.kind = k;
        d.rs1 = static_cast<uint8_t>(rs1);
        d.rs2 = static_cast<uint8_t>(rs2);
        d.imm = imm_b();
        d.rs1_is_reg = d.rs2_is_reg = true;
      }
      break;
    }
    case 0x03: {
      static constexpr InstrKind table[8] = {
          InstrKind::LB, InstrKind::LH, InstrKind::LW, InstrKind::ILLEGAL,
          InstrKind::LBU, InstrKind::LHU, InstrKind::ILLEGAL, InstrKind::ILLEGAL};
      if (table[funct3] != InstrKind::ILLEGAL) i_type(table[funct3]);
      break;
    }
    case 0x23: {
      static constexpr InstrKind table[8] = {
          InstrKind::SB, InstrKind::SH, InstrKind::SW, InstrKind::ILLEGAL,
          InstrKind::ILLEGAL, InstrKind::ILLEGAL, InstrKind::ILLEGAL, InstrKind::ILLEGAL};
      if (table[funct3] != InstrKind::ILLEGAL) {
        d.kind = table[funct3];
        d.rs1 = static_cast<uint8_t>(rs1);
        d.rs2 = static_cast<uint8_t>(rs2);
        d.imm = imm_s();
        d.rs1_is_reg = d.rs2_is_reg = true;
      }
      break;
    }
    case 0x13: {
      switch (funct3) {
        case 0: i_type(InstrKind::ADDI); break;
        case 2: i_type(InstrKind::SLTI); break;
        case 3: i_type(InstrKind::SLTIU); break;
        case 4: i_type(InstrKind::XORI); break;
        case 6: i_type(InstrKind::ORI); break;
        case 7: i_type(InstrKind::ANDI); break;
        case 1:
          if (funct7 == 0) {
            i_type(InstrKind::SLLI);
            d.imm = static_cast<int32_t>(rs2);  // shamt
          }
          break;
        case 5:
          if (funct7 == 0) {
            i_type(InstrKind::SRLI);
            d.imm = static_cast<int32_t>(rs2);
          } else if (funct7 == 0x20) {
            i_type(InstrKind::SRAI);
            d.imm = static_cast<int32_t>(rs2);
          }
          break;
      }
      break;
    }
    case 0x33: {
      InstrKind k = InstrKind::ILLEGAL;
      if (funct7 == 0) {
        static constexpr InstrKind table[8] = {
            InstrKind::ADD, InstrKind::SLL, InstrKind::SLT, InstrKind::SLTU,
            InstrKind::XOR, InstrKind::SRL, InstrKind::OR, InstrKind::AND};
        k = table[funct3];
      } else if (funct7 == 0x20) {
        if (funct3 == 0) k = InstrKind::SUB;
        if (funct3 == 5) k = InstrKind::SRA;
      }
      if (k != InstrKind::ILLEGAL) {
        d.kind = k;
        d.rd = static_cast<uint8_t>(rd);
        d.rs1 = static_cast<uint8_t>(rs1);
        d.rs2 = static_cast<uint8_t>(rs2);
        d.rs1_is_reg = d.rs2_is_reg = true;
      }
      break;
    }
    case 0x73:
      if (word == 0x00100073u) d.kind = InstrKind::EBREAK;
      break;
    default:
      break;
  }

  if (d.kind == InstrKind::ILLEGAL) {
    d.rd = d.rs1 = d.rs2 = 0;
    d.imm = 0;
    d.rs1_is_reg = d.rs2_is_reg = false;
  }
  return d;
}

namespace {

struct EncInfo {
  uint32_t opcode;
  uint32_t funct3;
  uint32_t funct7;
  char format;  // U J I B S R, 'r' = I-type shift, 'E' = ebreak
};

EncInfo enc_info(InstrKind k) {
  switch (k) {
    case InstrKind::LUI: return {0x37, 0, 0, 'U'};
    case InstrKind::AUIPC: return {0x17, 0, 0, 'U'};
    case InstrKind::JAL: return {0x6f, 0, 0, 'J'};
    case InstrKind::JALR: return {0x67, 0, 0, 'I'};
    case InstrKind::BEQ: return {0x63, 0, 0, 'B'};
    case InstrKind::BNE: return {0x63, 1, 0, 'B'};
    case InstrKind::BLT: return {0x63, 4, 0, 'B'};
    case InstrKind::BGE: return {0x63, 5, 0, 'B'};
    case InstrKind::BLTU: return {0x63, 6, 0, 'B'};
    case InstrKind::BGEU: return {0x63, 7, 0, 'B'};
    case InstrKind::LB: return {0x03, 0, 0, 'I'};
    case InstrKind::LH: return {0x03, 1, 0, 'I'};
    case InstrKind::LW: return {0x03, 2, 0, 'I'};
    case InstrKind::LBU: return {0x03, 4, 0, 'I'};
    case InstrKind::LHU: return {0x03, 5, 0, 'I'};
    case InstrKind::SB: return {0x23, 0, 0, 'S'};
    case InstrKind::SH: return {0x23, 1, 0, 'S'};
    case InstrKind::SW: return {0x23, 2, 0, 'S'};
    case InstrKind::ADDI: return {0x13, 0, 0, 'I'};
    case InstrKind::SLTI: return {0x13, 2, 0, 'I'};
    case InstrKind::SLTIU: return {0x13, 3, 0, 'I'};
    case InstrKind::XORI: return {0x13, 4, 0, 'I'};
    case InstrKind::ORI: return {0x13, 6, 0, 'I'};
    case InstrKind::ANDI: return {0x13, 7, 0, 'I'};
    case InstrKind::SLLI: return {0x13, 1, 0, 'r'};
    case InstrKind::SRLI: return {0x13, 5, 0, 'r'};
    case InstrKind::SRAI: return {0x13, 5, 0x20, 'r'};
    case InstrKind::ADD: return {0x33, 0, 0, 'R'};
    case InstrKind::SUB: return {0x33, 0, 0x20, 'R'};
    case InstrKind::SLL: return {0x33, 1, 0, 'R'};
    case InstrKind::SLT: return {0x33, 2, 0, 'R'};
    case InstrKind::SLTU: return {0x33, 3, 0, 'R'};
    case InstrKind::XOR: return {0x33, 4, 0, 'R'};
    case InstrKind::SRL: return {0x33, 5, 0, 'R'};
    case InstrKind::SRA: return {0x33, 5, 0x20, 'R'};
    case InstrKind::OR: return {0x33, 6, 0, 'R'};
    case InstrKind::AND: return {0x33, 7, 0, 'R'};
    case InstrKind::EBREAK: return {0x73, 0, 0, 'E'};
    case InstrKind::ILLEGAL: return {0, 0, 0, '?'};
  }
  return {0, 0, 0, '?'};
}

}  // namespace

uint32_t encode(const Instr& in) {
  EncInfo e = enc_info(in.kind);
  uint32_t rd = in.rd & 31u;
  uint32_t rs1 = in.rs1 & 31u;
  uint32_t rs2 = in.rs2 & 31u;
  uint32_t imm = static_cast<uint32_t>(in.imm);
  switch (e.format) {
    case 'U':
      return (imm & 0xfffff000u) | (rd << 7) | e.opcode;
    case 'J':
      return (bits(imm, 20, 1) << 31) | (bits(imm, 1, 10) << 21) | (bits(imm, 11, 1) << 20) |
             (bits(imm, 12, 8) << 12) | (rd << 7) | e.opcode;
    case 'I':
      return (bits(imm, 0, 12) << 20) | (rs1 << 15) | (e.funct3 << 12) | (rd << 7) | e.opcode;
    case 'r':  // immediate shift: shamt in rs2 slot
      return (e.funct7 << 25) | ((imm & 31u) << 20) | (rs1 << 15) | (e.funct3 << 12) |
             (rd << 7) | e.opcode;
    case 'B':
      return (bits(imm, 12, 1) << 31) | (bits(imm, 5, 6) << 25) | (rs2 << 20) | (rs1 << 15) |
             (e.funct3 << 12) | (bits(imm, 1, 4) << 8) | (bits(imm, 11, 1) << 7) | e.opcode;
    case 'S':
      return (bits(imm, 5, 7) << 25) | (rs2 << 20) | (rs1 << 15) | (e.funct3 << 12) |
             (bits(imm, 0, 5) << 7) | e.opcode;
    case 'R':
      return (e.funct7 << 25) | (rs2 << 20) | (rs1 << 15) | (e.funct3 << 12) | (rd << 7) |
             e.opcode;
    case 'E':
      return 0x00100073u;
    default:
      return in.raw;
  }
}

// ---------------------------------------------------------------------------
// Golden executor
// ---------------------------------------------------------------------------

void ArchState::load_image(const std::vector<uint8_t>& image) {
  if (image.size() > mem.size()) {
    throw GoldenError(GoldenError::Kind::PcOutOfRange, "image larger than memory");
  }
  std::copy(image.begin(), image.end(), mem.begin());
}

namespace {

uint32_t read_word(const std::vector<uint8_t>& mem, uint32_t addr) {
  return static_cast<uint32_t>(mem[addr]) | (mem[addr + 1] << 8) | (mem[addr + 2] << 16) |
         (static_cast<uint32_t>(mem[addr + 3]) << 24);
}

}  // namespace

RetireInfo golden_step(ArchState& st) {
  if ((st.pc & 3u) != 0) {
    throw GoldenError(GoldenError::Kind::PcMisaligned,
                      "pc misaligned: " + std::to_string(st.pc));
  }
  if (static_cast<size_t>(st.pc) + 3 >= st.mem.size()) {
    throw GoldenError(GoldenError::Kind::PcOutOfRange,
                      "pc out of range: " + std::to_string(st.pc));
  }

  uint32_t word = read_word(st.mem, st.pc);
  Instr in = decode(word);
  RetireInfo r;
  r.insn = word;
  r.pc_rdata = st.pc;
  r.pc_wdata = st.pc + 4;

  if (in.rs1_is_reg) {
    r.rs1_addr = in.rs1;
    r.rs1_rdata = st.regs[in.rs1];
  }
  if (in.rs2_is_reg) {
    r.rs2_addr = in.rs2;
    r.rs2_rdata = st.regs[in.rs2];
  }

  uint32_t a = st.regs[in.rs1];
  uint32_t b = st.regs[in.rs2];
  uint32_t imm = static_cast<uint32_t>(in.imm);

  bool trap = false;
  bool taken = false;
  uint32_t target = 0;
  uint32_t rd_val = 0;
  bool write_rd = in.writes_rd();

  auto mem_bounds_ok = [&](uint32_t addr) {
    return static_cast<size_t>(addr) + 3 < st.mem.size();
  };

  switch (in.kind) {
    case InstrKind::LUI: rd_val = imm; break;
    case InstrKind::AUIPC: rd_val = st.pc + imm; break;
    case InstrKind::JAL:
      rd_val = st.pc + 4;
      taken = true;
      target = st.pc + imm;
      break;
    case InstrKind::JALR:
      rd_val = st.pc + 4;
      taken = true;
      target = (a + imm) & ~1u;
      break;
    case InstrKind::BEQ:
    case InstrKind::BNE:
    case InstrKind::BLT:
    case InstrKind::BGE:
    case InstrKind::BLTU:
    case InstrKind::BGEU: {
      switch (in.kind) {
        case InstrKind::BEQ: taken = a == b; break;
        case InstrKind::BNE: taken = a != b; break;
        case InstrKind::BLT: taken = static_cast<int32_t>(a) < static_cast<int32_t>(b); break;
        case InstrKind::BGE: taken = static_cast<int32_t>(a) >= static_cast<int32_t>(b); break;
        case InstrKind::BLTU: taken = a < b; break;
        default: taken = a >= b; break;
      }
      target = st.pc + imm;
      break;
    }
    case InstrKind::LB:
    case InstrKind::LH:
    case InstrKind::LW:
    case InstrKind::LBU:
    case InstrKind::LHU: {
      uint32_t addr = a + imm;
      int size = (in.kind == InstrKind::LW) ? 4 : (in.kind == InstrKind::LH || in.kind == InstrKind::LHU) ? 2 : 1;
      uint32_t addr_word = addr & ~3u;
      if ((addr & static_cast<uint32_t>(size - 1)) != 0 || !mem_bounds_ok(addr_word)) {
        trap = true;
        break;
      }
      uint32_t word_read = read_word(st.mem, addr_word);
      uint32_t off = addr & 3u;
      uint32_t shifted = word_read >> (8 * off);
      switch (in.kind) {
        case InstrKind::LB: rd_val = static_cast<uint32_t>(sext(shifted & 0xff, 8)); break;
        case InstrKind::LH: rd_val = static_cast<uint32_t>(sext(shifted & 0xffff, 16)); break;
        case InstrKind::LW: rd_val = word_read; break;
        case InstrKind::LBU: rd_val = shifted & 0xff; break;
        case InstrKind::LHU: rd_val = shifted & 0xffff; break;
        default: break;
      }
      uint32_t base_mask = (size == 4) ? 0xf : (size == 2) ? 0x3 : 0x1;
      r.mem_addr = addr_word;
      r.mem_rmask = static_cast<uint8_t>(base_mask << off);
      uint32_t lane_mask = 0;
      for (int i = 0; i < 4; ++i) {
        if ((r.mem_rmask >> i) & 1) lane_mask |= 0xffu << (8 * i);
      }
      r.mem_rdata = word_read & lane_mask;
      break;
    }
    case InstrKind::SB:
    case InstrKind::SH:
    case InstrKind::SW: {
      uint32_t addr = a + imm;
      int size = (in.kind == InstrKind::SW) ? 4 : (in.kind == InstrKind::SH) ? 2 : 1;
      uint32_t addr_word = addr & ~3u;
      if ((addr & static_cast<uint32_t>(size - 1)) != 0 || !mem_bounds_ok(addr_word)) {
        trap = true;
        break;
      }
      uint32_t off = addr & 3u;
      uint32_t base_mask = (size == 4) ? 0xf : (size == 2) ? 0x3 : 0x1;
      uint8_t wmask = static_cast<uint8_t>(base_mask << off);
      uint32_t data = b << (8 * off);
      for (int i = 0; i < 4; ++i) {
        if ((wmask >> i) & 1) st.mem[addr_word + static_cast<uint32_t>(i)] =
            static_cast<uint8_t>(data >> (8 * i));
      }
      uint32_t lane_mask = 0;
      for (int i = 0; i < 4; ++i) {
        if ((wmask >> i) & 1) lane_mask |= 0xffu << (8 * i);
      }
      r.mem_addr = addr_word;
      r.mem_wmask = wmask;
      r.mem_wdata = data & lane_mask;
      break;
    }
    case InstrKind::ADDI: rd_val = a + imm; break;
    case InstrKind::SLTI: rd_val = static_cast<int32_t>(a) < static_cast<int32_t>(imm); break;
    case InstrKind::SLTIU: rd_val = a < imm; break;
    case InstrKind::XORI: rd_val = a ^ imm; break;
    case InstrKind::ORI: rd_val = a | imm; break;
    case InstrKind::ANDI: rd_val = a & imm; break;
    case InstrKind::SLLI: rd_val = a << (imm & 31); break;
    case InstrKind::SRLI: rd_val = a >> (imm & 31); break;
    case InstrKind::SRAI: rd_val = static_cast<uint32_t>(static_cast<int32_t>(a) >> (imm & 31)); break;
    case InstrKind::ADD: rd_val = a + b; break;
    case InstrKind::SUB: rd_val = a - b; break;
    case InstrKind::SLL: rd_val = a << (b & 31); break;
    case InstrKind::SLT: rd_val = static_cast<int32_t>(a) < static_cast<int32_t>(b); break;
    case InstrKind::SLTU: rd_val = a < b; break;
    case InstrKind::XOR: rd_val = a ^ b; break;
    case InstrKind::SRL: rd_val = a >> (b & 31); break;
    case InstrKind::SRA: rd_val = static_cast<uint32_t>(static_cast<int32_t>(a) >> (b & 31)); break;
    case InstrKind::OR: rd_val = a | b; break;
    case InstrKind::AND: rd_val = a & b; break;
    case InstrKind::EBREAK:
      r.halt = true;
      break;
    case InstrKind::ILLEGAL:
      trap = true;
      break;
  }

  if (taken && !trap && (target & 3u) != 0) {
    // misaligned control-flow target: trap, no redirect
    trap = true;
    taken = false;
    write_rd = false;
  }

  if (trap) {
    r.trap = true;
    r.mem_addr = 0;
    r.mem_rmask = r.mem_wmask = 0;
    r.mem_rdata = r.mem_wdata = 0;
  } else {
    if (write_rd && in.rd != 0) {
      st.regs[in.rd] = rd_val;
      r.rd_addr = in.rd;
      r.rd_wdata = rd_val;
    } else if (write_rd) {
      r.rd_addr = 0;
      r.rd_wdata = 0;
    }
    if (taken) r.pc_wdata = target;
  }

  st.pc = r.pc_wdata;
  st.regs[0] = 0;
  return r;
}

// ---------------------------------------------------------------------------
// Assembler
// ---------------------------------------------------------------------------

namespace {

struct Token {
  std::string text;
};

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == '#') break;
    if (std::isspace(static_cast<unsigned char>(c)) || c == ',' || c == '(' || c == ')') {
      if (c == '(' || c == ')') {
        if (!cur.empty()) { out.push_back(cur); cur.clear(); }
        continue;
      }
      if (!cur.empty()) { out.push_back(cur); cur.clear(); }
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

int parse_reg(const std::string& tok, int line) {
  if (tok.size() >= 2 && (tok[0] == 'x' || tok[0] == 'X')) {
    int idx = 0;
    for (size_t i = 1; i < tok.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(tok[i]))) idx = -1;
    }
    if (idx == 0) idx = std::atoi(tok.c_str() + 1);
    if (idx >= 0 && idx < 32) return idx;
  }
  throw AsmError(AsmError::Kind::SyntaxError, line, "expected register, got '" + tok + "'");
}

int64_t parse_int(const std::string& tok, int line) {
  try {
    size_t pos = 0;
    int64_t v = std::stoll(tok, &pos, 0);  // handles decimal and 0x
    if (pos != tok.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (...) {
    throw AsmError(AsmError::Kind::SyntaxError, line, "expected number, got '" + tok + "'");
  }
}

InstrKind mnemonic_kind(const std::string& m) {
  for (int i = 0; i < kNumInstrKinds; ++i) {
    if (m == kKindNames[i]) return static_cast<InstrKind>(i);
  }
  return InstrKind::ILLEGAL;
}

void check_imm_range(int64_t v, int bits_count, int line, bool is_unsigned = false) {
  int64_t lo = is_unsigned ? 0 : -(int64_t{1} << (bits_count - 1));
  int64_t hi = is_unsigned ? (int64_t{1} << bits_count) - 1 : (int64_t{1} << (bits_count - 1)) - 1;
  if (v < lo || v > hi) {
    throw AsmError(AsmError::Kind::ImmediateOutOfRange, line,
                   "immediate " + std::to_string(v) + " out of range");
  }
}

}  // namespace

std::vector<uint32_t> assemble(const std::string& source) {
  struct Line {
    int number;
    std::vector<std::string> toks;
  };

  // Pass 1: strip labels, record addresses.
  std::vector<Line> lines;
  std::unordered_map<std::string, uint32_t> labels;
  {
    std::istringstream is(source);
    std::string raw;
    int number = 0;
    while (std::getline(is, raw)) {
      ++number;
      auto toks = tokenize(raw);
      while (!toks.empty() && toks.front().back() == ':') {
        std::string label = toks.front().substr(0, toks.front().size() - 1);
        if (label.empty()) {
          throw AsmError(AsmError::Kind::SyntaxError, number, "empty label");
        }
        labels[label] = static_cast<uint32_t>(lines.size() * 4);
        toks.erase(toks.begin());
      }
      if (toks.empty()) continue;
      lines.push_back(Line{number, std::move(toks)});
    }
  }

  // Pass 2: encode.
  std::vector<uint32_t> words;
  for (size_t idx = 0; idx < lines.size(); ++idx) {
    const auto& line = lines[idx];
    const auto& t = line.toks;
    int ln = line.number;
    uint32_t pc = static_cast<uint32_t>(idx * 4);
    std::string m = t[0];
    std::transform(m.begin(), m.end(), m.begin(), ::tolower);

    auto need = [&](size_t count) {
      if (t.size() != count) {
        throw AsmError(AsmError::Kind::SyntaxError, ln,
                       "expected " + std::to_string(count - 1) + " operands for " + m);
      }
    };
    auto target_of = [&](const std::string& tok) -> int64_t {
      auto it = labels.find(tok);
      if (it != labels.end()) return static_cast<int64_t>(it->second) - pc;
      return parse_int(tok, ln);
    };

    if (m == ".word") {
      need(2);
      words.push_back(static_cast<uint32_t>(parse_int(t[1], ln) & 0xffffffff));
      continue;
    }

    InstrKind kind = mnemonic_kind(m);
    if (kind == InstrKind::ILLEGAL) {
      throw AsmError(AsmError::Kind::UnknownMnemonic, ln, "unknown mnemonic '" + m + "'");
    }

    Instr in;
    in.kind = kind;
    switch (kind) {
      case InstrKind::LUI:
      case InstrKind::AUIPC: {
        need(3);
        in.rd = static_cast<uint8_t>(parse_reg(t[1], ln));
        int64_t v = parse_int(t[2], ln);
        check_imm_range(v, 20, ln, true);
        in.imm = static_cast<int32_t>(v << 12);
        break;
      }
      case InstrKind::JAL: {
        need(3);
        in.rd = static_cast<uint8_t>(parse_reg(t[1], ln));
        int64_t off = target_of(t[2]);
        check_imm_range(off, 21, ln);
        in.imm = static_cast<int32_t>(off);
        break;
      }
      case InstrKind::JALR: {
        need(4);
        in.rd = static_cast<uint8_t>(parse_reg(t[1], ln));
        in.rs1 = static_cast<uint8_t>(parse_reg(t[2], ln));
        int64_t v = parse_int(t[3], ln);
        check_imm_range(v, 12, ln);
        in.imm = static_cast<int32_t>(v);
        break;
      }
      case InstrKind::BEQ:
      case InstrKind::BNE:
      case InstrKind::BLT:
      case InstrKind::BGE:
      case InstrKind::BLTU:
      case InstrKind::BGEU: {
        need(4);
        in.rs1 = static_cast<uint8_t>(parse_reg(t[1], ln));
        in.rs2 = static_cast<uint8_t>(parse_reg(t[2], ln));
        int64_t off = target_of(t[3]);
        check_imm_range(off, 13, ln);
        in.imm = static_cast<int32_t>(off);
        break;
      }
      case InstrKind::LB:
      case InstrKind::LH:
      case InstrKind::LW:
      case InstrKind::LBU:
      case InstrKind::LHU: {
        need(4);  // lw rd, imm(rs1) tokenizes to [lw, rd, imm, rs1]
        in.rd = static_cast<uint8_t>(parse_reg(t[1], ln));
        int64_t v = parse_int(t[2], ln);
        check_imm_range(v, 12, ln);
        in.imm = static_cast<int32_t>(v);
        in.rs1 = static_cast<uint8_t>(parse_reg(t[3], ln));
        break;
      }
      case InstrKind::SB:
      case InstrKind::SH:
      case InstrKind::SW: {
        need(4);
        in.rs2 = static_cast<uint8_t>(parse_reg(t[1], ln));
        int64_t v = parse_int(t[2], ln);
        check_imm_range(v, 12, ln);
        in.imm = static_cast<int32_t>(v);
        in.rs1 = static_cast<uint8_t>(parse_reg(t[3], ln));
        break;
      }
      case InstrKind::ADDI:
      case InstrKind::SLTI:
      case InstrKind::SLTIU:
      case InstrKind::XORI:
      case InstrKind::ORI:
      case InstrKind::ANDI: {
        need(4);
        in.rd = static_cast<uint8_t>(parse_reg(t[1], ln));
        in.rs1 = static_cast<uint8_t>(parse_reg(t[2], ln));
        int64_t v = parse_int(t[3], ln);
        check_imm_range(v, 12, ln);
        in.imm = static_cast<int32_t>(v);
        break;
      }
      case InstrKind::SLLI:
      case InstrKind::SRLI:
      case InstrKind::SRAI: {
        need(4);
        in.rd = static_cast<uint8_t>(parse_reg(t[1], ln));
        in.rs1 = static_cast<uint8_t>(parse_reg(t[2], ln));
        int64_t v = parse_int(t[3], ln);
        if (v < 0 || v > 31) {
          throw AsmError(AsmError::Kind::ImmediateOutOfRange, ln, "shift amount out of range");
        }
        in.imm = static_cast<int32_t>(v);
        break;
      }
      case InstrKind::ADD:
      case InstrKind::SUB:
      case InstrKind::SLL:
      case InstrKind::SLT:
      case InstrKind::SLTU:
      case InstrKind::XOR:
      case InstrKind::SRL:
      case InstrKind::SRA:
      case InstrKind::OR:
      case InstrKind::AND: {
        need(4);
        in.rd = static_cast<uint8_t>(parse_reg(t[1], ln));
        in.rs1 = static_cast<uint8_t>(parse_reg(t[2], ln));
        in.rs2 = static_cast<uint8_t>(parse_reg(t[3], ln));
        break;
      }
      case InstrKind::EBREAK:
        need(1);
        break;
      case InstrKind::ILLEGAL:
        break;
    }
    words.push_back(encode(in));
  }
  return words;
}

std::vector<uint8_t> words_to_image(const std::vector<uint32_t>& words) {
  std::vector<uint8_t> image;
  image.reserve(words.size() * 4);
  for (uint32_t w : words) {
    image.push_back(static_cast<uint8_t>(w));
    image.push_back(static_cast<uint8_t>(w >> 8));
    image.push_back(static_cast<uint8_t>(w >> 16));
    image.push_back(static_cast<uint8_t>(w >> 24));
  }
  return image;
}

}  // namespace warpkit::isa
