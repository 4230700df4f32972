#include "warpkit/checker.hpp"

#include <algorithm>
#include <future>
#include <sstream>
#include <thread>

#include "warpkit/harness.hpp"

namespace warpkit::checker {

const char* violation_name(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::DuplicateOrder: return "DuplicateOrder";
    case ViolationKind::OrderGap: return "OrderGap";
    case ViolationKind::InsnMismatch: return "InsnMismatch";
    case ViolationKind::Rs1Mismatch: return "Rs1Mismatch";
    case ViolationKind::Rs2Mismatch: return "Rs2Mismatch";
    case ViolationKind::RdMismatch: return "RdMismatch";
    case ViolationKind::PcMismatch: return "PcMismatch";
    case ViolationKind::MemMismatch: return "MemMismatch";
    case ViolationKind::X0Nonzero: return "X0Nonzero";
    case ViolationKind::TrapMismatch: return "TrapMismatch";
    case ViolationKind::HaltMismatch: return "HaltMismatch";
    case ViolationKind::IncompleteTrace: return "IncompleteTrace";
  }
  return "?";
}

std::string Violation::message() const {
  std::ostringstream os;
  os << violation_name(kind) << " at order " << order;
  if (!field.empty()) {
    os << " (" << field << ": expected " << expected << ", actual " << actual << ")";
  }
  if (context) os << " [program " << context << "]";
  return os.str();
}

void CheckReport::merge(const CheckReport& other) {
  pass = pass && other.pass;
  violations.insert(violations.end(), other.violations.begin(), other.violations.end());
  instructions_checked += other.instructions_checked;
  programs_checked += other.programs_checked;
}

// ---------------------------------------------------------------------------
// check_trace
// ---------------------------------------------------------------------------

namespace {

// One violation per record at most, first differing field in a fixed order.
std::optional<Violation> compare_record(const RvfiRecord& got, const RvfiRecord& want) {
  Violation v;
  v.order = want.order;
  auto fail = [&](ViolationKind kind, const char* field, uint64_t expected, uint64_t actual) {
    v.kind = kind;
    v.field = field;
    v.expected = expected;
    v.actual = actual;
    return v;
  };
  if (got.rd_addr == 0 && got.rd_wdata != 0) {
    return fail(ViolationKind::X0Nonzero, "rd_wdata", 0, got.rd_wdata);
  }
  if (got.insn != want.insn) return fail(ViolationKind::InsnMismatch, "insn", want.insn, got.insn);
  if (got.rs1_addr != want.rs1_addr)
    return fail(ViolationKind::Rs1Mismatch, "rs1_addr", want.rs1_addr, got.rs1_addr);
  if (got.rs1_rdata != want.rs1_rdata)
    return fail(ViolationKind::Rs1Mismatch, "rs1_rdata", want.rs1_rdata, got.rs1_rdata);
  if (got.rs2_addr != want.rs2_addr)
    return fail(ViolationKind::Rs2Mismatch, "rs2_addr", want.rs2_addr, got.rs2_addr);
  if (got.rs2_rdata != want.rs2_rdata)
    return fail(ViolationKind::Rs2Mismatch, "rs2_rdata", want.rs2_rdata, got.rs2_rdata);
  if (got.rd_addr != want.rd_addr)
    return fail(ViolationKind::RdMismatch, "rd_addr", want.rd_addr, got.rd_addr);
  if (got.rd_wdata != want.rd_wdata)
    return fail(ViolationKind::RdMismatch, "rd_wdata", want.rd_wdata, got.rd_wdata);
  if (got.pc_rdata != want.pc_rdata)
    return fail(ViolationKind::PcMismatch, "pc_rdata", want.pc_rdata, got.pc_rdata);
  if (got.pc_wdata != want.pc_wdata)
    return fail(ViolationKind::PcMismatch, "pc_wdata", want.pc_wdata, got.pc_wdata);
  if (got.mem_addr != want.mem_addr)
    return fail(ViolationKind::MemMismatch, "mem_addr", want.mem_addr, got.mem_addr);
  if (got.mem_rmask != want.mem_rmask)
    return fail(ViolationKind::MemMismatch, "mem_rmask", want.mem_rmask, got.mem_rmask);
  if (got.mem_wmask != want.mem_wmask)
    return fail(ViolationKind::MemMismatch, "mem_wmask", want.mem_wmask, got.mem_wmask);
  if (got.mem_rdata != want.mem_rdata)
    return fail(ViolationKind::MemMismatch, "mem_rdata", want.mem_rdata, got.mem_rdata);
  if (got.mem_wdata != want.mem_wdata)
    return fail(ViolationKind::MemMismatch, "mem_wdata", want.mem_wdata, got.mem_wdata);
  if (got.trap != want.trap) return fail(ViolationKind::TrapMismatch, "trap", want.trap, got.trap);
  if (got.intr != want.intr) return fail(ViolationKind::TrapMismatch, "intr", want.intr, got.intr);
  if (got.halt != want.halt) return fail(ViolationKind::HaltMismatch, "halt", want.halt, got.halt);
  return std::nullopt;
}

}  // namespace

CheckReport check_trace(const RvfiTrace& trace, const std::vector<uint8_t>& image,
                        size_t mem_size) {
  CheckReport report;
  report.programs_checked = 1;

  std::vector<RvfiRecord> sorted = trace.records;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const RvfiRecord& a, const RvfiRecord& b) { return a.order < b.order; });

  // Density first: orders must be exactly 0..N-1.
  for (size_t i = 0; i < sorted.size(); ++i) {
    if (i > 0 && sorted[i].order == sorted[i - 1].order) {
      Violation v;
      v.kind = ViolationKind::DuplicateOrder;
      v.order = sorted[i].order;
      report.violations.push_back(v);
    } else if (sorted[i].order != i) {
      Violation v;
      v.kind = ViolationKind::OrderGap;
      v.order = i;  // the missing order
      v.field = "order";
      v.expected = i;
      v.actual = sorted[i].order;
      report.violations.push_back(v);
      break;  // everything after is shifted; one report keeps it focused
    }
  }

  // Golden replay.
  isa::ArchState golden(mem_size);
  golden.load_image(image);
  bool golden_halted = false;
  for (size_t i = 0; i < sorted.size(); ++i) {
    if (golden_halted) {
      Violation v;
      v.kind = ViolationKind::IncompleteTrace;
      v.order = sorted[i].order;
      v.field = "records_after_halt";
      report.violations.push_back(v);
      break;
    }
    // Catch the golden model up to this record's order; the replay follows
    // the golden state even when the trace skipped an order.
    isa::RetireInfo want;
    bool stepped = false;
    for (uint64_t k = report.instructions_checked; k <= sorted[i].order && !golden_halted; ++k) {
      try {
        want = isa::golden_step(golden);
      } catch (const isa::GoldenError& e) {
        throw MalformedTrace(std::string("golden model cannot follow trace: ") + e.what());
      }
      want.order = k;
      stepped = true;
      if (want.halt && k < sorted[i].order) golden_halted = true;
    }
    report.instructions_checked = sorted[i].order + 1;
    if (!stepped) continue;
    if (auto v = compare_record(sorted[i], want)) {
      report.violations.push_back(*v);
    }
    if (want.halt) golden_halted = true;
  }

  if (!trace.complete || sorted.empty() || !golden_halted) {
    Violation v;
    v.kind = ViolationKind::IncompleteTrace;
    v.order = sorted.empty() ? 0 : sorted.back().order;
    v.field = "halt";
    report.violations.push_back(v);
  }

  report.pass = report.violations.empty();
  return report;
}

// ---------------------------------------------------------------------------
// gen_program
// ---------------------------------------------------------------------------

namespace {

// splitmix64; stable across platforms, unlike <random> distributions
struct Rng {
  uint64_t state;
  explicit Rng(uint64_t seed) : state(seed) {}
  uint64_t next() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  uint32_t below(uint32_t n) { return n ? static_cast<uint32_t>(next() % n) : 0; }
  bool chance(uint32_t num, uint32_t den) { return below(den) < num; }
};

}  // namespace

GenWeights GenWeights::defaults() {
  GenWeights w;
  auto s = [&](isa::InstrKind k, uint32_t v) { w.weight[static_cast<size_t>(k)] = v; };
  s(isa::InstrKind::ADDI, 10);
  s(isa::InstrKind::SLTI, 2);
  s(isa::InstrKind::SLTIU, 2);
  s(isa::InstrKind::XORI, 2);
  s(isa::InstrKind::ORI, 2);
  s(isa::InstrKind::ANDI, 2);
  s(isa::InstrKind::SLLI, 2);
  s(isa::InstrKind::SRLI, 2);
  s(isa::InstrKind::SRAI, 2);
  s(isa::InstrKind::ADD, 4);
  s(isa::InstrKind::SUB, 3);
  s(isa::InstrKind::SLL, 2);
  s(isa::InstrKind::SLT, 2);
  s(isa::InstrKind::SLTU, 2);
  s(isa::InstrKind::XOR, 2);
  s(isa::InstrKind::SRL, 2);
  s(isa::InstrKind::SRA, 2);
  s(isa::InstrKind::OR, 2);
  s(isa::InstrKind::AND, 2);
  s(isa::InstrKind::LUI, 3);
  s(isa::InstrKind::AUIPC, 2);
  s(isa::InstrKind::LW, 6);
  s(isa::InstrKind::LH, 2);
  s(isa::InstrKind::LB, 2);
  s(isa::InstrKind::LHU, 2);
  s(isa::InstrKind::LBU, 2);
  s(isa::InstrKind::SW, 5);
  s(isa::InstrKind::SH, 2);
  s(isa::InstrKind::SB, 2);
  s(isa::InstrKind::BEQ, 2);
  s(isa::InstrKind::BNE, 2);
  s(isa::InstrKind::BLT, 2);
  s(isa::InstrKind::BGE, 2);
  s(isa::InstrKind::BLTU, 2);
  s(isa::InstrKind::BGEU, 2);
  s(isa::InstrKind::JAL, 1);
  s(isa::InstrKind::JALR, 1);
  s(isa::InstrKind::ILLEGAL, 1);
  return w;
}

GenWeights GenWeights::alu_only() {
  GenWeights w;
  auto s = [&](isa::InstrKind k, uint32_t v) { w.weight[static_cast<size_t>(k)] = v; };
  s(isa::InstrKind::ADDI, 8);
  s(isa::InstrKind::ADD, 4);
  s(isa::InstrKind::SUB, 2);
  s(isa::InstrKind::XOR, 2);
  s(isa::InstrKind::OR, 2);
  s(isa::InstrKind::AND, 2);
  s(isa::InstrKind::LUI, 2);
  return w;
}

GenWeights& GenWeights::set(isa::InstrKind kind, uint32_t w) {
  weight[static_cast<size_t>(kind)] = w;
  return *this;
}

std::vector<uint8_t> gen_program(uint64_t seed, int length, const GenWeights& weights) {
  if (length < 1) length = 1;
  Rng rng(seed * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull);

  uint32_t total_weight = 0;
  for (uint32_t w : weights.weight) total_weight += w;
  if (total_weight == 0) {
    // nothing enabled: a lone EBREAK
    return isa::words_to_image(isa::assemble("ebreak"));
  }

  // Data accesses go to a scratch window just above the code.
  uint32_t code_bytes = static_cast<uint32_t>(length + 1) * 4;
  uint32_t scratch_base = (code_bytes + 15u) & ~15u;
  uint32_t scratch_words = 16;

  auto pick_kind = [&]() -> isa::InstrKind {
    uint32_t roll = rng.below(total_weight);
    for (int k = 0; k < isa::kNumInstrKinds; ++k) {
      uint32_t w = weights.weight[static_cast<size_t>(k)];
      if (roll < w) return static_cast<isa::InstrKind>(k);
      roll -= w;
    }
    return isa::InstrKind::ADDI;
  };

  auto pick_reg = [&]() -> uint8_t {
    // x0 occasionally, else x1..x8 for hazard density
    if (rng.chance(1, 16)) return 0;
    return static_cast<uint8_t>(1 + rng.below(8));
  };

  std::vector<uint32_t> words;
  uint8_t last_load_rd = 0;
  for (int i = 0; i < length; ++i) {
    isa::InstrKind kind = pick_kind();
    isa::Instr in;
    in.kind = kind;
    int remaining = length - i;  // instructions after this one, incl. ebreak

    auto forward_words = [&]() -> int32_t {
      int span = std::min(remaining, 6);
      return static_cast<int32_t>(1 + rng.below(static_cast<uint32_t>(span)));
    };

    uint8_t biased_src = last_load_rd;
    auto src_reg = [&]() -> uint8_t {
      if (biased_src != 0 && rng.chance(weights.load_use_per_16, 16)) return biased_src;
      return pick_reg();
    };

    switch (kind) {
      case isa::InstrKind::LUI:
      case isa::InstrKind::AUIPC:
        in.rd = pick_reg();
        in.imm = static_cast<int32_t>((rng.next() & 0xfffff) << 12);
        break;
      case isa::InstrKind::JAL:
        in.rd = pick_reg();
        in.imm = forward_words() * 4;
        break;
      case isa::InstrKind::JALR:
        // absolute forward target through x0 so the jump stays in the program
        in.rd = pick_reg();
        in.rs1 = 0;
        in.imm = static_cast<int32_t>((static_cast<uint32_t>(i) + 1 +
                                       rng.below(static_cast<uint32_t>(std::min(remaining, 6)))) *
                                      4);
        break;
      case isa::InstrKind::BEQ:
      case isa::InstrKind::BNE:
      case isa::InstrKind::BLT:
      case isa::InstrKind::BGE:
      case isa::InstrKind::BLTU:
      case isa::InstrKind::BGEU:
        in.rs1 = src_reg();
        in.rs2 = src_reg();
        in.imm = forward_words() * 4;
        break;
      case isa::InstrKind::LB:
      case isa::InstrKind::LBU:
      case isa::InstrKind::LH:
      case isa::InstrKind::LHU:
      case isa::InstrKind::LW: {
        in.rd = pick_reg();
        in.rs1 = 0;  // scratch addressing from x0
        uint32_t offset = scratch_base + 4 * rng.below(scratch_words);
        int size = (kind == isa::InstrKind::LW) ? 4
                   : (kind == isa::InstrKind::LH || kind == isa::InstrKind::LHU) ? 2 : 1;
        if (size < 4) offset += rng.below(static_cast<uint32_t>(4 / size)) * size;
        if (rng.chance(weights.misaligned_per_16, 16) && size > 1) offset += 1;
        in.imm = static_cast<int32_t>(offset);
        last_load_rd = in.rd;
        break;
      }
      case isa::InstrKind::SB:
      case isa::InstrKind::SH:
      case isa::InstrKind::SW: {
        in.rs2 = src_reg();
        in.rs1 = 0;
        uint32_t offset = scratch_base + 4 * rng.below(scratch_words);
        int size = (kind == isa::InstrKind::SW) ? 4 : (kind == isa::InstrKind::SH) ? 2 : 1;
        if (size < 4) offset += rng.below(static_cast<uint32_t>(4 / size)) * size;
        if (rng.chance(weights.misaligned_per_16, 16) && size > 1) offset += 1;
        in.imm = static_cast<int32_t>(offset);
        break;
      }
      case isa::InstrKind::SLLI:
      case isa::InstrKind::SRLI:
      case isa::InstrKind::SRAI:
        in.rd = pick_reg();
        in.rs1 = src_reg();
        in.imm = static_cast<int32_t>(rng.below(32));
        break;
      case isa::InstrKind::ADDI:
      case isa::InstrKind::SLTI:
      case isa::InstrKind::SLTIU:
      case isa::InstrKind::XORI:
      case isa::InstrKind::ORI:
      case isa::InstrKind::ANDI:
        in.rd = pick_reg();
        in.rs1 = src_reg();
        in.imm = rng.chance(1, 8) ? static_cast<int32_t>(rng.below(4096)) - 2048
                                  : static_cast<int32_t>(rng.below(128)) - 64;
        break;
      case isa::InstrKind::EBREAK:
      case isa::InstrKind::ILLEGAL:
        break;
      default:  // register-register ALU
        in.rd = pick_reg();
        in.rs1 = src_reg();
        in.rs2 = src_reg();
        break;
    }

    if (kind != isa::InstrKind::LB && kind != isa::InstrKind::LBU &&
        kind != isa::InstrKind::LH && kind != isa::InstrKind::LHU &&
        kind != isa::InstrKind::LW) {
      last_load_rd = 0;
    }

    if (kind == isa::InstrKind::ILLEGAL) {
      words.push_back(0);  // all-zero word decodes as illegal
    } else if (kind == isa::InstrKind::EBREAK) {
      words.push_back(isa::encode(in));
    } else {
      words.push_back(isa::encode(in));
    }
  }
  isa::Instr fin;
  fin.kind = isa::InstrKind::EBREAK;
  words.push_back(isa::encode(fin));
  return isa::words_to_image(words);
}

// ---------------------------------------------------------------------------
// fuzz
// ---------------------------------------------------------------------------

namespace {

uint64_t program_seed(uint64_t seed, int index) {
  return seed ^ (0x61c8864680b583ebull * static_cast<uint64_t>(index + 1));
}

CheckReport run_one(const core::CoreConfig& config,
                    const stagegraph::ElaboratedDesign& design, uint64_t seed, int index,
                    int length, const core::SimOptions& sim) {
  std::vector<uint8_t> image = gen_program(program_seed(seed, index), length);
  CheckReport r;
  try {
    core::SimResult res = core::simulate_elaborated(design, config, image, sim);
    if (!res.stats.halted) {
      Violation v;
      v.kind = ViolationKind::IncompleteTrace;
      v.field = "timeout";
      v.context = static_cast<uint64_t>(index);
      r.violations.push_back(v);
      r.programs_checked = 1;
      r.pass = false;
      return r;
    }
    r = check_trace(res.trace, image, config.mem_size);
  } catch (const std::exception& e) {
    Violation v;
    v.kind = ViolationKind::IncompleteTrace;
    v.field = std::string("error: ") + e.what();
    v.context = static_cast<uint64_t>(index);
    r.violations.push_back(v);
    r.programs_checked = 1;
    r.pass = false;
    return r;
  }
  for (auto& v : r.violations) v.context = static_cast<uint64_t>(index);
  return r;
}

}  // namespace

CheckReport fuzz(const core::CoreConfig& config, uint64_t seed, int n_programs,
                 const FuzzOptions& options) {
  core::validate_config(config);
  stagegraph::DesignGraph graph = core::build_core(config);
  harness::AttachOptions attach;
  attach.mutation = options.sim.mutation;
  harness::attach_rvfi(graph, attach);
  stagegraph::ElaborateTweaks tweaks;
  if (options.sim.mutation == core::Mutation::RecircDelayPlusOne) tweaks.arc_delay_adjust = 1;
  if (options.sim.mutation == core::Mutation::RecircDelayMinusOne) tweaks.arc_delay_adjust = -1;
  stagegraph::ElaboratedDesign design =
      stagegraph::elaborate(graph, config.stage_map, tweaks);

  CheckReport total;
  int jobs = std::max(1, options.jobs);
  if (jobs == 1) {
    for (int i = 0; i < n_programs; ++i) {
      total.merge(run_one(config, design, seed, i, options.length, options.sim));
    }
  } else {
    std::vector<CheckReport> results(static_cast<size_t>(n_programs));
    std::atomic<int> next{0};
    auto worker = [&]() {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= n_programs) return;
        results[static_cast<size_t>(i)] =
            run_one(config, design, seed, i, options.length, options.sim);
      }
    };
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    for (const auto& r : results) total.merge(r);  // merged in seed order
  }
  return total;
}

// ---------------------------------------------------------------------------
// exhaustive pairs
// ---------------------------------------------------------------------------

namespace {

// Per-slot variants of one kind over the operand pools.
std::vector<isa::Instr> slot_variants(isa::InstrKind kind, const PairSpec& spec, int slot_index,
                                      int program_slots) {
  std::vector<isa::Instr> out;
  uint32_t ebreak_addr = static_cast<uint32_t>(program_slots) * 4;
  uint32_t pc = static_cast<uint32_t>(slot_index) * 4;
  uint32_t scratch = (ebreak_addr + 4 + 15u) & ~15u;

  auto push = [&](isa::Instr in) {
    in.kind = kind;
    out.push_back(in);
  };

  isa::Instr base;
  switch (kind) {
    case isa::InstrKind::ADD:
    case isa::InstrKind::SUB:
    case isa::InstrKind::SLL:
    case isa::InstrKind::SLT:
    case isa::InstrKind::SLTU:
    case isa::InstrKind::XOR:
    case isa::InstrKind::SRL:
    case isa::InstrKind::SRA:
    case isa::InstrKind::OR:
    case isa::InstrKind::AND:
      for (uint8_t rd : spec.regs)
        for (uint8_t rs1 : spec.regs)
          for (uint8_t rs2 : spec.regs) {
            isa::Instr in = base;
            in.rd = rd; in.rs1 = rs1; in.rs2 = rs2;
            push(in);
          }
      break;
    case isa::InstrKind::ADDI:
    case isa::InstrKind::SLTI:
    case isa::InstrKind::SLTIU:
    case isa::InstrKind::XORI:
    case isa::InstrKind::ORI:
    case isa::InstrKind::ANDI:
      for (uint8_t rd : spec.regs)
        for (uint8_t rs1 : spec.regs)
          for (int32_t imm : spec.imms) {
            isa::Instr in = base;
            in.rd = rd; in.rs1 = rs1; in.imm = imm;
            push(in);
          }
      break;
    case isa::InstrKind::SLLI:
    case isa::InstrKind::SRLI:
    case isa::InstrKind::SRAI:
      for (uint8_t rd : spec.regs)
        for (uint8_t rs1 : spec.regs)
          for (int32_t imm : spec.imms) {
            isa::Instr in = base;
            in.rd = rd; in.rs1 = rs1; in.imm = imm & 31;
            push(in);
          }
      break;
    case isa::InstrKind::LUI:
    case isa::InstrKind::AUIPC:
      for (uint8_t rd : spec.regs)
        for (int32_t imm : spec.imms) {
          isa::Instr in = base;
          in.rd = rd;
          in.imm = static_cast<int32_t>(static_cast<uint32_t>(imm) << 12);
          push(in);
        }
      break;
    case isa::InstrKind::LB:
    case isa::InstrKind::LH:
    case isa::InstrKind::LW:
    case isa::InstrKind::LBU:
    case isa::InstrKind::LHU:
      for (uint8_t rd : spec.regs)
        for (size_t i = 0; i < spec.imms.size(); ++i) {
          isa::Instr in = base;
          in.rd = rd;
          in.rs1 = 0;
          in.imm = static_cast<int32_t>(scratch + 4 * static_cast<uint32_t>(i));
          push(in);
        }
      break;
    case isa::InstrKind::SB:
    case isa::InstrKind::SH:
    case isa::InstrKind::SW:
      for (uint8_t rs2 : spec.regs)
        for (size_t i = 0; i < spec.imms.size(); ++i) {
          isa::Instr in = base;
          in.rs2 = rs2;
          in.rs1 = 0;
          in.imm = static_cast<int32_t>(scratch + 4 * static_cast<uint32_t>(i));
          push(in);
        }
      break;
    case isa::InstrKind::BEQ:
    case isa::InstrKind::BNE:
    case isa::InstrKind::BLT:
    case isa::InstrKind::BGE:
    case isa::InstrKind::BLTU:
    case isa::InstrKind::BGEU:
      for (uint8_t rs1 : spec.regs)
        for (uint8_t rs2 : spec.regs) {
          // every forward target that stays inside the program
          for (uint32_t target = pc + 4; target <= ebreak_addr; target += 4) {
            isa::Instr in = base;
            in.rs1 = rs1; in.rs2 = rs2;
            in.imm = static_cast<int32_t>(target - pc);
            push(in);
          }
        }
      break;
    case isa::InstrKind::JAL:
      for (uint8_t rd : spec.regs)
        for (uint32_t target = pc + 4; target <= ebreak_addr; target += 4) {
          isa::Instr in = base;
          in.rd = rd;
          in.imm = static_cast<int32_t>(target - pc);
          push(in);
        }
      break;
    case isa::InstrKind::JALR:
      for (uint8_t rd : spec.regs)
        for (uint32_t target = pc + 4; target <= ebreak_addr; target += 4) {
          isa::Instr in = base;
          in.rd = rd;
          in.rs1 = 0;
          in.imm = static_cast<int32_t>(target);
          push(in);
        }
      break;
    case isa::InstrKind::EBREAK:
    case isa::InstrKind::ILLEGAL: {
      isa::Instr in = base;
      push(in);
      break;
    }
  }
  return out;
}

}  // namespace

uint64_t pair_sequence_count(const PairSpec& spec) {
  uint64_t slot0 = 0, slot1 = 0;
  for (isa::InstrKind k : spec.kinds) {
    slot0 += slot_variants(k, spec, 0, 2).size();
    slot1 += slot_variants(k, spec, 1, 2).size();
  }
  return slot0 * slot1;
}

CheckReport exhaustive_pairs(const core::CoreConfig& config, const PairSpec& spec,
                             const core::SimOptions& sim) {
  core::validate_config(config);
  uint64_t count = pair_sequence_count(spec);
  if (count > spec.bound) throw BoundExceeded(count, spec.bound);

  stagegraph::DesignGraph graph = core::build_core(config);
  harness::AttachOptions attach;
  attach.mutation = sim.mutation;
  harness::attach_rvfi(graph, attach);
  stagegraph::ElaborateTweaks tweaks;
  if (sim.mutation == core::Mutation::RecircDelayPlusOne) tweaks.arc_delay_adjust = 1;
  if (sim.mutation == core::Mutation::RecircDelayMinusOne) tweaks.arc_delay_adjust = -1;
  stagegraph::ElaboratedDesign design = stagegraph::elaborate(graph, config.stage_map, tweaks);

  CheckReport total;
  std::vector<isa::Instr> slot0, slot1;
  for (isa::InstrKind k : spec.kinds) {
    auto v0 = slot_variants(k, spec, 0, 2);
    slot0.insert(slot0.end(), v0.begin(), v0.end());
    auto v1 = slot_variants(k, spec, 1, 2);
    slot1.insert(slot1.end(), v1.begin(), v1.end());
  }

  isa::Instr fin;
  fin.kind = isa::InstrKind::EBREAK;
  uint64_t index = 0;
  for (const auto& a : slot0) {
    for (const auto& b : slot1) {
      std::vector<uint32_t> words = {isa::encode(a), isa::encode(b), isa::encode(fin)};
      std::vector<uint8_t> image = isa::words_to_image(words);
      core::SimResult res = core::simulate_elaborated(design, config, image, sim);
      CheckReport r;
      if (!res.stats.halted) {
        Violation v;
        v.kind = ViolationKind::IncompleteTrace;
        v.field = "timeout";
        r.violations.push_back(v);
        r.pass = false;
        r.programs_checked = 1;
      } else {
        r = check_trace(res.trace, image, config.mem_size);
      }
      for (auto& v : r.violations) v.context = index;
      total.merge(r);
      ++index;
      if (!total.pass && total.violations.size() > 64) return total;
    }
  }
  return total;
}

}  // namespace warpkit::checker
