#include "warpkit/core.hpp"

#include <algorithm>
#include <deque>

#include "warpkit/harness.hpp"

namespace warpkit::core {

using stagegraph::DelaySpec;
using stagegraph::DesignGraph;
using stagegraph::NodeId;
using stagegraph::VirtualStage;

void validate_config(const CoreConfig& config) {
  if (auto err = stagegraph::validate_stage_map(config.stage_map)) {
    throw ConfigError(err->message());
  }
  if (config.mem_latency < 1) throw ConfigError("mem_latency must be >= 1");
  if (config.mem_size % 4 != 0) throw ConfigError("mem_size must be a word multiple");
  if (config.mem_size < 16) throw ConfigError("mem_size too small");
  if (config.max_pending_loads < 1) throw ConfigError("max_pending_loads must be >= 1");
}

int load_return_alignment(const CoreConfig& config) {
  const auto& m = config.stage_map;
  return (m.phys(VirtualStage::Result) - m.phys(VirtualStage::NextPc)) + config.mem_latency + 1;
}

// ---------------------------------------------------------------------------
// Core design graph
// ---------------------------------------------------------------------------

DesignGraph build_core(const CoreConfig& config) {
  validate_config(config);
  DesignGraph g;
  g.set_section(stagegraph::kSectionCore);

  const auto NP = VirtualStage::NextPc;
  const auto FE = VirtualStage::Fetch;
  const auto DE = VirtualStage::Decode;
  const auto RR = VirtualStage::RegRd;
  const auto EX = VirtualStage::Execute;
  const auto RS = VirtualStage::Result;
  const auto WB = VirtualStage::RegWr;

  // External control, supplied by the simulator each cycle.
  g.at(NP);
  NodeId pc_in = g.input(port::kPcIn, 32, NP);
  NodeId slot_valid = g.input(port::kSlotValid, 1, NP);
  NodeId ld_return = g.input(port::kLoadReturn, 1, NP);
  NodeId order_in = g.input(port::kOrderIn, 64, RS);
  NodeId issue_en = g.input(port::kIssueEnable, 1, RS);
  NodeId commit_en = g.input(port::kCommitEnable, 1, WB);
  g.signal("pc", pc_in);
  g.signal("slot_valid", slot_valid);
  g.signal("ld_return", ld_return);
  g.signal("order", order_in);
  g.signal("commit_en", commit_en);

  // Fetch.
  g.at(FE);
  NodeId fetch_word = g.mem_read(pc_in, FE);
  g.signal("fetch_word", fetch_word);

  // Decode: field extraction.
  g.at(DE);
  NodeId opcode = g.slice(fetch_word, 0, 7);
  NodeId rd_idx = g.slice(fetch_word, 7, 5);
  NodeId funct3 = g.slice(fetch_word, 12, 3);
  NodeId rs1_idx = g.slice(fetch_word, 15, 5);
  NodeId rs2_idx = g.slice(fetch_word, 20, 5);
  NodeId funct7 = g.slice(fetch_word, 25, 7);
  g.signal("rd_idx", rd_idx);
  g.signal("rs1_idx", rs1_idx);
  g.signal("rs2_idx", rs2_idx);

  auto c = [&](int width, uint64_t v, VirtualStage s) { return g.constant(width, v, s); };

  // Immediates per format.
  NodeId imm_i = g.sign_extend(g.slice(fetch_word, 20, 12), 32);
  NodeId imm_s = g.sign_extend(g.concat(g.slice(fetch_word, 25, 7), g.slice(fetch_word, 7, 5)), 32);
  NodeId imm_b = g.sign_extend(
      g.concat(g.concat(g.concat(g.slice(fetch_word, 31, 1), g.slice(fetch_word, 7, 1)),
                        g.concat(g.slice(fetch_word, 25, 6), g.slice(fetch_word, 8, 4))),
               c(1, 0, DE)),
      32);
  NodeId imm_u = g.concat(g.slice(fetch_word, 12, 20), c(12, 0, DE));
  NodeId imm_j = g.sign_extend(
      g.concat(g.concat(g.concat(g.slice(fetch_word, 31, 1), g.slice(fetch_word, 12, 8)),
                        g.concat(g.slice(fetch_word, 20, 1), g.slice(fetch_word, 21, 10))),
               c(1, 0, DE)),
      32);

  // Instruction classes; anything unmatched is illegal.
  auto op_is = [&](uint64_t v) { return g.eq(opcode, c(7, v, DE)); };
  auto f3_is = [&](uint64_t v) { return g.eq(funct3, c(3, v, DE)); };
  NodeId f7_zero = g.eq(funct7, c(7, 0, DE));
  NodeId f7_alt = g.eq(funct7, c(7, 0x20, DE));

  NodeId is_lui = op_is(0x37);
  NodeId is_auipc = op_is(0x17);
  NodeId is_jal = op_is(0x6f);
  NodeId is_jalr = g.band(op_is(0x67), f3_is(0));
  NodeId is_branch = g.band(op_is(0x63), g.bnot(g.bor(f3_is(2), f3_is(3))));
  NodeId is_load =
      g.band(op_is(0x03),
             g.bor(g.bor(f3_is(0), f3_is(1)), g.bor(f3_is(2), g.bor(f3_is(4), f3_is(5)))));
  NodeId is_store = g.band(op_is(0x23), g.bor(f3_is(0), g.bor(f3_is(1), f3_is(2))));
  NodeId shift_legal = g.mux(f3_is(1), f7_zero, g.mux(f3_is(5), g.bor(f7_zero, f7_alt), c(1, 1, DE)));
  NodeId is_alu_imm = g.band(op_is(0x13), shift_legal);
  NodeId is_alu_reg =
      g.band(op_is(0x33), g.bor(f7_zero, g.band(f7_alt, g.bor(f3_is(0), f3_is(5)))));
  NodeId is_ebreak = g.eq(fetch_word, c(32, 0x00100073u, DE));
  NodeId is_legal = g.bor(
      g.bor(g.bor(is_lui, is_auipc), g.bor(is_jal, is_jalr)),
      g.bor(g.bor(is_branch, is_load), g.bor(g.bor(is_store, is_alu_imm), g.bor(is_alu_reg, is_ebreak))));
  NodeId is_illegal = g.bnot(is_legal);
  g.signal("is_load", is_load);
  g.signal("is_store", is_store);
  g.signal("is_ebreak", is_ebreak);

  NodeId imm_val = g.mux(g.bor(is_lui, is_auipc), imm_u,
                         g.mux(is_jal, imm_j, g.mux(is_branch, imm_b, g.mux(is_store, imm_s, imm_i))));
  g.signal("imm_val", imm_val);

  NodeId rs1_is_reg =
      g.band(is_legal, g.bnot(g.bor(g.bor(is_lui, is_auipc), g.bor(is_jal, is_ebreak))));
  NodeId rs2_is_reg = g.bor(is_alu_reg, g.bor(is_branch, is_store));
  NodeId writes_rd = g.bor(g.bor(g.bor(is_lui, is_auipc), g.bor(is_jal, is_jalr)),
                           g.bor(is_alu_imm, is_alu_reg));
  g.signal("rs1_is_reg", rs1_is_reg);
  g.signal("rs2_is_reg", rs2_is_reg);
  g.signal("writes_rd", writes_rd);

  NodeId npc_seq = g.add(pc_in, c(32, 4, DE));
  g.signal("npc_seq", npc_seq);

  // Register read.
  g.at(RR);
  NodeId rs1_val = g.regfile_read(rs1_idx, RR);
  NodeId rs2_val = g.regfile_read(rs2_idx, RR);
  g.signal("rs1_val", rs1_val);
  g.signal("rs2_val", rs2_val);

  // Execute: ALU, branch condition, effective address, redirect, traps.
  g.at(EX);
  NodeId use_imm_alu = g.bor(is_alu_imm, g.bor(is_lui, is_auipc));
  NodeId alu_a = g.mux(is_auipc, pc_in, g.mux(is_lui, c(32, 0, EX), rs1_val));
  NodeId alu_b = g.mux(use_imm_alu, imm_val, rs2_val);
  NodeId shamt = g.slice(alu_b, 0, 5);

  NodeId add_r = g.add(alu_a, alu_b);
  NodeId sub_r = g.sub(alu_a, alu_b);
  NodeId sll_r = g.shl(alu_a, shamt);
  NodeId slt_r = g.zero_extend(g.lt_s(alu_a, alu_b), 32);
  NodeId sltu_r = g.zero_extend(g.lt_u(alu_a, alu_b), 32);
  NodeId xor_r = g.bxor(alu_a, alu_b);
  NodeId srl_r = g.shr_l(alu_a, shamt);
  NodeId sra_r = g.shr_a(alu_a, shamt);
  NodeId or_r = g.bor(alu_a, alu_b);
  NodeId and_r = g.band(alu_a, alu_b);

  NodeId ex_f3_is_0 = f3_is(0);
  NodeId use_sub = g.band(is_alu_reg, f7_alt);
  NodeId use_sra = f7_alt;
  NodeId alu_by_f3 = g.mux(
      ex_f3_is_0, g.mux(use_sub, sub_r, add_r),
      g.mux(f3_is(1), sll_r,
            g.mux(f3_is(2), slt_r,
                  g.mux(f3_is(3), sltu_r,
                        g.mux(f3_is(4), xor_r,
                              g.mux(f3_is(5), g.mux(use_sra, sra_r, srl_r),
                                    g.mux(f3_is(6), or_r, and_r)))))));
  NodeId alu_out = g.mux(g.bor(is_lui, is_auipc), add_r, alu_by_f3);
  g.signal("alu_out", alu_out);

  NodeId eff_addr = g.add(rs1_val, imm_val);
  NodeId pc_plus_imm = g.add(pc_in, imm_val);
  NodeId jalr_target = g.band(eff_addr, c(32, 0xfffffffeu, EX));
  NodeId redirect_target = g.mux(is_jalr, jalr_target, pc_plus_imm);

  NodeId cmp_eq = g.eq(rs1_val, rs2_val);
  NodeId cmp_lt = g.lt_s(rs1_val, rs2_val);
  NodeId cmp_ltu = g.lt_u(rs1_val, rs2_val);
  NodeId br_cond = g.mux(
      ex_f3_is_0, cmp_eq,
      g.mux(f3_is(1), g.bnot(cmp_eq),
            g.mux(f3_is(4), cmp_lt,
                  g.mux(f3_is(5), g.bnot(cmp_lt), g.mux(f3_is(6), cmp_ltu, g.bnot(cmp_ltu))))));
  NodeId taken_raw = g.bor(g.band(is_branch, br_cond), g.bor(is_jal, is_jalr));
  NodeId target_misaligned =
      g.band(taken_raw, g.bnot(g.eq(g.slice(redirect_target, 0, 2), c(2, 0, EX))));

  NodeId addr_off = g.slice(eff_addr, 0, 2);
  NodeId size_f3 = g.slice(funct3, 0, 2);
  NodeId sz_word = g.eq(size_f3, c(2, 2, EX));
  NodeId sz_half = g.eq(size_f3, c(2, 1, EX));
  NodeId mem_misaligned =
      g.bor(g.band(sz_half, g.slice(eff_addr, 0, 1)), g.band(sz_word, g.bnot(g.eq(addr_off, c(2, 0, EX)))));
  NodeId addr_word = g.band(eff_addr, c(32, 0xfffffffcu, EX));
  NodeId mem_oor = g.bnot(g.lt_u(addr_word, c(32, config.mem_size, EX)));
  NodeId is_mem = g.bor(is_load, is_store);
  NodeId trap_ex = g.bor(is_illegal, g.bor(g.band(is_mem, g.bor(mem_misaligned, mem_oor)), target_misaligned));
  g.signal("addr_word", addr_word);
  g.signal("trap_ex", trap_ex);

  NodeId live_slot = g.band(slot_valid, g.bnot(ld_return));
  NodeId redirect = g.band(taken_raw, g.bnot(trap_ex));
  NodeId redirect_live = g.band(redirect, live_slot);
  NodeId pc_wdata_x = g.mux(redirect, redirect_target, npc_seq);
  g.signal("pc_wdata_x", pc_wdata_x);

  g.output(port::kRedirectTaken, redirect_live, EX);
  g.output(port::kRedirectTarget, redirect_target, EX);
  g.output(port::kTrap, g.band(trap_ex, live_slot), EX);

  // Result: final rd value, load data formatting, store lanes, issue.
  g.at(RS);
  NodeId result_val = g.mux(g.bor(is_jal, is_jalr), npc_seq, alu_out);
  g.signal("result_val", result_val);

  NodeId bit_shift = g.concat(addr_off, c(3, 0, RS));  // byte offset * 8
  NodeId ld_word = g.mem_read(addr_word, RS);
  NodeId ld_shifted = g.shr_l(ld_word, bit_shift);
  NodeId byte_u = g.zero_extend(g.slice(ld_shifted, 0, 8), 32);
  NodeId byte_s = g.sign_extend(g.slice(ld_shifted, 0, 8), 32);
  NodeId half_u = g.zero_extend(g.slice(ld_shifted, 0, 16), 32);
  NodeId half_s = g.sign_extend(g.slice(ld_shifted, 0, 16), 32);
  NodeId f3_unsigned = g.slice(funct3, 2, 1);
  NodeId ld_value = g.mux(sz_word, ld_word,
                          g.mux(sz_half, g.mux(f3_unsigned, half_u, half_s),
                                g.mux(f3_unsigned, byte_u, byte_s)));
  g.signal("ld_value", ld_value);

  NodeId base_mask = g.mux(sz_word, c(4, 0xf, RS), g.mux(sz_half, c(4, 0x3, RS), c(4, 0x1, RS)));
  NodeId acc_mask = g.shl(base_mask, addr_off);
  g.signal("acc_mask", acc_mask);
  NodeId lane_ff = c(8, 0xff, RS);
  NodeId lane_00 = c(8, 0x00, RS);
  auto lane = [&](int i) { return g.mux(g.slice(acc_mask, i, 1), lane_ff, lane_00); };
  NodeId lanes32 = g.concat(g.concat(lane(3), lane(2)), g.concat(lane(1), lane(0)));
  NodeId ld_lanes = g.band(ld_word, lanes32);
  g.signal("ld_lanes", ld_lanes);

  NodeId st_shifted = g.shl(rs2_val, bit_shift);
  NodeId st_lanes = g.band(st_shifted, lanes32);
  g.signal("st_lanes", st_lanes);

  NodeId do_issue = g.band(issue_en, g.band(live_slot, g.band(is_load, g.bnot(trap_ex))));
  g.output(port::kIssued, do_issue, RS);

  // The original-load bundle, recirculated so its fields line up with the
  // pseudo-load-return as it flows down the pipeline.
  stagegraph::Bundle ld_orig = g.make_bundle(
      "ld_orig",
      {
          g.signal("ld_orig_order", order_in),
          g.signal("ld_orig_insn", fetch_word),
          g.signal("ld_orig_pc", pc_in),
          g.signal("ld_orig_npc", npc_seq),
          g.signal("ld_orig_rs1_raw", rs1_idx),
          g.signal("ld_orig_rs1_is_reg", rs1_is_reg),
          g.signal("ld_orig_rs1_val", rs1_val),
          g.signal("ld_orig_rs2_raw", rs2_idx),
          g.signal("ld_orig_rs2_is_reg", rs2_is_reg),
          g.signal("ld_orig_rs2_val", rs2_val),
          g.signal("ld_orig_rd", rd_idx),
          g.signal("ld_orig_mem_addr", addr_word),
          g.signal("ld_orig_rmask", acc_mask),
          g.signal("ld_orig_value", ld_value),
          g.signal("ld_orig_mem_rdata", ld_lanes),
      });
  DelaySpec align;
  align.stage_relative = true;
  align.from = VirtualStage::NextPc;
  align.to = VirtualStage::Result;
  align.fixed = config.mem_latency + 1;
  g.recirculate(ld_orig, align, "ld_return");

  // Writeback.
  g.at(WB);
  auto rc = [&](const char* member) {
    auto b = g.find_bundle("ld_return");
    for (const auto& m : b->members) {
      if (m.name == std::string("ld_orig_") + member) return m.node;
    }
    throw stagegraph::GraphError(stagegraph::GraphErrorKind::UnknownName, member);
  };

  NodeId wb_normal_en = g.band(slot_valid, g.band(writes_rd, g.bnot(trap_ex)));
  NodeId wb_en = g.band(commit_en, g.mux(ld_return, c(1, 1, WB), wb_normal_en));
  NodeId wb_addr = g.mux(ld_return, rc("rd"), rd_idx);
  NodeId wb_data = g.mux(ld_return, rc("value"), result_val);
  g.regfile_write(wb_addr, wb_data, wb_en, WB);

  NodeId st_en = g.band(commit_en, g.band(live_slot, g.band(is_store, g.bnot(trap_ex))));
  g.mem_write(addr_word, st_lanes, acc_mask, st_en, WB);

  g.output(port::kHalt, g.band(commit_en, g.band(live_slot, is_ebreak)), WB);

  g.at(VirtualStage::NextPc);
  return g;
}

// ---------------------------------------------------------------------------
// Simulator
// ---------------------------------------------------------------------------

namespace {

struct Flight {
  uint64_t launch = 0;
  uint32_t pc = 0;
  isa::Instr instr;
  bool is_return = false;
  bool ghost = false;
  bool resolved = false;       // execute stage has passed
  bool trapped = false;
  bool issued = false;
  uint64_t order = 0;
  bool order_assigned = false;
  uint64_t return_commit = 0;  // loads: cycle the pseudo-return reaches REG_WR
};

struct Ports {
  int pc_in, slot_valid, ld_return, order_in, issue_en, commit_en;
  int redirect_taken, redirect_target, trap, issued, halt;
};

}  // namespace

SimResult simulate_elaborated(const stagegraph::ElaboratedDesign& design,
                              const CoreConfig& config, const std::vector<uint8_t>& image,
                              const SimOptions& options) {
  validate_config(config);
  if (image.size() > config.mem_size) throw SimError("image larger than memory");

  const auto& map = config.stage_map;
  const int pR = map.phys(VirtualStage::RegRd);
  const int pE = map.phys(VirtualStage::Execute);
  const int nR = map.phys(VirtualStage::Result);
  const int pWB = map.phys(VirtualStage::RegWr);
  const int latency = config.mem_latency;
  const bool scoreboard_on = options.mutation != Mutation::ScoreboardOff;

  Ports ports{
      design.input_index(port::kPcIn),
      design.input_index(port::kSlotValid),
      design.input_index(port::kLoadReturn),
      design.input_index(port::kOrderIn),
      design.input_index(port::kIssueEnable),
      design.input_index(port::kCommitEnable),
      design.output_index(port::kRedirectTaken),
      design.output_index(port::kRedirectTarget),
      design.output_index(port::kTrap),
      design.output_index(port::kIssued),
      design.output_index(port::kHalt),
  };
  harness::RvfiPortIndices rvfi_ports = harness::find_rvfi_ports(design);

  stagegraph::EvalState state(design, config.mem_size);
  state.load_image(image);

  // The simulator decodes from the initial image for scheduling; fetched
  // data comes from the design's memory (self-modifying code unsupported).
  auto fetch_static = [&](uint32_t pc) -> isa::Instr {
    if ((pc & 3u) != 0) throw SimError("pc misaligned: " + std::to_string(pc));
    if (static_cast<size_t>(pc) + 3 >= config.mem_size) {
      throw SimError("pc out of range: " + std::to_string(pc));
    }
    uint32_t w = 0;
    if (static_cast<size_t>(pc) + 3 < image.size()) {
      w = static_cast<uint32_t>(image[pc]) | (image[pc + 1] << 8) | (image[pc + 2] << 16) |
          (static_cast<uint32_t>(image[pc + 3]) << 24);
    }
    return isa::decode(w);
  };

  std::deque<Flight> flights;
  std::deque<PendingLoad> loads;   // issued, in order; front injects first
  size_t next_inject = 0;          // index into loads of the next to inject
  Scoreboard scoreboard;
  SimStats stats;
  RvfiTrace trace;
  uint64_t order_counter = 0;
  uint32_t next_pc = 0;
  bool fetch_stopped = false;

  auto flight_at = [&](uint64_t t, int stage_phys) -> Flight* {
    if (t < static_cast<uint64_t>(stage_phys)) return nullptr;
    uint64_t launch = t - static_cast<uint64_t>(stage_phys);
    for (auto& f : flights) {
      if (f.launch == launch) return &f;
    }
    return nullptr;
  };

  std::vector<uint64_t> inputs(design.num_inputs(), 0);
  uint64_t t = 0;
  for (; t < config.max_cycles; ++t) {
    // --- arbitration at NEXT_PC: pseudo-load-return beats fetch ---
    bool inject = next_inject < loads.size() && loads[next_inject].inject_cycle == t;

    bool candidate_ready = false;
    isa::Instr cand;
    if (!fetch_stopped) {
      cand = fetch_static(next_pc);
      candidate_ready = true;
    }

    bool launch_instr = false;
    if (!inject && candidate_ready) {
      // Hold the instruction at the register-read interlock until every
      // hazard window is closed; all blocker schedules are deterministic.
      bool hold = false;
      uint64_t read_cycle = t + static_cast<uint64_t>(pR);

      auto writer_barrier = [&](const Flight& f) -> uint64_t {
        // cycle from which a dependent read is safe
        if (f.instr.is_load() && !f.trapped) {
          if (!f.resolved) return ~uint64_t{0};  // unknown yet
          if (f.issued) return f.return_commit + 1;
          return f.launch + static_cast<uint64_t>(nR) + static_cast<uint64_t>(latency) + 1 +
                 static_cast<uint64_t>(pWB) + 1;
        }
        return f.launch + static_cast<uint64_t>(pWB) + 1;
      };

      if (scoreboard_on) {
        uint8_t srcs[3] = {
            static_cast<uint8_t>(cand.rs1_is_reg ? cand.rs1 : 0),
            static_cast<uint8_t>(cand.rs2_is_reg ? cand.rs2 : 0),
            static_cast<uint8_t>(cand.writes_rd() ? cand.rd : 0),
        };
        for (const auto& f : flights) {
          if (f.ghost || f.is_return) continue;
          if (!f.instr.writes_rd() || f.instr.rd == 0) continue;
          for (uint8_t r : srcs) {
            if (r != 0 && r == f.instr.rd && read_cycle < writer_barrier(f)) hold = true;
          }
        }
      }

      if (cand.is_load()) {
        uint64_t issue_cycle = t + static_cast<uint64_t>(nR);
        // loads wait for older stores to reach memory
        for (const auto& f : flights) {
          if (f.ghost || f.is_return || !f.instr.is_store()) continue;
          if (issue_cycle < f.launch + static_cast<uint64_t>(pWB) + 1) hold = true;
        }
        // memory request queue capacity at the issue cycle
        int occupancy = 0;
        for (const auto& f : flights) {
          if (f.ghost || f.is_return || !f.instr.is_load() || f.issued) continue;
          if (f.resolved && f.trapped) continue;  // never issues
          if (!f.resolved) { occupancy++; continue; }
          uint64_t issue_f = f.launch + static_cast<uint64_t>(nR);
          uint64_t inject_f = issue_f + static_cast<uint64_t>(latency) + 1;
          if (issue_f <= issue_cycle && issue_cycle < inject_f) occupancy++;
        }
        for (const auto& l : loads) {
          if (l.issue_cycle <= issue_cycle && issue_cycle < l.inject_cycle) occupancy++;
        }
        if (occupancy >= config.max_pending_loads) hold = true;
      }

      // single committer per cycle: never land on a return's commit slot
      uint64_t commit_cycle = t + static_cast<uint64_t>(pWB);
      for (const auto& l : loads) {
        if (l.commit_cycle == commit_cycle) hold = true;
      }
      for (const auto& f : flights) {
        if (f.ghost || f.is_return || !f.instr.is_load() || f.issued) continue;
        if (f.resolved && f.trapped) continue;
        uint64_t would_commit = f.launch + static_cast<uint64_t>(nR) +
                                static_cast<uint64_t>(latency) + 1 + static_cast<uint64_t>(pWB);
        if (would_commit == commit_cycle) hold = true;
      }

      // the halt instruction drains outstanding loads first
      if (cand.kind == isa::InstrKind::EBREAK) {
        if (!loads.empty()) hold = true;
        for (const auto& f : flights) {
          if (f.ghost || f.is_return || !f.instr.is_load() || f.issued) continue;
          if (f.resolved && f.trapped) continue;
          hold = true;
        }
      }

      if (hold) {
        stats.stall_cycles++;
      } else {
        launch_instr = true;
      }
    } else if (inject && candidate_ready) {
      stats.stall_cycles++;  // fetch loses arbitration this cycle
    }

    if (inject) {
      Flight f;
      f.launch = t;
      f.is_return = true;
      flights.push_back(f);
      stats.load_return_injections++;
      next_inject++;
    } else if (launch_instr) {
      Flight f;
      f.launch = t;
      f.pc = next_pc;
      f.instr = cand;
      flights.push_back(f);
      next_pc += 4;
      if (cand.kind == isa::InstrKind::EBREAK) fetch_stopped = true;
    }

    // --- drive the elaborated design for this cycle ---
    Flight* at_entry = flights.empty() ? nullptr : &flights.back();
    bool entry_now = at_entry && at_entry->launch == t;
    std::fill(inputs.begin(), inputs.end(), 0);
    if (entry_now && at_entry->is_return) {
      inputs[ports.ld_return] = 1;
    } else if (entry_now) {
      inputs[ports.pc_in] = at_entry->pc;
      inputs[ports.slot_valid] = 1;
    }
    Flight* at_result = flight_at(t, nR);
    if (at_result && !at_result->ghost && !at_result->is_return) {
      if (!at_result->order_assigned) {
        at_result->order = order_counter++;
        at_result->order_assigned = true;
      }
      inputs[ports.order_in] = at_result->order;
      inputs[ports.issue_en] = 1;
    }
    Flight* at_commit = flight_at(t, pWB);
    if (at_commit && (at_commit->is_return || !at_commit->ghost)) {
      inputs[ports.commit_en] = 1;
    }

    stagegraph::CycleOutputs out = stagegraph::eval_cycle(design, state, inputs);

    // --- react to this cycle's outputs ---
    Flight* at_exec = flight_at(t, pE);
    if (at_exec && !at_exec->is_return) {
      at_exec->resolved = true;
      at_exec->trapped = out.value(ports.trap) != 0 && !at_exec->ghost;
      if (!at_exec->ghost && out.value(ports.redirect_taken)) {
        // taken branch or jump: squash the younger slots, redirect fetch
        uint64_t branch_launch = at_exec->launch;
        Flight* youngest = nullptr;
        for (auto& f : flights) {
          if (f.is_return || f.launch <= branch_launch || f.ghost) continue;
          f.ghost = true;
          if (!youngest || f.launch > youngest->launch) youngest = &f;
        }
        if (options.mutation == Mutation::SquashDepthMinusOne && youngest) {
          youngest->ghost = false;  // wrong-path slot escapes the squash
        }
        stats.squashed_slots += static_cast<uint64_t>(pE);
        next_pc = static_cast<uint32_t>(out.value(ports.redirect_target));
        fetch_stopped = false;
      }
    }

    if (out.value(ports.issued)) {
      Flight* f = at_result;
      if (f && !f->ghost && !f->is_return) {
        PendingLoad pl;
        pl.order = f->order;
        pl.rd = f->instr.rd;
        pl.issue_cycle = t;
        pl.inject_cycle = t + static_cast<uint64_t>(latency) + 1;
        pl.commit_cycle = pl.inject_cycle + static_cast<uint64_t>(pWB);
        loads.push_back(pl);
        f->issued = true;
        f->return_commit = pl.commit_cycle;
        if (pl.rd != 0) scoreboard.pending[pl.rd] = true;
      }
    }

    if (auto rec = harness::read_rvfi(rvfi_ports, out)) {
      trace.records.push_back(*rec);
      trace.commit_cycles.push_back(t);
      stats.retirements++;
      if (rec->halt) {
        stats.halted = true;
        ++t;
        break;
      }
    }

    // returns that wrote back this cycle release their pending bits
    while (!loads.empty() && loads.front().commit_cycle == t) {
      if (loads.front().rd != 0) scoreboard.pending[loads.front().rd] = false;
      loads.pop_front();
      if (next_inject > 0) next_inject--;
    }

    // prune flights whose influence has fully passed
    while (!flights.empty()) {
      const Flight& f = flights.front();
      uint64_t horizon;
      if (f.instr.is_load() && !f.is_return && !f.ghost && !f.trapped) {
        if (!f.resolved || !f.issued) break;
        horizon = f.return_commit + 1;
      } else {
        horizon = f.launch + static_cast<uint64_t>(pWB) + 1;
      }
      if (t <= horizon + 1) break;
      flights.pop_front();
    }
  }

  stats.cycles = t;
  trace.complete = stats.halted;
  return {std::move(trace), stats};
}

SimResult simulate(const CoreConfig& config, const std::vector<uint8_t>& image,
                   const SimOptions& options) {
  DesignGraph graph = build_core(config);
  harness::AttachOptions attach;
  attach.mutation = options.mutation;
  harness::attach_rvfi(graph, attach);
  stagegraph::ElaborateTweaks tweaks;
  if (options.mutation == Mutation::RecircDelayPlusOne) tweaks.arc_delay_adjust = 1;
  if (options.mutation == Mutation::RecircDelayMinusOne) tweaks.arc_delay_adjust = -1;
  stagegraph::ElaboratedDesign design = stagegraph::elaborate(graph, config.stage_map, tweaks);
  return simulate_elaborated(design, config, image, options);
}

}  // namespace warpkit::core
