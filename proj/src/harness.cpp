#include "warpkit/harness.hpp"

#include <sstream>

#include "json.hpp"

namespace warpkit::harness {

using stagegraph::DesignGraph;
using stagegraph::NodeId;
using stagegraph::VirtualStage;

// ---------------------------------------------------------------------------
// attach_rvfi
// ---------------------------------------------------------------------------

namespace {

NodeId core_sig(const DesignGraph& g, const std::string& name) {
  auto s = g.find_signal(name);
  if (!s) {
    throw stagegraph::GraphError(stagegraph::GraphErrorKind::UnknownName,
                                 "harness needs core signal: " + name);
  }
  return s->node;
}

NodeId return_member(const DesignGraph& g, const std::string& field) {
  auto b = g.find_bundle("ld_return");
  if (!b) {
    throw stagegraph::GraphError(stagegraph::GraphErrorKind::UnknownName,
                                 "harness needs the ld_return bundle");
  }
  for (const auto& m : b->members) {
    if (m.name == "ld_orig_" + field) return m.node;
  }
  throw stagegraph::GraphError(stagegraph::GraphErrorKind::UnknownName,
                               "ld_return bundle lacks field: " + field);
}

}  // namespace

void attach_rvfi(stagegraph::DesignGraph& g, const AttachOptions& options) {
  const auto WB = VirtualStage::RegWr;
  g.set_section(stagegraph::kSectionHarness);
  g.at(WB);

  // Everything below reads core values at REG_WR; the staging needed to get
  // each field there is implied by the read, whatever the stage map is.
  NodeId ld_ret = core_sig(g, "ld_return");
  NodeId commit_en = core_sig(g, "commit_en");
  NodeId slot_valid = core_sig(g, "slot_valid");
  NodeId is_load = core_sig(g, "is_load");
  NodeId is_store = core_sig(g, "is_store");
  NodeId is_ebreak = core_sig(g, "is_ebreak");
  NodeId trap_ex = core_sig(g, "trap_ex");
  NodeId writes_rd = core_sig(g, "writes_rd");
  NodeId pc = core_sig(g, "pc");
  NodeId order = core_sig(g, "order");
  NodeId fetch_word = core_sig(g, "fetch_word");
  NodeId rd_idx = core_sig(g, "rd_idx");
  NodeId rs1_idx = core_sig(g, "rs1_idx");
  NodeId rs2_idx = core_sig(g, "rs2_idx");
  NodeId rs1_is_reg = core_sig(g, "rs1_is_reg");
  NodeId rs2_is_reg = core_sig(g, "rs2_is_reg");
  NodeId rs1_val = core_sig(g, "rs1_val");
  NodeId rs2_val = core_sig(g, "rs2_val");
  NodeId result_val = core_sig(g, "result_val");
  NodeId alu_out = core_sig(g, "alu_out");
  NodeId pc_wdata_x = core_sig(g, "pc_wdata_x");
  NodeId addr_word = core_sig(g, "addr_word");
  NodeId acc_mask = core_sig(g, "acc_mask");
  NodeId st_lanes = core_sig(g, "st_lanes");

  auto c = [&](int width, uint64_t v) { return g.constant(width, v, WB); };

  // A committing slot is presented unless it is an original load; the load
  // is presented later through its pseudo-load-return.
  NodeId present_normal = g.band(slot_valid, g.bor(g.bnot(is_load), trap_ex));
  NodeId rvfi_valid = g.band(commit_en, g.bor(ld_ret, present_normal));
  g.output("rvfi_valid", rvfi_valid, WB);

  // Returning-load multiplexer: fields of the retirement come from the
  // recirculated original load when a pseudo-load-return is in the slot.
  auto sel = [&](const char* field, NodeId pipeline_value) {
    return g.mux(ld_ret, return_member(g, field), pipeline_value);
  };

  NodeId m_order = sel("order", order);
  NodeId m_insn = sel("insn", fetch_word);
  NodeId m_pc = sel("pc", pc);
  NodeId m_npc = sel("npc", pc_wdata_x);
  NodeId m_rs1_raw = sel("rs1_raw", rs1_idx);
  NodeId m_rs1_is_reg = sel("rs1_is_reg", rs1_is_reg);
  NodeId m_rs1_val = sel("rs1_val", rs1_val);
  NodeId m_rs2_raw = sel("rs2_raw", rs2_idx);
  NodeId m_rs2_is_reg = sel("rs2_is_reg", rs2_is_reg);
  NodeId m_rs2_val = sel("rs2_val", rs2_val);

  g.output("rvfi_order", m_order, WB);
  g.output("rvfi_insn", m_insn, WB);
  g.output("rvfi_trap", g.mux(ld_ret, c(1, 0), trap_ex), WB);
  g.output("rvfi_halt", g.mux(ld_ret, c(1, 0), is_ebreak), WB);
  g.output("rvfi_intr", c(1, 0), WB);

  // Source-register reporting: the raw field is presented only when the
  // instruction actually reads that register, else zero.
  NodeId rs1_addr = options.mutation == core::Mutation::Rs1ZeroRuleDropped
                        ? m_rs1_raw
                        : g.mux(m_rs1_is_reg, m_rs1_raw, c(5, 0));
  NodeId rs1_rdata = g.mux(m_rs1_is_reg, m_rs1_val, c(32, 0));
  NodeId rs2_addr = g.mux(m_rs2_is_reg, m_rs2_raw, c(5, 0));
  NodeId rs2_rdata = g.mux(m_rs2_is_reg, m_rs2_val, c(32, 0));
  g.output("rvfi_rs1_addr", rs1_addr, WB);
  g.output("rvfi_rs2_addr", rs2_addr, WB);
  g.output("rvfi_rs1_rdata", rs1_rdata, WB);
  g.output("rvfi_rs2_rdata", rs2_rdata, WB);

  NodeId writes_live = g.band(writes_rd, g.bnot(trap_ex));
  NodeId rd_view = g.mux(writes_live, rd_idx, c(5, 0));
  NodeId rd_addr = sel("rd", rd_view);
  NodeId wdata_src = options.mutation == core::Mutation::RdWdataWrongStage ? alu_out : result_val;
  NodeId wdata_view = g.mux(writes_live, wdata_src, c(32, 0));
  NodeId rd_wdata_sel = sel("value", wdata_view);
  NodeId rd_wdata = g.mux(g.eq(rd_addr, c(5, 0)), c(32, 0), rd_wdata_sel);
  g.output("rvfi_rd_addr", rd_addr, WB);
  g.output("rvfi_rd_wdata", rd_wdata, WB);

  g.output("rvfi_pc_rdata", m_pc, WB);
  g.output("rvfi_pc_wdata", m_npc, WB);

  NodeId st_live = g.band(is_store, g.bnot(trap_ex));
  g.output("rvfi_mem_addr", sel("mem_addr", g.mux(st_live, addr_word, c(32, 0))), WB);
  g.output("rvfi_mem_rmask", sel("rmask", c(4, 0)), WB);
  g.output("rvfi_mem_wmask", g.mux(ld_ret, c(4, 0), g.mux(st_live, acc_mask, c(4, 0))), WB);
  g.output("rvfi_mem_rdata", sel("mem_rdata", c(32, 0)), WB);
  g.output("rvfi_mem_wdata", g.mux(ld_ret, c(32, 0), g.mux(st_live, st_lanes, c(32, 0))), WB);

  g.set_section(stagegraph::kSectionCore);
  g.at(VirtualStage::NextPc);
}

int recirculated_width(const stagegraph::DesignGraph& graph) {
  auto b = graph.find_bundle("ld_return");
  return b ? b->width() : 0;
}

int full_record_width() {
  // order + insn + trap/halt/intr/valid + rs/rd addrs + five 32-bit data
  // fields + pc pair + mem addr/masks/data
  return 64 + 32 + 4 + 3 * 5 + 32 * 3 + 32 * 2 + 32 + 4 + 4 + 32 + 32;
}

// ---------------------------------------------------------------------------
// record extraction
// ---------------------------------------------------------------------------

RvfiPortIndices find_rvfi_ports(const stagegraph::ElaboratedDesign& d) {
  RvfiPortIndices p{};
  p.valid = d.output_index("rvfi_valid");
  p.order = d.output_index("rvfi_order");
  p.insn = d.output_index("rvfi_insn");
  p.trap = d.output_index("rvfi_trap");
  p.halt = d.output_index("rvfi_halt");
  p.intr = d.output_index("rvfi_intr");
  p.rs1_addr = d.output_index("rvfi_rs1_addr");
  p.rs2_addr = d.output_index("rvfi_rs2_addr");
  p.rs1_rdata = d.output_index("rvfi_rs1_rdata");
  p.rs2_rdata = d.output_index("rvfi_rs2_rdata");
  p.rd_addr = d.output_index("rvfi_rd_addr");
  p.rd_wdata = d.output_index("rvfi_rd_wdata");
  p.pc_rdata = d.output_index("rvfi_pc_rdata");
  p.pc_wdata = d.output_index("rvfi_pc_wdata");
  p.mem_addr = d.output_index("rvfi_mem_addr");
  p.mem_rmask = d.output_index("rvfi_mem_rmask");
  p.mem_wmask = d.output_index("rvfi_mem_wmask");
  p.mem_rdata = d.output_index("rvfi_mem_rdata");
  p.mem_wdata = d.output_index("rvfi_mem_wdata");
  return p;
}

std::optional<RvfiRecord> read_rvfi(const RvfiPortIndices& p,
                                    const stagegraph::CycleOutputs& out) {
  if (!out.value(p.valid)) return std::nullopt;
  RvfiRecord r;
  r.order = out.value(p.order);
  r.insn = static_cast<uint32_t>(out.value(p.insn));
  r.trap = out.value(p.trap) != 0;
  r.halt = out.value(p.halt) != 0;
  r.intr = out.value(p.intr) != 0;
  r.rs1_addr = static_cast<uint8_t>(out.value(p.rs1_addr));
  r.rs2_addr = static_cast<uint8_t>(out.value(p.rs2_addr));
  r.rs1_rdata = static_cast<uint32_t>(out.value(p.rs1_rdata));
  r.rs2_rdata = static_cast<uint32_t>(out.value(p.rs2_rdata));
  r.rd_addr = static_cast<uint8_t>(out.value(p.rd_addr));
  r.rd_wdata = static_cast<uint32_t>(out.value(p.rd_wdata));
  r.pc_rdata = static_cast<uint32_t>(out.value(p.pc_rdata));
  r.pc_wdata = static_cast<uint32_t>(out.value(p.pc_wdata));
  r.mem_addr = static_cast<uint32_t>(out.value(p.mem_addr));
  r.mem_rmask = static_cast<uint8_t>(out.value(p.mem_rmask));
  r.mem_wmask = static_cast<uint8_t>(out.value(p.mem_wmask));
  r.mem_rdata = static_cast<uint32_t>(out.value(p.mem_rdata));
  r.mem_wdata = static_cast<uint32_t>(out.value(p.mem_wdata));
  return r;
}

std::optional<RvfiRecord> extract_record(const stagegraph::ElaboratedDesign& design,
                                         const stagegraph::CycleOutputs& outputs) {
  return read_rvfi(find_rvfi_ports(design), outputs);
}

// ---------------------------------------------------------------------------
// trace files
// ---------------------------------------------------------------------------

std::string record_to_jsonl(const RvfiRecord& r) {
  std::ostringstream os;
  os << "{\"rvfi_order\":" << r.order
     << ",\"rvfi_insn\":" << r.insn
     << ",\"rvfi_trap\":" << (r.trap ? 1 : 0)
     << ",\"rvfi_halt\":" << (r.halt ? 1 : 0)
     << ",\"rvfi_intr\":" << (r.intr ? 1 : 0)
     << ",\"rvfi_rs1_addr\":" << static_cast<unsigned>(r.rs1_addr)
     << ",\"rvfi_rs2_addr\":" << static_cast<unsigned>(r.rs2_addr)
     << ",\"rvfi_rs1_rdata\":" << r.rs1_rdata
     << ",\"rvfi_rs2_rdata\":" << r.rs2_rdata
     << ",\"rvfi_rd_addr\":" << static_cast<unsigned>(r.rd_addr)
     << ",\"rvfi_rd_wdata\":" << r.rd_wdata
     << ",\"rvfi_pc_rdata\":" << r.pc_rdata
     << ",\"rvfi_pc_wdata\":" << r.pc_wdata
     << ",\"rvfi_mem_addr\":" << r.mem_addr
     << ",\"rvfi_mem_rmask\":" << static_cast<unsigned>(r.mem_rmask)
     << ",\"rvfi_mem_wmask\":" << static_cast<unsigned>(r.mem_wmask)
     << ",\"rvfi_mem_rdata\":" << r.mem_rdata
     << ",\"rvfi_mem_wdata\":" << r.mem_wdata
     << "}";
  return os.str();
}

std::string trace_to_jsonl(const RvfiTrace& trace) {
  std::string out;
  for (const auto& r : trace.records) {
    out += record_to_jsonl(r);
    out += '\n';
  }
  return out;
}

RvfiTrace trace_from_jsonl(const std::string& text) {
  RvfiTrace trace;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw TraceParseError(line_no, "not a JSON object");
    }
    auto u64 = [&](const char* key) -> uint64_t {
      if (!j.contains(key) || !j[key].is_number_unsigned()) {
        throw TraceParseError(line_no, std::string("missing or invalid field ") + key);
      }
      return j[key].get<uint64_t>();
    };
    auto u32 = [&](const char* key, uint64_t max = 0xffffffffull) -> uint32_t {
      uint64_t v = u64(key);
      if (v > max) throw TraceParseError(line_no, std::string("field out of range: ") + key);
      return static_cast<uint32_t>(v);
    };
    RvfiRecord r;
    r.order = u64("rvfi_order");
    r.insn = u32("rvfi_insn");
    r.trap = u32("rvfi_trap", 1) != 0;
    r.halt = u32("rvfi_halt", 1) != 0;
    r.intr = u32("rvfi_intr", 1) != 0;
    r.rs1_addr = static_cast<uint8_t>(u32("rvfi_rs1_addr", 31));
    r.rs2_addr = static_cast<uint8_t>(u32("rvfi_rs2_addr", 31));
    r.rs1_rdata = u32("rvfi_rs1_rdata");
    r.rs2_rdata = u32("rvfi_rs2_rdata");
    r.rd_addr = static_cast<uint8_t>(u32("rvfi_rd_addr", 31));
    r.rd_wdata = u32("rvfi_rd_wdata");
    r.pc_rdata = u32("rvfi_pc_rdata");
    r.pc_wdata = u32("rvfi_pc_wdata");
    r.mem_addr = u32("rvfi_mem_addr");
    r.mem_rmask = static_cast<uint8_t>(u32("rvfi_mem_rmask", 15));
    r.mem_wmask = static_cast<uint8_t>(u32("rvfi_mem_wmask", 15));
    r.mem_rdata = u32("rvfi_mem_rdata");
    r.mem_wdata = u32("rvfi_mem_wdata");
    trace.records.push_back(r);
  }
  // A complete trace ends with its halt record.
  trace.complete = !trace.records.empty() && trace.records.back().halt;
  return trace;
}

}  // namespace warpkit::harness
