#include "warpkit/backend.hpp"

#include <algorithm>
#include <sstream>

#include "json.hpp"
#include "warpkit/harness.hpp"

namespace warpkit::backend {

using stagegraph::DesignGraph;
using stagegraph::ElaboratedDesign;
using stagegraph::ExprNode;
using stagegraph::NodeId;
using stagegraph::Op;

// ---------------------------------------------------------------------------
// lint
// ---------------------------------------------------------------------------

std::vector<LintViolation> lint(const ElaboratedDesign& design) {
  std::vector<LintViolation> out;
  const auto& g = design.graph();
  const auto& map = design.map();
  const auto& nodes = g.nodes();

  auto complain = [&](NodeId id, const std::string& what) {
    out.push_back(LintViolation{"node " + std::to_string(id) + " (" +
                                stagegraph::op_name(nodes[id].op) + "): " + what});
  };

  for (NodeId id = 0; id < nodes.size(); ++id) {
    const ExprNode& n = nodes[id];
    if (n.width < 1 || n.width > 64) complain(id, "width out of range");
    for (NodeId a : n.args) {
      if (a >= nodes.size()) {
        complain(id, "operand out of range");
        continue;
      }
      if (n.op == Op::Recirculate) continue;
      if (map.phys(n.stage) < map.phys(nodes[a].stage)) {
        complain(id, "reads operand from a later physical stage");
      }
    }
    switch (n.op) {
      case Op::Add:
      case Op::Sub:
      case Op::And:
      case Op::Or:
      case Op::Xor:
        if (n.args.size() != 2 || nodes[n.args[0]].width != n.width ||
            nodes[n.args[1]].width != n.width) {
          complain(id, "operand widths inconsistent");
        }
        break;
      case Op::Eq:
      case Op::LtS:
      case Op::LtU:
        if (n.args.size() != 2 || nodes[n.args[0]].width != nodes[n.args[1]].width ||
            n.width != 1) {
          complain(id, "comparison widths inconsistent");
        }
        break;
      case Op::Mux:
        if (n.args.size() != 3 || nodes[n.args[0]].width != 1 ||
            nodes[n.args[1]].width != n.width || nodes[n.args[2]].width != n.width) {
          complain(id, "mux widths inconsistent");
        }
        break;
      case Op::Slice:
        if (n.args.size() != 1 ||
            static_cast<int>(n.value) + n.width > nodes[n.args[0]].width) {
          complain(id, "slice out of range");
        }
        break;
      case Op::Concat:
        if (n.args.size() != 2 ||
            nodes[n.args[0]].width + nodes[n.args[1]].width != n.width) {
          complain(id, "concat width mismatch");
        }
        break;
      case Op::SignExtend:
      case Op::ZeroExtend:
        if (n.args.size() != 1 || nodes[n.args[0]].width > n.width) {
          complain(id, "extension narrows");
        }
        break;
      default:
        break;
    }
  }

  const auto& arcs = g.arcs();
  for (size_t i = 0; i < arcs.size(); ++i) {
    if (design.arc_delays().size() > i && design.arc_delays()[i] < 1) {
      out.push_back(LintViolation{"feedback arc '" + arcs[i].name + "' has delay < 1"});
    }
    int resolved = arcs[i].delay.resolve(design.map());
    if (resolved < 1) {
      out.push_back(LintViolation{"feedback arc '" + arcs[i].name +
                                  "' resolves to a combinational loop"});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// emit_verilog
// ---------------------------------------------------------------------------

namespace {

std::string wname(NodeId id, const ExprNode& n) {
  std::string s = "n" + std::to_string(id);
  if (!n.name.empty()) s += "_" + n.name;
  return s;
}

std::string width_decl(int width) {
  if (width == 1) return "";
  return "[" + std::to_string(width - 1) + ":0] ";
}

std::string vhex(uint64_t v, int width) {
  std::ostringstream os;
  os << width << "'h" << std::hex << v;
  return os.str();
}

}  // namespace

std::string emit_verilog(const ElaboratedDesign& design, const std::string& module_name,
                         uint32_t mem_bytes) {
  const DesignGraph& g = design.graph();
  const auto& nodes = g.nodes();
  std::ostringstream core_decl, core_logic, core_seq;
  std::ostringstream har_decl, har_logic, har_seq;

  auto decl_of = [&](int section) -> std::ostringstream& {
    return section == stagegraph::kSectionHarness ? har_decl : core_decl;
  };
  auto logic_of = [&](int section) -> std::ostringstream& {
    return section == stagegraph::kSectionHarness ? har_logic : core_logic;
  };
  auto seq_of = [&](int section) -> std::ostringstream& {
    return section == stagegraph::kSectionHarness ? har_seq : core_seq;
  };

  // Per-consumer staging chains. Chain registers belong to the consumer's
  // section; the tap name replaces the raw operand in its expression.
  struct ChainRef {
    NodeId consumer;
    int arg_index;
    bool is_output;
  };
  auto chain_tap = [&](const stagegraph::StagedEdge& e) {
    return wname(e.producer, nodes[e.producer]) + "_e" + std::to_string(e.consumer) + "_" +
           std::to_string(e.arg_index) + (e.is_output ? "o" : "") + "_d" +
           std::to_string(e.depth);
  };

  // operand name resolution: staged reads use the chain tap
  auto operand_name = [&](NodeId consumer, int arg_index, NodeId producer) -> std::string {
    for (const auto& e : design.staged_edges()) {
      if (!e.is_output && e.consumer == consumer && e.arg_index == arg_index &&
          e.producer == producer) {
        return chain_tap(e);
      }
    }
    return wname(producer, nodes[producer]);
  };

  for (const auto& e : design.staged_edges()) {
    auto& decl = decl_of(e.section);
    auto& seq = seq_of(e.section);
    const ExprNode& p = nodes[e.producer];
    std::string base = wname(e.producer, p) + "_e" + std::to_string(e.consumer) + "_" +
                       std::to_string(e.arg_index) + (e.is_output ? "o" : "");
    for (int d = 1; d <= e.depth; ++d) {
      decl << "  reg " << width_decl(p.width) << base << "_d" << d << ";\n";
      std::string src = d == 1 ? wname(e.producer, p) : base + "_d" + std::to_string(d - 1);
      seq << "    " << base << "_d" << d << " <= " << src << ";\n";
    }
  }

  // Recirculation delay chains (one per feedback read).
  for (NodeId id = 0; id < nodes.size(); ++id) {
    const ExprNode& n = nodes[id];
    if (n.op != Op::Recirculate) continue;
    int delay = design.arc_delays()[n.value];
    const ExprNode& src = nodes[n.args[0]];
    auto& decl = decl_of(n.section);
    auto& seq = seq_of(n.section);
    auto& logic = logic_of(n.section);
    std::string base = wname(id, n) + "_fb";
    for (int d = 1; d <= delay; ++d) {
      decl << "  reg " << width_decl(n.width) << base << "_d" << d << ";\n";
      std::string from = d == 1 ? wname(n.args[0], src) : base + "_d" + std::to_string(d - 1);
      seq << "    " << base << "_d" << d << " <= " << from << ";\n";
    }
    decl << "  wire " << width_decl(n.width) << wname(id, n) << ";\n";
    logic << "  assign " << wname(id, n) << " = " << base << "_d" << delay << ";\n";
  }

  // Combinational logic in evaluation order.
  int regfile_writes = 0, mem_writes_n = 0;
  for (NodeId id : design.eval_order()) {
    const ExprNode& n = nodes[id];
    if (n.op == Op::Recirculate) continue;
    auto& decl = decl_of(n.section);
    auto& logic = logic_of(n.section);
    auto& seq = seq_of(n.section);
    auto a = [&](int k) { return operand_name(id, k, n.args[static_cast<size_t>(k)]); };
    std::string w = wname(id, n);

    switch (n.op) {
      case Op::Input:
        break;  // module port
      case Op::Constant:
        decl << "  wire " << width_decl(n.width) << w << " = " << vhex(n.value, n.width)
             << ";\n";
        break;
      case Op::RegfileWrite: {
        seq << "    if (" << a(2) << " && (" << a(0) << " != 5'h0)) regs[" << a(0)
            << "] <= " << a(1) << ";\n";
        ++regfile_writes;
        break;
      }
      case Op::MemWrite: {
        for (int b = 0; b < 4; ++b) {
          seq << "    if (" << a(3) << " && " << a(2) << "[" << b << "]) mem[(" << a(0)
              << " & 32'hfffffffc) + " << b << "] <= " << a(1) << "[" << (8 * b + 7) << ":"
              << 8 * b << "];\n";
        }
        ++mem_writes_n;
        break;
      }
      default: {
        decl << "  wire " << width_decl(n.width) << w << ";\n";
        logic << "  assign " << w << " = ";
        switch (n.op) {
          case Op::Add: logic << a(0) << " + " << a(1); break;
          case Op::Sub: logic << a(0) << " - " << a(1); break;
          case Op::And: logic << a(0) << " & " << a(1); break;
          case Op::Or: logic << a(0) << " | " << a(1); break;
          case Op::Xor: logic << a(0) << " ^ " << a(1); break;
          case Op::Shl: logic << a(0) << " << " << a(1); break;
          case Op::ShrL: logic << a(0) << " >> " << a(1); break;
          case Op::ShrA:
            logic << "$signed(" << a(0) << ") >>> " << a(1);
            break;
          case Op::Eq: logic << a(0) << " == " << a(1); break;
          case Op::LtS: logic << "$signed(" << a(0) << ") < $signed(" << a(1) << ")"; break;
          case Op::LtU: logic << a(0) << " < " << a(1); break;
          case Op::Mux: logic << a(0) << " ? " << a(1) << " : " << a(2); break;
          case Op::Slice:
            logic << a(0) << "[" << (n.value + static_cast<uint64_t>(n.width) - 1) << ":"
                  << n.value << "]";
            break;
          case Op::Concat: logic << "{" << a(0) << ", " << a(1) << "}"; break;
          case Op::SignExtend: {
            int from = nodes[n.args[0]].width;
            if (from == n.width) {
              logic << a(0);
            } else {
              logic << "{{" << (n.width - from) << "{" << a(0) << "[" << (from - 1) << "]}}, "
                    << a(0) << "}";
            }
            break;
          }
          case Op::ZeroExtend: {
            int from = nodes[n.args[0]].width;
            if (from == n.width) {
              logic << a(0);
            } else {
              logic << "{" << (n.width - from) << "'h0, " << a(0) << "}";
            }
            break;
          }
          case Op::RegfileRead:
            logic << "(" << a(0) << " == 5'h0) ? 32'h0 : regs[" << a(0) << "]";
            break;
          case Op::MemRead:
            logic << "{mem[(" << a(0) << " & 32'hfffffffc) + 3], mem[(" << a(0)
                  << " & 32'hfffffffc) + 2], mem[(" << a(0) << " & 32'hfffffffc) + 1], mem[("
                  << a(0) << " & 32'hfffffffc)]}";
            break;
          default:
            logic << "1'b0";
            break;
        }
        logic << ";\n";
      }
    }
  }

  std::ostringstream out;
  out << "// generated pipeline core\n";
  out << "module " << module_name << "(\n";
  out << "  input wire clk";
  for (NodeId id : design.input_nodes()) {
    const ExprNode& n = nodes[id];
    out << ",\n  input wire " << width_decl(n.width) << wname(id, n);
  }
  const auto& ports = g.outputs();
  for (size_t i = 0; i < ports.size(); ++i) {
    out << ",\n  output wire " << width_decl(nodes[ports[i].node].width) << "o_"
        << ports[i].name;
  }
  out << "\n);\n";
  out << "  reg [31:0] regs [0:31];\n";
  out << "  reg [7:0] mem [0:" << (mem_bytes - 1) << "];\n";

  // input nodes alias their port names
  for (NodeId id : design.input_nodes()) {
    (void)id;  // port name is the wire name already
  }

  // output assignments, through their staging taps
  std::ostringstream core_outs, har_outs;
  for (size_t i = 0; i < ports.size(); ++i) {
    std::string rhs = wname(ports[i].node, nodes[ports[i].node]);
    for (const auto& e : design.staged_edges()) {
      if (e.is_output && e.consumer == static_cast<NodeId>(i)) rhs = chain_tap(e);
    }
    auto& sink = ports[i].section == stagegraph::kSectionHarness ? har_outs : core_outs;
    sink << "  assign o_" << ports[i].name << " = " << rhs << ";\n";
  }

  out << "// ==== section: core ====\n";
  out << core_decl.str();
  out << core_logic.str();
  out << core_outs.str();
  out << "  always @(posedge clk) begin\n" << core_seq.str() << "  end\n";
  out << "// ==== section: harness ====\n";
  out << har_decl.str();
  out << har_logic.str();
  out << har_outs.str();
  out << "  always @(posedge clk) begin\n" << har_seq.str() << "  end\n";
  out << "// ==== section: end ====\n";
  out << "endmodule\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// size report
// ---------------------------------------------------------------------------

uint64_t stripped_size(const std::string& text) {
  uint64_t count = 0;
  bool in_comment = false;
  bool pending_space = false;
  bool any = false;
  for (size_t i = 0; i < text.size(); ++i) {
    char ch = text[i];
    if (in_comment) {
      if (ch == '\n') in_comment = false;
      continue;
    }
    if (ch == '/' && i + 1 < text.size() && text[i + 1] == '/') {
      in_comment = true;
      continue;
    }
    if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r') {
      pending_space = true;
      continue;
    }
    if (pending_space && any) count += 1;  // collapsed run
    pending_space = false;
    any = true;
    count += 1;
  }
  return count;
}

namespace {

std::string section_slice(const std::string& text, const std::string& begin_marker,
                          const std::string& end_marker) {
  size_t b = text.find(begin_marker);
  size_t e = text.find(end_marker);
  if (b == std::string::npos || e == std::string::npos || e < b) return {};
  b += begin_marker.size();
  return text.substr(b, e - b);
}

}  // namespace

SizeReport size_report(const std::vector<core::CoreConfig>& configs) {
  SizeReport report;
  for (const auto& config : configs) {
    stagegraph::DesignGraph graph = core::build_core(config);
    harness::attach_rvfi(graph);
    stagegraph::ElaboratedDesign design = stagegraph::elaborate(graph, config.stage_map);
    std::string text = emit_verilog(design, "warp_core", config.mem_size);

    SizeEntry entry;
    entry.config_name = config.stage_map.name;
    entry.construction_ops = graph.log().size();
    entry.construction_log = graph.log_text();
    entry.staging_registers = design.staging_stats().registers;
    entry.staging_bits = design.staging_stats().bits;
    entry.core_chars = stripped_size(
        section_slice(text, "// ==== section: core ====", "// ==== section: harness ===="));
    entry.harness_chars = stripped_size(
        section_slice(text, "// ==== section: harness ====", "// ==== section: end ===="));
    report.entries.push_back(std::move(entry));
  }
  return report;
}

std::string render_table(const SizeReport& report) {
  std::ostringstream os;
  os << "config        constr-ops  staging-regs  staging-bits  core-chars  harness-chars\n";
  for (const auto& e : report.entries) {
    os << e.config_name;
    for (size_t i = e.config_name.size(); i < 14; ++i) os << ' ';
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%10llu  %12llu  %12llu  %10llu  %13llu\n",
                  static_cast<unsigned long long>(e.construction_ops),
                  static_cast<unsigned long long>(e.staging_registers),
                  static_cast<unsigned long long>(e.staging_bits),
                  static_cast<unsigned long long>(e.core_chars),
                  static_cast<unsigned long long>(e.harness_chars));
    os << buf;
  }
  return os.str();
}

std::string report_to_json(const SizeReport& report) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& e : report.entries) {
    nlohmann::ordered_json entry;
    entry["config"] = e.config_name;
    entry["construction_ops"] = e.construction_ops;
    entry["staging_registers"] = e.staging_registers;
    entry["staging_bits"] = e.staging_bits;
    entry["core_chars"] = e.core_chars;
    entry["harness_chars"] = e.harness_chars;
    j.push_back(entry);
  }
  return j.dump(2) + "\n";
}

}  // namespace warpkit::backend
