#include "warpkit/stagegraph.hpp"

#include <algorithm>
#include <cstring>
#include <sstream>
#include <unordered_map>

namespace warpkit::stagegraph {

namespace {
constexpr const char* kStageNames[kNumStages] = {
    "NEXT_PC", "FETCH", "DECODE", "REG_RD", "EXECUTE", "RESULT", "REG_WR"};
}

const char* stage_name(VirtualStage s) { return kStageNames[static_cast<size_t>(s)]; }

std::optional<VirtualStage> stage_from_name(std::string_view name) {
  for (int i = 0; i < kNumStages; ++i) {
    if (name == kStageNames[i]) return static_cast<VirtualStage>(i);
  }
  return std::nullopt;
}

const char* op_name(Op op) {
  switch (op) {
    case Op::Constant: return "const";
    case Op::Input: return "input";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::And: return "and";
    case Op::Or: return "or";
    case Op::Xor: return "xor";
    case Op::Shl: return "shl";
    case Op::ShrL: return "shr_l";
    case Op::ShrA: return "shr_a";
    case Op::Eq: return "eq";
    case Op::LtS: return "lt_s";
    case Op::LtU: return "lt_u";
    case Op::Mux: return "mux";
    case Op::Slice: return "slice";
    case Op::Concat: return "concat";
    case Op::SignExtend: return "sext";
    case Op::ZeroExtend: return "zext";
    case Op::RegfileRead: return "regfile_read";
    case Op::RegfileWrite: return "regfile_write";
    case Op::MemRead: return "mem_read";
    case Op::MemWrite: return "mem_write";
    case Op::Recirculate: return "recirculate";
  }
  return "?";
}

uint64_t width_mask(int width) {
  return width >= 64 ? ~uint64_t{0} : ((uint64_t{1} << width) - 1);
}

// ---------------------------------------------------------------------------
// StageMap
// ---------------------------------------------------------------------------

StageMap StageMap::single_stage() {
  return StageMap{"1-stage", {0, 0, 0, 0, 0, 0, 0}};
}

StageMap StageMap::five_stage() {
  return StageMap{"5-stage", {0, 0, 1, 1, 2, 3, 4}};
}

StageMap StageMap::seven_stage() {
  return StageMap{"7-stage", {0, 1, 2, 3, 4, 5, 6}};
}

std::optional<StageMap> StageMap::preset(int stages) {
  switch (stages) {
    case 1: return single_stage();
    case 5: return five_stage();
    case 7: return seven_stage();
    default: return std::nullopt;
  }
}

std::string StageMapError::message() const {
  std::ostringstream os;
  if (kind == StageMapErrorKind::NonMonotone) {
    os << "stage map not monotone: " << stage_name(a) << " maps later than " << stage_name(b);
  } else {
    os << "stage map minimum physical index is not 0";
  }
  return os.str();
}

std::optional<StageMapError> validate_stage_map(const StageMap& map) {
  for (int i = 0; i + 1 < kNumStages; ++i) {
    if (map.physical[i] > map.physical[i + 1]) {
      return StageMapError{StageMapErrorKind::NonMonotone, static_cast<VirtualStage>(i),
                           static_cast<VirtualStage>(i + 1)};
    }
  }
  int min_phys = *std::min_element(map.physical.begin(), map.physical.end());
  if (min_phys != 0) {
    return StageMapError{StageMapErrorKind::MinNotZero};
  }
  return std::nullopt;
}

int staging_depth(const StageMap& map, VirtualStage producer, VirtualStage consumer) {
  if (stage_pos(consumer) < stage_pos(producer)) {
    throw GraphError(GraphErrorKind::StageOrderViolation,
                     std::string("consumer stage ") + stage_name(consumer) +
                         " precedes producer stage " + stage_name(producer));
  }
  int depth = map.phys(consumer) - map.phys(producer);
  if (depth < 0) {
    throw GraphError(GraphErrorKind::NegativeDepth,
                     std::string("negative staging depth from ") + stage_name(producer) +
                         " to " + stage_name(consumer));
  }
  return depth;
}

int Bundle::width() const {
  int w = 0;
  for (const auto& m : members) w += m.width;
  return w;
}

int DelaySpec::resolve(const StageMap& map) const {
  if (!stage_relative) return fixed;
  return (map.phys(to) - map.phys(from)) + fixed;
}

std::string DelaySpec::describe() const {
  std::ostringstream os;
  if (stage_relative) {
    os << "span(" << stage_name(from) << ".." << stage_name(to) << ")+" << fixed;
  } else {
    os << fixed;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// DesignGraph
// ---------------------------------------------------------------------------

int DesignGraph::width_of(NodeId id) const {
  if (id >= nodes_.size()) {
    throw GraphError(GraphErrorKind::InvalidNode, "node id out of range");
  }
  return nodes_[id].width;
}

void DesignGraph::check_operand_stage(VirtualStage node_stage, NodeId arg) const {
  const ExprNode& a = nodes_.at(arg);
  if (stage_pos(a.stage) > stage_pos(node_stage)) {
    throw GraphError(GraphErrorKind::StageOrderViolation,
                     std::string("operand at ") + stage_name(a.stage) +
                         " read from earlier stage " + stage_name(node_stage));
  }
}

void DesignGraph::log_node(NodeId id) {
  const ExprNode& n = nodes_[id];
  std::ostringstream os;
  os << "node " << id << " " << op_name(n.op) << " w=" << n.width << " s=" << stage_name(n.stage);
  if (n.op == Op::Constant || n.op == Op::Slice || n.op == Op::Recirculate) {
    os << " v=" << n.value;
  }
  if (!n.name.empty()) os << " n=" << n.name;
  os << " a=[";
  for (size_t i = 0; i < n.args.size(); ++i) {
    if (i) os << ",";
    os << n.args[i];
  }
  os << "] sec=" << n.section;
  log_.push_back(os.str());
}

NodeId DesignGraph::new_node(Op op, VirtualStage stage, int width, std::vector<NodeId> args,
                             uint64_t value, const std::string& name) {
  if (width < 1 || width > 64) {
    throw GraphError(GraphErrorKind::WidthMismatch, "node width must be 1..64");
  }
  // Derived ops sink to the stage floor; explicitly staged ops (constants,
  // inputs, ports) keep their requested stage.
  bool explicit_stage = op == Op::Constant || op == Op::Input || op == Op::RegfileRead ||
                        op == Op::RegfileWrite || op == Op::MemRead || op == Op::MemWrite ||
                        op == Op::Recirculate;
  if (!explicit_stage && stage_pos(stage_floor_) > stage_pos(stage)) {
    stage = stage_floor_;
  }
  for (NodeId a : args) check_operand_stage(stage, a);
  NodeId id = static_cast<NodeId>(nodes_.size());
  nodes_.push_back(ExprNode{op, stage, width, std::move(args), value, section_, name});
  log_node(id);
  return id;
}

NodeId DesignGraph::constant(int width, uint64_t value, VirtualStage stage) {
  return new_node(Op::Constant, stage, width, {}, value & width_mask(width));
}

NodeId DesignGraph::input(const std::string& name, int width, VirtualStage stage) {
  if (find_input(name)) {
    throw GraphError(GraphErrorKind::UnknownName, "duplicate input name: " + name);
  }
  NodeId id = new_node(Op::Input, stage, width, {}, inputs_.size(), name);
  inputs_.push_back(id);
  return id;
}

namespace {
VirtualStage later_stage(const ExprNode& a, const ExprNode& b) {
  return stage_pos(a.stage) >= stage_pos(b.stage) ? a.stage : b.stage;
}
}  // namespace

#define WARPKIT_BINOP(method, opcode)                                                   \
  NodeId DesignGraph::method(NodeId a, NodeId b) {                                      \
    if (width_of(a) != width_of(b)) {                                                   \
      throw GraphError(GraphErrorKind::WidthMismatch,                                   \
                       std::string(op_name(opcode)) + ": operand widths differ");       \
    }                                                                                   \
    return new_node(opcode, later_stage(nodes_[a], nodes_[b]), width_of(a), {a, b}, 0); \
  }

WARPKIT_BINOP(add, Op::Add)
WARPKIT_BINOP(sub, Op::Sub)
WARPKIT_BINOP(band, Op::And)
WARPKIT_BINOP(bor, Op::Or)
WARPKIT_BINOP(bxor, Op::Xor)
#undef WARPKIT_BINOP

NodeId DesignGraph::bnot(NodeId a) {
  NodeId ones = constant(width_of(a), width_mask(width_of(a)), nodes_[a].stage);
  return bxor(a, ones);
}

#define WARPKIT_SHIFT(method, opcode)                                                     \
  NodeId DesignGraph::method(NodeId value, NodeId amount) {                               \
    return new_node(opcode, later_stage(nodes_[value], nodes_[amount]), width_of(value),  \
                    {value, amount}, 0);                                                  \
  }

WARPKIT_SHIFT(shl, Op::Shl)
WARPKIT_SHIFT(shr_l, Op::ShrL)
WARPKIT_SHIFT(shr_a, Op::ShrA)
#undef WARPKIT_SHIFT

#define WARPKIT_CMP(method, opcode)                                                       \
  NodeId DesignGraph::method(NodeId a, NodeId b) {                                        \
    if (width_of(a) != width_of(b)) {                                                     \
      throw GraphError(GraphErrorKind::WidthMismatch,                                     \
                       std::string(op_name(opcode)) + ": operand widths differ");         \
    }                                                                                     \
    return new_node(opcode, later_stage(nodes_[a], nodes_[b]), 1, {a, b}, 0);             \
  }

WARPKIT_CMP(eq, Op::Eq)
WARPKIT_CMP(lt_s, Op::LtS)
WARPKIT_CMP(lt_u, Op::LtU)
#undef WARPKIT_CMP

NodeId DesignGraph::mux(NodeId sel, NodeId if_true, NodeId if_false) {
  if (width_of(sel) != 1) {
    throw GraphError(GraphErrorKind::WidthMismatch, "mux selector must be 1 bit");
  }
  if (width_of(if_true) != width_of(if_false)) {
    throw GraphError(GraphErrorKind::WidthMismatch, "mux arms have different widths");
  }
  VirtualStage st = later_stage(nodes_[sel], nodes_[if_true]);
  if (stage_pos(nodes_[if_false].stage) > stage_pos(st)) st = nodes_[if_false].stage;
  return new_node(Op::Mux, st, width_of(if_true), {sel, if_true, if_false}, 0);
}

NodeId DesignGraph::slice(NodeId a, int low, int width) {
  if (low < 0 || width < 1 || low + width > width_of(a)) {
    throw GraphError(GraphErrorKind::WidthMismatch, "slice out of range");
  }
  return new_node(Op::Slice, nodes_[a].stage, width, {a}, static_cast<uint64_t>(low));
}

NodeId DesignGraph::concat(NodeId high, NodeId low) {
  int w = width_of(high) + width_of(low);
  if (w > 64) {
    throw GraphError(GraphErrorKind::WidthMismatch, "concat wider than 64 bits");
  }
  return new_node(Op::Concat, later_stage(nodes_[high], nodes_[low]), w, {high, low}, 0);
}

NodeId DesignGraph::sign_extend(NodeId a, int width) {
  if (width < width_of(a)) {
    throw GraphError(GraphErrorKind::WidthMismatch, "sign_extend narrows");
  }
  return new_node(Op::SignExtend, nodes_[a].stage, width, {a}, 0);
}

NodeId DesignGraph::zero_extend(NodeId a, int width) {
  if (width < width_of(a)) {
    throw GraphError(GraphErrorKind::WidthMismatch, "zero_extend narrows");
  }
  return new_node(Op::ZeroExtend, nodes_[a].stage, width, {a}, 0);
}

NodeId DesignGraph::regfile_read(NodeId addr, VirtualStage stage) {
  return new_node(Op::RegfileRead, stage, 32, {addr}, 0);
}

void DesignGraph::regfile_write(NodeId addr, NodeId data, NodeId enable, VirtualStage stage) {
  if (width_of(data) != 32 || width_of(enable) != 1) {
    throw GraphError(GraphErrorKind::WidthMismatch, "regfile_write: data 32b, enable 1b");
  }
  new_node(Op::RegfileWrite, stage, 1, {addr, data, enable}, 0);
}

NodeId DesignGraph::mem_read(NodeId addr, VirtualStage stage) {
  if (width_of(addr) != 32) {
    throw GraphError(GraphErrorKind::WidthMismatch, "mem_read: address must be 32b");
  }
  return new_node(Op::MemRead, stage, 32, {addr}, 0);
}

void DesignGraph::mem_write(NodeId addr, NodeId data, NodeId byte_mask, NodeId enable,
                            VirtualStage stage) {
  if (width_of(addr) != 32 || width_of(data) != 32 || width_of(byte_mask) != 4 ||
      width_of(enable) != 1) {
    throw GraphError(GraphErrorKind::WidthMismatch,
                     "mem_write: addr/data 32b, mask 4b, enable 1b");
  }
  new_node(Op::MemWrite, stage, 1, {addr, data, byte_mask, enable}, 0);
}

void DesignGraph::output(const std::string& name, NodeId node, VirtualStage stage) {
  check_operand_stage(stage, node);
  outputs_.push_back(OutputPort{name, node, stage, section_});
  std::ostringstream os;
  os << "output " << name << " node=" << node << " s=" << stage_name(stage)
     << " sec=" << section_;
  log_.push_back(os.str());
}

Signal DesignGraph::signal(const std::string& name, NodeId node) {
  for (const auto& s : signals_) {
    if (s.name == name) {
      throw GraphError(GraphErrorKind::UnknownName, "duplicate signal name: " + name);
    }
  }
  Signal s{name, node, width_of(node), nodes_[node].stage};
  signals_.push_back(s);
  log_.push_back("signal " + name + " node=" + std::to_string(node));
  return s;
}

Bundle DesignGraph::make_bundle(const std::string& name, std::vector<Signal> members) {
  for (size_t i = 0; i < members.size(); ++i) {
    for (size_t j = i + 1; j < members.size(); ++j) {
      if (members[i].name == members[j].name) {
        throw GraphError(GraphErrorKind::UnknownName,
                         "duplicate member name in bundle: " + members[i].name);
      }
    }
  }
  Bundle b{name, std::move(members)};
  bundles_.push_back(b);
  std::ostringstream os;
  os << "bundle " << name << " members=[";
  for (size_t i = 0; i < b.members.size(); ++i) {
    if (i) os << ",";
    os << b.members[i].name << ":" << b.members[i].node;
  }
  os << "]";
  log_.push_back(os.str());
  return b;
}

Bundle DesignGraph::recirculate(const Bundle& source, const DelaySpec& delay,
                                const std::string& arc_name) {
  if (!delay.stage_relative && delay.fixed <= 0) {
    throw GraphError(GraphErrorKind::CombinationalLoop,
                     "feedback arc needs delay >= 1 cycle");
  }
  FeedbackArc arc;
  arc.name = arc_name;
  arc.delay = delay;
  arc.section = section_;
  uint64_t arc_id = arcs_.size();
  Bundle out{arc_name, {}};
  for (const auto& m : source.members) {
    arc.sources.push_back(m.node);
    NodeId r = new_node(Op::Recirculate, m.stage, m.width, {m.node}, arc_id);
    arc.results.push_back(r);
    out.members.push_back(Signal{m.name, r, m.width, m.stage});
  }
  arcs_.push_back(std::move(arc));
  std::ostringstream os;
  os << "feedback " << arc_name << " delay=" << delay.describe() << " members="
     << source.members.size();
  log_.push_back(os.str());
  bundles_.push_back(out);
  return out;
}

NodeId DesignGraph::add_raw_node(ExprNode node) {
  NodeId id = static_cast<NodeId>(nodes_.size());
  node.section = section_;
  nodes_.push_back(std::move(node));
  log_node(id);
  return id;
}

void DesignGraph::add_raw_feedback(FeedbackArc arc) {
  uint64_t arc_id = arcs_.size();
  for (size_t i = 0; i < arc.sources.size(); ++i) {
    const ExprNode& src = nodes_.at(arc.sources[i]);
    NodeId r = add_raw_node(ExprNode{Op::Recirculate, src.stage, src.width,
                                     {arc.sources[i]}, arc_id, section_, ""});
    arc.results.push_back(r);
  }
  log_.push_back("feedback(raw) " + arc.name + " delay=" + arc.delay.describe());
  arcs_.push_back(std::move(arc));
}

std::optional<Signal> DesignGraph::find_signal(const std::string& name) const {
  for (const auto& s : signals_) {
    if (s.name == name) return s;
  }
  return std::nullopt;
}

std::optional<Bundle> DesignGraph::find_bundle(const std::string& name) const {
  for (const auto& b : bundles_) {
    if (b.name == name) return b;
  }
  return std::nullopt;
}

std::optional<NodeId> DesignGraph::find_input(const std::string& name) const {
  for (NodeId id : inputs_) {
    if (nodes_[id].name == name) return id;
  }
  return std::nullopt;
}

std::string DesignGraph::log_text() const {
  std::string out;
  for (const auto& line : log_) {
    out += line;
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// align / recirculate helpers
// ---------------------------------------------------------------------------

Bundle align_bundle(const DesignGraph& graph, const Bundle& bundle, VirtualStage target) {
  Bundle out{bundle.name + "@" + stage_name(target), {}};
  for (const auto& m : bundle.members) {
    const ExprNode& n = graph.node(m.node);
    if (stage_pos(n.stage) > stage_pos(target)) {
      throw GraphError(GraphErrorKind::StageOrderViolation,
                       "bundle member " + m.name + " at " + stage_name(n.stage) +
                           " is past target stage " + stage_name(target));
    }
    out.members.push_back(Signal{m.name, m.node, m.width, target});
  }
  return out;
}

Bundle recirculate_bundle(DesignGraph& graph, const Bundle& bundle, int delay_cycles) {
  if (delay_cycles == 0) {
    throw GraphError(GraphErrorKind::CombinationalLoop,
                     "recirculating with delay 0 forms a combinational loop");
  }
  if (delay_cycles < 0) {
    throw GraphError(GraphErrorKind::CombinationalLoop, "recirculation delay must be >= 1");
  }
  DelaySpec d;
  d.fixed = delay_cycles;
  return graph.recirculate(bundle, d, bundle.name + "_recirc");
}

// ---------------------------------------------------------------------------
// Elaboration
// ---------------------------------------------------------------------------

ElaboratedDesign elaborate(const DesignGraph& graph, const StageMap& map,
                           const ElaborateTweaks& tweaks) {
  if (auto err = validate_stage_map(map)) {
    throw GraphError(GraphErrorKind::StageOrderViolation, err->message());
  }
  ElaboratedDesign d;
  d.graph_ = graph;
  d.map_ = map;

  const auto& nodes = d.graph_.nodes();
  size_t n = nodes.size();
  d.hist_len_.assign(n, 1);
  d.arg_depth_offset_.assign(n + 1, 0);

  // Resolve arc delays.
  for (const auto& arc : d.graph_.arcs()) {
    int delay = arc.delay.resolve(map) + tweaks.arc_delay_adjust;
    if (delay < 1) delay = 1;
    d.arc_delays_.push_back(delay);
  }

  // Per-argument staging depths; also accumulate staging statistics.
  auto note_depth = [&](NodeId producer, int depth, int section) {
    if (depth > d.hist_len_[producer] - 1) d.hist_len_[producer] = depth + 1;
    if (depth > 0) {
      d.stats_.registers += static_cast<uint64_t>(depth);
      d.stats_.bits += static_cast<uint64_t>(depth) * nodes[producer].width;
      if (section == kSectionHarness) {
        d.stats_.harness_registers += static_cast<uint64_t>(depth);
      } else {
        d.stats_.core_registers += static_cast<uint64_t>(depth);
      }
    }
  };

  for (NodeId id = 0; id < n; ++id) {
    const ExprNode& node = nodes[id];
    d.arg_depth_offset_[id] = static_cast<int>(d.arg_depths_.size());
    if (node.op == Op::Recirculate) {
      // feedback read; delay handled via the arc, not stage arithmetic
      int delay = d.arc_delays_.at(node.value);
      NodeId src = node.args.at(0);
      if (delay > d.hist_len_[src] - 1) d.hist_len_[src] = delay + 1;
      d.arg_depths_.push_back(delay);
      continue;
    }
    for (size_t k = 0; k < node.args.size(); ++k) {
      NodeId a = node.args[k];
      int depth = staging_depth(map, nodes[a].stage, node.stage);
      d.arg_depths_.push_back(depth);
      note_depth(a, depth, node.section);
      if (depth > 0) {
        d.staged_edges_.push_back(
            StagedEdge{id, static_cast<int>(k), a, depth, false, node.section});
      }
    }
  }
  d.arg_depth_offset_[n] = static_cast<int>(d.arg_depths_.size());

  // Output ports stage their producers too.
  int out_idx = 0;
  for (const auto& out : d.graph_.outputs()) {
    int depth = staging_depth(map, nodes[out.node].stage, out.stage);
    d.output_depths_.push_back(depth);
    note_depth(out.node, depth, out.section);
    if (depth > 0) {
      d.staged_edges_.push_back(
          StagedEdge{static_cast<NodeId>(out_idx), 0, out.node, depth, true, out.section});
    }
    ++out_idx;
  }

  // History ring offsets.
  d.hist_offset_.assign(n, 0);
  uint32_t total = 0;
  for (NodeId id = 0; id < n; ++id) {
    d.hist_offset_[id] = total;
    total += static_cast<uint32_t>(d.hist_len_[id]);
  }
  d.hist_total_ = total;

  // Topological order over same-cycle (depth 0) dependencies.
  std::vector<int> pending(n, 0);
  std::vector<std::vector<NodeId>> dependents(n);
  for (NodeId id = 0; id < n; ++id) {
    const ExprNode& node = nodes[id];
    if (node.op == Op::Recirculate) continue;
    int base = d.arg_depth_offset_[id];
    for (size_t k = 0; k < node.args.size(); ++k) {
      if (d.arg_depths_[base + static_cast<int>(k)] == 0) {
        pending[id]++;
        dependents[node.args[k]].push_back(id);
      }
    }
  }
  std::vector<NodeId> ready;
  for (NodeId id = 0; id < n; ++id) {
    if (pending[id] == 0) ready.push_back(id);
  }
  d.eval_order_.reserve(n);
  size_t cursor = 0;
  while (cursor < ready.size()) {
    NodeId id = ready[cursor++];
    d.eval_order_.push_back(id);
    for (NodeId dep : dependents[id]) {
      if (--pending[dep] == 0) ready.push_back(dep);
    }
  }
  if (d.eval_order_.size() != n) {
    throw GraphError(GraphErrorKind::CombinationalLoop,
                     "combinational cycle in same-stage logic");
  }

  d.input_nodes_ = d.graph_.inputs();
  return d;
}

int ElaboratedDesign::input_index(const std::string& name) const {
  for (size_t i = 0; i < input_nodes_.size(); ++i) {
    if (graph_.node(input_nodes_[i]).name == name) return static_cast<int>(i);
  }
  throw GraphError(GraphErrorKind::UnknownName, "unknown input: " + name);
}

int ElaboratedDesign::output_index(const std::string& name) const {
  const auto& outs = graph_.outputs();
  for (size_t i = 0; i < outs.size(); ++i) {
    if (outs[i].name == name) return static_cast<int>(i);
  }
  throw GraphError(GraphErrorKind::UnknownName, "unknown output: " + name);
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

EvalState::EvalState(const ElaboratedDesign& design, size_t mem_size)
    : hist_(design.hist_total_, 0), mem_(mem_size, 0) {}

void EvalState::load_image(const std::vector<uint8_t>& image) {
  if (image.size() > mem_.size()) {
    throw GraphError(GraphErrorKind::WidthMismatch, "image larger than memory");
  }
  std::copy(image.begin(), image.end(), mem_.begin());
}

struct Evaluator {
  static CycleOutputs run(const ElaboratedDesign& d, EvalState& st,
                          const std::vector<uint64_t>& inputs) {
    const auto& nodes = d.graph_.nodes();
    if (inputs.size() != d.input_nodes_.size()) {
      throw GraphError(GraphErrorKind::WidthMismatch, "wrong number of input values");
    }
    for (size_t i = 0; i < inputs.size(); ++i) {
      const ExprNode& n = nodes[d.input_nodes_[i]];
      if (inputs[i] & ~width_mask(n.width)) {
        throw GraphError(GraphErrorKind::WidthMismatch,
                         "input value does not fit width: " + n.name);
      }
    }

    uint64_t t = st.cycle_;
    auto hist_at = [&](NodeId id, int back) -> uint64_t {
      if (back > static_cast<int>(t)) return 0;  // before reset, registers read 0
      uint64_t when = t - static_cast<uint64_t>(back);
      int len = d.hist_len_[id];
      return st.hist_[d.hist_offset_[id] + static_cast<uint32_t>(when % len)];
    };
    auto hist_put = [&](NodeId id, uint64_t v) {
      int len = d.hist_len_[id];
      st.hist_[d.hist_offset_[id] + static_cast<uint32_t>(t % len)] = v;
    };

    struct RegWrite { uint32_t addr; uint32_t data; };
    struct MemWrite { uint32_t addr; uint32_t data; uint32_t mask; };
    std::vector<RegWrite> reg_writes;
    std::vector<MemWrite> mem_writes;

    for (NodeId id : d.eval_order_) {
      const ExprNode& n = nodes[id];
      int abase = d.arg_depth_offset_[id];
      auto arg = [&](int k) -> uint64_t {
        return hist_at(n.args[static_cast<size_t>(k)], d.arg_depths_[abase + k]);
      };
      uint64_t mask = width_mask(n.width);
      uint64_t v = 0;
      switch (n.op) {
        case Op::Constant: v = n.value; break;
        case Op::Input: v = inputs[n.value]; break;
        case Op::Add: v = (arg(0) + arg(1)) & mask; break;
        case Op::Sub: v = (arg(0) - arg(1)) & mask; break;
        case Op::And: v = arg(0) & arg(1); break;
        case Op::Or: v = arg(0) | arg(1); break;
        case Op::Xor: v = arg(0) ^ arg(1); break;
        case Op::Shl: {
          uint64_t amt = arg(1);
          v = amt >= static_cast<uint64_t>(n.width) ? 0 : (arg(0) << amt) & mask;
          break;
        }
        case Op::ShrL: {
          uint64_t amt = arg(1);
          v = amt >= static_cast<uint64_t>(n.width) ? 0 : (arg(0) >> amt);
          break;
        }
        case Op::ShrA: {
          uint64_t amt = arg(1);
          int w = n.width;
          int64_t sv = static_cast<int64_t>(arg(0) << (64 - w)) >> (64 - w);
          if (amt >= static_cast<uint64_t>(w)) amt = static_cast<uint64_t>(w) - 1;
          v = static_cast<uint64_t>(sv >> amt) & mask;
          break;
        }
        case Op::Eq: v = arg(0) == arg(1); break;
        case Op::LtS: {
          int w = nodes[n.args[0]].width;
          int64_t a = static_cast<int64_t>(arg(0) << (64 - w)) >> (64 - w);
          int64_t b = static_cast<int64_t>(arg(1) << (64 - w)) >> (64 - w);
          v = a < b;
          break;
        }
        case Op::LtU: v = arg(0) < arg(1); break;
        case Op::Mux: v = arg(0) ? arg(1) : arg(2); break;
        case Op::Slice: v = (arg(0) >> n.value) & mask; break;
        case Op::Concat: {
          int low_w = nodes[n.args[1]].width;
          v = ((arg(0) << low_w) | arg(1)) & mask;
          break;
        }
        case Op::SignExtend: {
          int w = nodes[n.args[0]].width;
          int64_t sv = static_cast<int64_t>(arg(0) << (64 - w)) >> (64 - w);
          v = static_cast<uint64_t>(sv) & mask;
          break;
        }
        case Op::ZeroExtend: v = arg(0); break;
        case Op::RegfileRead: v = st.regs_[arg(0) & 31]; break;
        case Op::RegfileWrite: {
          if (arg(2)) {
            reg_writes.push_back(RegWrite{static_cast<uint32_t>(arg(0) & 31),
                                          static_cast<uint32_t>(arg(1))});
          }
          v = 0;
          break;
        }
        case Op::MemRead: {
          uint32_t a = static_cast<uint32_t>(arg(0)) & ~3u;
          if (static_cast<size_t>(a) + 3 < st.mem_.size()) {
            v = static_cast<uint32_t>(st.mem_[a]) | (st.mem_[a + 1] << 8) |
                (st.mem_[a + 2] << 16) | (static_cast<uint32_t>(st.mem_[a + 3]) << 24);
          }
          break;
        }
        case Op::MemWrite: {
          if (arg(3)) {
            mem_writes.push_back(MemWrite{static_cast<uint32_t>(arg(0)) & ~3u,
                                          static_cast<uint32_t>(arg(1)),
                                          static_cast<uint32_t>(arg(2) & 0xf)});
          }
          v = 0;
          break;
        }
        case Op::Recirculate: v = arg(0); break;
      }
      hist_put(id, v);
    }

    // Array updates take effect at the end of the cycle.
    for (const auto& w : reg_writes) {
      if (w.addr != 0) st.regs_[w.addr] = w.data;
    }
    for (const auto& w : mem_writes) {
      for (int b = 0; b < 4; ++b) {
        if ((w.mask >> b) & 1) {
          size_t a = static_cast<size_t>(w.addr) + static_cast<size_t>(b);
          if (a < st.mem_.size()) st.mem_[a] = static_cast<uint8_t>(w.data >> (8 * b));
        }
      }
    }

    CycleOutputs out;
    const auto& ports = d.graph_.outputs();
    out.values_.resize(ports.size());
    for (size_t i = 0; i < ports.size(); ++i) {
      out.values_[i] = hist_at(ports[i].node, d.output_depths_[i]);
    }
    st.cycle_++;
    return out;
  }
};

CycleOutputs eval_cycle(const ElaboratedDesign& design, EvalState& state,
                        const std::vector<uint64_t>& inputs) {
  return Evaluator::run(design, state, inputs);
}

}  // namespace warpkit::stagegraph
