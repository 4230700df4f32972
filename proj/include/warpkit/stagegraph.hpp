#pragma once
// Timing-abstract pipeline IR: signals are declared against virtual stages,
// a StageMap assigns each virtual stage to a physical pipeline stage, and
// elaboration inserts the staging registers implied by every cross-stage
// read. An elaborated design can be evaluated cycle by cycle or emitted as
// Verilog by the backend.

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace warpkit::stagegraph {

// ---------------------------------------------------------------------------
// Virtual stages and stage maps
// ---------------------------------------------------------------------------

enum class VirtualStage : int {
  NextPc = 0,
  Fetch,
  Decode,
  RegRd,
  Execute,
  Result,
  RegWr,
};

inline constexpr int kNumStages = 7;

constexpr int stage_pos(VirtualStage s) { return static_cast<int>(s); }
const char* stage_name(VirtualStage s);
std::optional<VirtualStage> stage_from_name(std::string_view name);

// Maps each virtual stage to a physical stage index. Must be monotone in
// virtual-stage order with minimum index 0.
struct StageMap {
  std::string name;
  std::array<int, kNumStages> physical{};

  int phys(VirtualStage s) const { return physical[static_cast<size_t>(s)]; }
  int depth() const { return phys(VirtualStage::RegWr) - phys(VirtualStage::NextPc); }

  static StageMap single_stage();  // everything in physical stage 0
  static StageMap five_stage();    // classic fetch/decode/execute/mem/wb grouping
  static StageMap seven_stage();   // identity map
  static std::optional<StageMap> preset(int stages);
};

enum class StageMapErrorKind { NonMonotone, MinNotZero };

struct StageMapError {
  StageMapErrorKind kind;
  VirtualStage a{VirtualStage::NextPc};
  VirtualStage b{VirtualStage::NextPc};
  std::string message() const;
};

std::optional<StageMapError> validate_stage_map(const StageMap& map);

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

enum class GraphErrorKind {
  StageOrderViolation,
  NegativeDepth,
  CombinationalLoop,
  WidthMismatch,
  UnknownName,
  InvalidNode,
};

class GraphError : public std::runtime_error {
 public:
  GraphError(GraphErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  GraphErrorKind kind() const { return kind_; }

 private:
  GraphErrorKind kind_;
};

// Registers needed to deliver `producer`'s value at `consumer`'s physical
// stage. Throws NegativeDepth when the map places the consumer earlier.
int staging_depth(const StageMap& map, VirtualStage producer, VirtualStage consumer);

// ---------------------------------------------------------------------------
// Expression nodes, signals, bundles
// ---------------------------------------------------------------------------

enum class Op {
  Constant,
  Input,
  Add,
  Sub,
  And,
  Or,
  Xor,
  Shl,
  ShrL,
  ShrA,
  Eq,
  LtS,
  LtU,
  Mux,
  Slice,
  Concat,
  SignExtend,
  ZeroExtend,
  RegfileRead,
  RegfileWrite,
  MemRead,
  MemWrite,
  Recirculate,  // backed by a feedback arc; value is the source delayed
};

const char* op_name(Op op);

using NodeId = uint32_t;

inline constexpr int kSectionCore = 0;
inline constexpr int kSectionHarness = 1;

struct ExprNode {
  Op op;
  VirtualStage stage;
  int width = 0;                // 1..64
  std::vector<NodeId> args;
  uint64_t value = 0;           // Constant: literal; Slice: low bit; Recirculate: arc id
  int section = kSectionCore;
  std::string name;             // inputs and named signals only
};

struct Signal {
  std::string name;
  NodeId node = 0;
  int width = 0;
  VirtualStage stage{VirtualStage::NextPc};
};

struct Bundle {
  std::string name;
  std::vector<Signal> members;
  int width() const;
};

// Feedback delay, either a literal cycle count or a physical-stage span plus
// a constant, resolved against the StageMap at elaboration time.
struct DelaySpec {
  int fixed = 0;
  bool stage_relative = false;
  VirtualStage from{VirtualStage::NextPc};
  VirtualStage to{VirtualStage::NextPc};
  int resolve(const StageMap& map) const;
  std::string describe() const;
};

struct FeedbackArc {
  std::string name;
  DelaySpec delay;
  std::vector<NodeId> sources;
  std::vector<NodeId> results;  // Recirculate nodes, one per source
  int section = kSectionCore;
};

// ---------------------------------------------------------------------------
// DesignGraph
// ---------------------------------------------------------------------------

class DesignGraph {
 public:
  // Every mutation appends one canonical line to the construction log, so
  // builds can be compared for structural identity.
  NodeId constant(int width, uint64_t value, VirtualStage stage);
  NodeId input(const std::string& name, int width, VirtualStage stage);

  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId band(NodeId a, NodeId b);
  NodeId bor(NodeId a, NodeId b);
  NodeId bxor(NodeId a, NodeId b);
  NodeId bnot(NodeId a);  // xor with all-ones constant
  NodeId shl(NodeId value, NodeId amount);
  NodeId shr_l(NodeId value, NodeId amount);
  NodeId shr_a(NodeId value, NodeId amount);
  NodeId eq(NodeId a, NodeId b);
  NodeId lt_s(NodeId a, NodeId b);
  NodeId lt_u(NodeId a, NodeId b);
  NodeId mux(NodeId sel, NodeId if_true, NodeId if_false);
  NodeId slice(NodeId a, int low, int width);
  NodeId concat(NodeId high, NodeId low);
  NodeId sign_extend(NodeId a, int width);
  NodeId zero_extend(NodeId a, int width);

  NodeId regfile_read(NodeId addr, VirtualStage stage);
  void regfile_write(NodeId addr, NodeId data, NodeId enable, VirtualStage stage);
  NodeId mem_read(NodeId addr, VirtualStage stage);
  void mem_write(NodeId addr, NodeId data, NodeId byte_mask, NodeId enable, VirtualStage stage);

  void output(const std::string& name, NodeId node, VirtualStage stage);

  Signal signal(const std::string& name, NodeId node);
  Bundle make_bundle(const std::string& name, std::vector<Signal> members);

  // Feedback: the returned bundle's members carry, at cycle t, the source
  // members' values from cycle t - delay. Members keep their source stages.
  Bundle recirculate(const Bundle& source, const DelaySpec& delay, const std::string& arc_name);

  // Escape hatches with no validation, for building deliberately broken
  // graphs in lint tests. Still logged.
  NodeId add_raw_node(ExprNode node);
  void add_raw_feedback(FeedbackArc arc);

  void set_section(int section) { section_ = section; }
  int current_section() const { return section_; }

  // Minimum stage for nodes created from now on; a node's stage is the
  // latest of its operands' stages and this floor.
  void at(VirtualStage stage) { stage_floor_ = stage; }
  VirtualStage stage_floor() const { return stage_floor_; }

  const ExprNode& node(NodeId id) const { return nodes_.at(id); }
  const std::vector<ExprNode>& nodes() const { return nodes_; }
  const std::vector<FeedbackArc>& arcs() const { return arcs_; }
  struct OutputPort {
    std::string name;
    NodeId node;
    VirtualStage stage;
    int section;
  };
  const std::vector<OutputPort>& outputs() const { return outputs_; }
  const std::vector<NodeId>& inputs() const { return inputs_; }

  std::optional<Signal> find_signal(const std::string& name) const;
  std::optional<Bundle> find_bundle(const std::string& name) const;
  std::optional<NodeId> find_input(const std::string& name) const;

  const std::vector<std::string>& log() const { return log_; }
  std::string log_text() const;

 private:
  NodeId new_node(Op op, VirtualStage stage, int width, std::vector<NodeId> args,
                  uint64_t value, const std::string& name = {});
  void check_operand_stage(VirtualStage node_stage, NodeId arg) const;
  int width_of(NodeId id) const;
  void log_node(NodeId id);

  std::vector<ExprNode> nodes_;
  std::vector<FeedbackArc> arcs_;
  std::vector<OutputPort> outputs_;
  std::vector<NodeId> inputs_;
  std::vector<Signal> signals_;
  std::vector<Bundle> bundles_;
  std::vector<std::string> log_;
  int section_ = kSectionCore;
  VirtualStage stage_floor_ = VirtualStage::NextPc;
};

// Checks every member sits at or before `target` and returns the same
// members re-stamped at `target`; the staging registers themselves are
// implied by reads at the target stage.
Bundle align_bundle(const DesignGraph& graph, const Bundle& bundle, VirtualStage target);

// Bundle-level feedback with a literal delay. Delay 0 is a combinational loop.
Bundle recirculate_bundle(DesignGraph& graph, const Bundle& bundle, int delay_cycles);

// ---------------------------------------------------------------------------
// Elaboration
// ---------------------------------------------------------------------------

struct StagingStats {
  uint64_t registers = 0;  // one register per cycle of delay per cross-stage read
  uint64_t bits = 0;
  uint64_t core_registers = 0;
  uint64_t harness_registers = 0;
};

struct StagedEdge {
  NodeId consumer;   // node id, or output index when is_output
  int arg_index;
  NodeId producer;
  int depth;
  bool is_output = false;
  int section = kSectionCore;
};

struct ElaborateTweaks {
  int arc_delay_adjust = 0;  // fault injection for the verification suite
};

class ElaboratedDesign {
 public:
  const DesignGraph& graph() const { return graph_; }
  const StageMap& map() const { return map_; }
  const StagingStats& staging_stats() const { return stats_; }
  const std::vector<NodeId>& eval_order() const { return eval_order_; }
  const std::vector<StagedEdge>& staged_edges() const { return staged_edges_; }
  const std::vector<int>& arc_delays() const { return arc_delays_; }

  int input_index(const std::string& name) const;      // throws UnknownName
  int output_index(const std::string& name) const;     // throws UnknownName
  size_t num_inputs() const { return input_nodes_.size(); }
  size_t num_outputs() const { return graph_.outputs().size(); }
  const std::vector<NodeId>& input_nodes() const { return input_nodes_; }

 private:
  friend ElaboratedDesign elaborate(const DesignGraph&, const StageMap&, const ElaborateTweaks&);
  friend class EvalState;
  friend struct Evaluator;

  DesignGraph graph_;
  StageMap map_;
  StagingStats stats_;
  std::vector<NodeId> eval_order_;
  std::vector<StagedEdge> staged_edges_;
  std::vector<int> arc_delays_;          // per arc, resolved
  std::vector<int> hist_len_;            // per node, history ring length
  std::vector<uint32_t> hist_offset_;    // per node, offset into state histories
  uint32_t hist_total_ = 0;
  std::vector<int> arg_depth_offset_;    // per node, offset into arg_depths_
  std::vector<int> arg_depths_;          // per consumer arg, staging depth
  std::vector<NodeId> input_nodes_;
  std::vector<int> output_depths_;       // per output, staging depth
};

ElaboratedDesign elaborate(const DesignGraph& graph, const StageMap& map,
                           const ElaborateTweaks& tweaks = {});

// ---------------------------------------------------------------------------
// Cycle evaluation
// ---------------------------------------------------------------------------

class EvalState {
 public:
  EvalState(const ElaboratedDesign& design, size_t mem_size);
  void load_image(const std::vector<uint8_t>& image);  // at address 0

  uint64_t cycle() const { return cycle_; }
  const std::array<uint32_t, 32>& regfile() const { return regs_; }
  const std::vector<uint8_t>& memory() const { return mem_; }

 private:
  friend struct Evaluator;
  std::vector<uint64_t> hist_;
  std::array<uint32_t, 32> regs_{};
  std::vector<uint8_t> mem_;
  uint64_t cycle_ = 0;
};

class CycleOutputs {
 public:
  uint64_t value(int index) const { return values_.at(static_cast<size_t>(index)); }
  const std::vector<uint64_t>& values() const { return values_; }

 private:
  friend struct Evaluator;
  std::vector<uint64_t> values_;
};

// One clock cycle: pure function of (state, inputs); registers, including
// the regfile and memory arrays, update together at the end of the cycle.
// `inputs` is indexed by ElaboratedDesign::input_index and must fit the
// declared widths (WidthMismatch otherwise).
CycleOutputs eval_cycle(const ElaboratedDesign& design, EvalState& state,
                        const std::vector<uint64_t>& inputs);

uint64_t width_mask(int width);

}  // namespace warpkit::stagegraph
