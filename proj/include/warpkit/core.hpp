#pragma once
// Pipelined RV32I core expressed as a DesignGraph over virtual stages, plus
// the cycle-accurate simulator that drives the elaborated design: fetch,
// decode, register read, execute, result select and writeback, with
// predict-not-taken branches, scoreboard stalls and pseudo-load-return
// injection through the recirculated original-load bundle.

#include <array>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <string>
#include <vector>

#include "warpkit/isa.hpp"
#include "warpkit/rvfi.hpp"
#include "warpkit/stagegraph.hpp"

namespace warpkit::core {

struct CoreConfig {
  stagegraph::StageMap stage_map = stagegraph::StageMap::five_stage();
  int mem_latency = 1;             // cycles from load issue to data return, >= 1
  uint32_t mem_size = 65536;       // bytes, word multiple
  int max_pending_loads = 4;       // memory request queue capacity
  uint64_t max_cycles = 100000;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

void validate_config(const CoreConfig& config);  // throws ConfigError

// Fault injection hooks for the verification suite's mutation tests.
enum class Mutation {
  None,
  ScoreboardOff,         // drop register-hazard stalls
  SquashDepthMinusOne,   // let the youngest wrong-path slot retire
  RecircDelayPlusOne,    // misalign the load-return bundle by +1 cycle
  RecircDelayMinusOne,   // ... by -1 cycle
  RdWdataWrongStage,     // report rd_wdata from the execute stage
  Rs1ZeroRuleDropped,    // report raw rs1 bits even for non-register sources
};

// Design-graph input/output port names.
namespace port {
inline constexpr const char* kPcIn = "pc_in";
inline constexpr const char* kSlotValid = "slot_valid";
inline constexpr const char* kLoadReturn = "ld_return_in";
inline constexpr const char* kOrderIn = "order_in";
inline constexpr const char* kIssueEnable = "issue_en_in";
inline constexpr const char* kCommitEnable = "commit_en_in";

inline constexpr const char* kRedirectTaken = "redirect_taken";
inline constexpr const char* kRedirectTarget = "redirect_target";
inline constexpr const char* kTrap = "trap_ex";
inline constexpr const char* kIssued = "issued";
inline constexpr const char* kHalt = "halt";
}  // namespace port

// Builds the core's design graph. Construction never reads the stage map:
// the same graph elaborates under any preset. Contains exactly one feedback
// arc, the recirculated original-load bundle named "ld_orig" -> "ld_return".
stagegraph::DesignGraph build_core(const CoreConfig& config);

// Cycles between the original load occupying a pipeline stage and its
// pseudo-load-return occupying the same stage: span(NEXT_PC..RESULT) +
// mem_latency + 1. Used as the recirculation delay.
int load_return_alignment(const CoreConfig& config);

// Per-register pending bits: set while a load's value is still owed to the
// register file by a pseudo-load-return. pending[0] is never set.
struct Scoreboard {
  std::array<bool, 32> pending{};
};

// One outstanding memory read, in issue order.
struct PendingLoad {
  uint64_t order = 0;
  uint8_t rd = 0;
  uint64_t issue_cycle = 0;
  uint64_t inject_cycle = 0;  // pseudo-load-return enters at NEXT_PC
  uint64_t commit_cycle = 0;  // pseudo-load-return reaches REG_WR
};

struct SimStats {
  uint64_t cycles = 0;
  uint64_t retirements = 0;
  uint64_t squashed_slots = 0;
  uint64_t stall_cycles = 0;
  uint64_t load_return_injections = 0;
  bool halted = false;
};

struct SimOptions {
  Mutation mutation = Mutation::None;
};

struct SimResult {
  RvfiTrace trace;
  SimStats stats;
};

class SimError : public std::runtime_error {
 public:
  explicit SimError(const std::string& what) : std::runtime_error(what) {}
};

// Runs the program image from address 0 until EBREAK retires or max_cycles
// elapse. Produces at most one record per cycle; loads are presented via
// their pseudo-load-return carrying the original order id.
SimResult simulate(const CoreConfig& config, const std::vector<uint8_t>& image,
                   const SimOptions& options = {});

// Variant reusing an already elaborated design (must come from
// build_core + attach_rvfi + elaborate with the same config).
SimResult simulate_elaborated(const stagegraph::ElaboratedDesign& design,
                              const CoreConfig& config, const std::vector<uint8_t>& image,
                              const SimOptions& options = {});

}  // namespace warpkit::core
