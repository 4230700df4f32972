#pragma once
// Verification harness: aligns every retirement field to REG_WR, adds the
// returning-load multiplexer over the recirculated original-load bundle, and
// extracts per-cycle records. The attachment is written once against virtual
// stages; the stage map decides how much staging it costs.

#include <optional>
#include <string>
#include <vector>

#include "warpkit/core.hpp"
#include "warpkit/rvfi.hpp"
#include "warpkit/stagegraph.hpp"

namespace warpkit::harness {

struct AttachOptions {
  core::Mutation mutation = core::Mutation::None;
};

// Adds the RVFI output section to a graph built by core::build_core. The
// sequence of graph mutations is identical for every stage map; compare
// DesignGraph::log_text() slices to assert it.
void attach_rvfi(stagegraph::DesignGraph& graph, const AttachOptions& options = {});

// Sum of the widths recirculated for the load-return path; kept below the
// width of the full 19-field record by wiring load-irrelevant fields
// directly from the pipeline.
int recirculated_width(const stagegraph::DesignGraph& graph);
int full_record_width();

// Reads one cycle's outputs; returns a record exactly when the REG_WR slot
// holds a committing transaction (not a bubble, not a squashed slot, not an
// original load).
std::optional<RvfiRecord> extract_record(const stagegraph::ElaboratedDesign& design,
                                         const stagegraph::CycleOutputs& outputs);

// Pre-resolved output indices for the hot path.
struct RvfiPortIndices {
  int valid, order, insn, trap, halt, intr;
  int rs1_addr, rs2_addr, rs1_rdata, rs2_rdata;
  int rd_addr, rd_wdata, pc_rdata, pc_wdata;
  int mem_addr, mem_rmask, mem_wmask, mem_rdata, mem_wdata;
};

RvfiPortIndices find_rvfi_ports(const stagegraph::ElaboratedDesign& design);
std::optional<RvfiRecord> read_rvfi(const RvfiPortIndices& ports,
                                    const stagegraph::CycleOutputs& outputs);

// ---------------------------------------------------------------------------
// Trace files: JSON Lines, one record per line, numbers as unsigned decimals
// ---------------------------------------------------------------------------

std::string record_to_jsonl(const RvfiRecord& record);
std::string trace_to_jsonl(const RvfiTrace& trace);

class TraceParseError : public std::runtime_error {
 public:
  TraceParseError(int line, const std::string& what)
      : std::runtime_error("trace line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

RvfiTrace trace_from_jsonl(const std::string& text);

}  // namespace warpkit::harness
