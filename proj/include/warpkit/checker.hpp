#pragma once
// Golden-model trace verification, seeded random program generation,
// fuzzing, and bounded-exhaustive pair checking.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "warpkit/core.hpp"
#include "warpkit/isa.hpp"
#include "warpkit/rvfi.hpp"

namespace warpkit::checker {

enum class ViolationKind {
  DuplicateOrder,
  OrderGap,
  InsnMismatch,
  Rs1Mismatch,
  Rs2Mismatch,
  RdMismatch,
  PcMismatch,
  MemMismatch,
  X0Nonzero,
  TrapMismatch,
  HaltMismatch,
  IncompleteTrace,
};

const char* violation_name(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  uint64_t order = 0;
  std::string field;
  uint64_t expected = 0;
  uint64_t actual = 0;
  uint64_t context = 0;  // program index during fuzzing, else 0
  std::string message() const;
};

struct CheckReport {
  bool pass = true;
  std::vector<Violation> violations;
  uint64_t instructions_checked = 0;
  uint64_t programs_checked = 0;

  void merge(const CheckReport& other);
};

class MalformedTrace : public std::runtime_error {
 public:
  explicit MalformedTrace(const std::string& what) : std::runtime_error(what) {}
};

// Sorts records by order, checks density 0..N-1, then replays the golden
// model over the image and compares every field. On a mismatch the replay
// keeps following the golden state, so one bug yields focused violations.
CheckReport check_trace(const RvfiTrace& trace, const std::vector<uint8_t>& image,
                        size_t mem_size = 65536);

// ---------------------------------------------------------------------------
// Program generation
// ---------------------------------------------------------------------------

struct GenWeights {
  std::array<uint32_t, isa::kNumInstrKinds> weight{};
  uint32_t misaligned_per_16 = 1;   // of 16 memory ops, this many misalign on purpose
  uint32_t load_use_per_16 = 8;     // bias toward reading a just-loaded register

  static GenWeights defaults();
  static GenWeights alu_only();
  GenWeights& set(isa::InstrKind kind, uint32_t w);
};

// Deterministic in seed. Emits only decodable instructions; branches and
// jumps are forward-only; data accesses stay in a scratch region above the
// code; the final instruction is EBREAK.
std::vector<uint8_t> gen_program(uint64_t seed, int length,
                                 const GenWeights& weights = GenWeights::defaults());

// ---------------------------------------------------------------------------
// Fuzzing and bounded-exhaustive pairs
// ---------------------------------------------------------------------------

struct FuzzOptions {
  int jobs = 1;
  int length = 100;
  core::SimOptions sim;
};

CheckReport fuzz(const core::CoreConfig& config, uint64_t seed, int n_programs,
                 const FuzzOptions& options = {});

struct PairSpec {
  std::vector<isa::InstrKind> kinds;
  std::vector<uint8_t> regs = {1, 2};
  std::vector<int32_t> imms = {0, 1, -1};
  uint64_t bound = 1000000;  // max sequences to enumerate
};

class BoundExceeded : public std::runtime_error {
 public:
  BoundExceeded(uint64_t count, uint64_t bound)
      : std::runtime_error("pair enumeration of " + std::to_string(count) +
                           " sequences exceeds bound " + std::to_string(bound)),
        count_(count) {}
  uint64_t count() const { return count_; }

 private:
  uint64_t count_;
};

// Enumerates every two-instruction program (plus EBREAK) over the operand
// pools, simulates each one and checks it against the golden model.
CheckReport exhaustive_pairs(const core::CoreConfig& config, const PairSpec& spec,
                             const core::SimOptions& sim = {});

uint64_t pair_sequence_count(const PairSpec& spec);

}  // namespace warpkit::checker
