// wasmlite: a distilled WebAssembly
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wasmlite/interpreter.hpp"
#include "wasmlite/validator.hpp"

namespace wasmlite {

/// One line of an allocation script.
struct AllocOp {
    bool is_malloc = true;
    uint32_t size = 0;  // malloc only
    uint32_t id = 0;    // handle used to name the block in later free ops
};

struct AllocScript {
    std::vector<AllocOp> ops;
};

/// Random malloc/free workload. Each op is a free of a uniformly chosen live
/// block with probability free_prob (when any block is live), otherwise a
/// malloc of a uniform size in [size_min, size_max].
AllocScript gen_alloc_script(uint64_t seed, uint32_t n_ops, uint32_t size_min, uint32_t size_max,
                             double free_prob);

/// Text form: one op per line, "malloc <size> <id>" or "free <id>".
std::string print_alloc_script(const AllocScript& script);

/// Parses the text form. Blank lines and lines starting with '#' are skipped.
/// On failure returns nullopt and stores a diagnostic in *error.
std::optional<AllocScript> parse_alloc_script(std::string_view text, std::string* error);

struct AllocViolation {
    uint32_t op_index = 0;  // index into script.ops
    std::string invariant;  // what was violated
};

struct AllocReport {
    /// Per executed op: the returned address for malloc, 0 for free.
    std::vector<uint32_t> results;
    /// First violation, if any. Execution stops at the first one.
    std::vector<AllocViolation> violations;
    /// Ops that trapped, ran out of fuel, or threw (each also a violation).
    uint64_t traps = 0;
    /// Highest brk observed after any op.
    uint32_t peak_heap = 0;

    bool ok() const { return violations.empty() && traps == 0; }
};

/// Runs a script against an instance exporting malloc(size)->addr and
/// free(addr), with a mutable global $brk. After every op the shadow heap
/// re-checks the header chain and every live block; see the field docs on
/// AllocReport for how failures surface.
AllocReport run_script(Instance& inst, const AllocScript& script);

/// Parses and validates a module file. Throws EngineError with a diagnostic
/// when the file cannot be read, parsed, or validated.
ValidatedModule load_allocator(const std::string& path);

struct AllocStressReport {
    uint64_t scripts_run = 0;
    uint64_t ops_run = 0;
    uint64_t mallocs = 0;
    uint64_t frees = 0;
    uint64_t traps = 0;
    uint32_t peak_heap = 0;
    /// (seed, diagnostic), sorted. Empty when every script ran clean.
    std::vector<std::pair<uint64_t, std::string>> failures;

    bool ok() const { return failures.empty(); }
    void merge(AllocStressReport other);
    std::string to_text() const;
    /// Deterministic key=value serialization, one pair per line.
    std::string to_kv() const;
};

/// Runs n_scripts generated scripts (seeds base_seed..base_seed+n-1) against
/// fresh instances of the allocator module. OpenMP-parallel across scripts;
/// the report is deterministic for fixed inputs.
AllocStressReport alloc_stress(const ValidatedModule& allocator, uint64_t n_scripts,
                               uint32_t n_ops, uint32_t size_min, uint32_t size_max,
                               double free_prob, uint64_t base_seed = 0);

/// Single-threaded reference of alloc_stress.
AllocStressReport alloc_stress_serial(const ValidatedModule& allocator, uint64_t n_scripts,
                                      uint32_t n_ops, uint32_t size_min, uint32_t size_max,
                                      double free_prob, uint64_t base_seed = 0);

}  // namespace wasmlite
