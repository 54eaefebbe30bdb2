// wasmlite: a distilled WebAssembly
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wasmlite/ast.hpp"
#include "wasmlite/validator.hpp"

namespace wasmlite {

struct GenConfig {
    uint64_t seed = 0;
    uint32_t max_funcs = 4;
    uint32_t max_body_len = 24;
    uint32_t max_block_depth = 4;
    uint32_t max_locals = 4;
    bool enable_exceptions = true;
    bool enable_memory = true;
    uint64_t fuel = 5000;
};

/// Grows a module instruction by instruction while tracking the validator's
/// type stack, emitting only instructions whose pops are satisfiable and
/// closing every body by synthesizing its required results. The output is
/// well typed by construction: it always validates under matching feature
/// flags. Deterministic per cfg.seed. Function 0 is the exported entry
/// point; the rest are helpers reached through call.
ModuleAst gen_module(const GenConfig& cfg);

/// One small random edit (branch-depth bump, index change, instruction
/// insert/delete/duplicate, constant flip). Deliberately type-oblivious:
/// most mutants are invalid, which is what makes them useful for checking
/// that the validator actually guards the interpreter.
ModuleAst mutate_module(const ModuleAst& m, uint64_t seed);

struct FuzzReport {
    uint64_t cases_run = 0;
    uint64_t validated = 0;
    // Outcome histogram over the per-case entry invocation.
    uint64_t returned = 0;
    uint64_t trap_unreachable = 0;
    uint64_t trap_div_by_zero = 0;
    uint64_t trap_int_overflow = 0;
    uint64_t trap_oob_memory = 0;
    uint64_t trap_call_stack_exhausted = 0;
    uint64_t uncaught_exception = 0;
    uint64_t fuel_exhausted = 0;
    // Mutation stage.
    uint64_t mutants_rejected = 0;
    uint64_t mutants_accepted = 0;
    /// (seed, diagnostic), sorted by seed. Empty on a sound implementation.
    std::vector<std::pair<uint64_t, std::string>> assertion_failures;

    bool sound() const { return assertion_failures.empty(); }
    void merge(FuzzReport other);

    /// Human-readable multi-line summary.
    std::string to_text() const;
    /// Machine-readable key=value lines; byte-identical across reruns.
    std::string to_kv() const;
};

struct FuzzOptions {
    uint64_t base_seed = 0;          // case i uses seed base_seed + i
    ValidatorTestHooks validator_hooks;
    bool run_mutants = true;         // one mutant per case
    bool check_trace = true;         // differential: trace vs invoke outcome
    uint32_t max_pages = 4;          // instantiation limit (growth can fail)
};

/// For seeds base..base+n-1: generate, validate, instantiate, invoke the
/// entry function with zero-valued args and all defensive checks on, then
/// re-run under the trace driver and compare outcomes, then validate and
/// run one mutant. Defensive-assertion throws and outcome mismatches
/// become assertion_failures; traps and fuel exhaustion are ordinary
/// histogram entries. Parallel across seeds; the report equals the serial
/// one exactly.
FuzzReport fuzz_soundness(uint64_t n, const GenConfig& cfg_template,
                          const FuzzOptions& opts = {});

/// Single-threaded reference of fuzz_soundness.
FuzzReport fuzz_soundness_serial(uint64_t n, const GenConfig& cfg_template,
                                 const FuzzOptions& opts = {});

}  // namespace wasmlite
