// wasmlite: a distilled WebAssembly
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "wasmlite/ast.hpp"
#include "wasmlite/validator.hpp"

namespace wasmlite {

/// One i32. Signedness is per-operation, not per-value.
struct Value {
    uint32_t bits = 0;

    int32_t as_i32() const { return static_cast<int32_t>(bits); }
    static Value of_i32(int32_t v) { return {static_cast<uint32_t>(v)}; }
    friend bool operator==(Value a, Value b) = default;
};

/// Host-facing usage error: unknown export, wrong argument count,
/// instantiation limits. A caller mistake, never a program outcome.
class EngineError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A defensive internal check failed: validator and interpreter disagree
/// about a program both accepted. Always a soundness bug, never a
/// legitimate outcome; the fuzz harness hunts for these.
class InternalError : public std::logic_error {
    using std::logic_error::logic_error;
};

enum class TrapKind : uint8_t {
    Unreachable,
    DivByZero,
    IntOverflow,
    OobMemory,
    CallStackExhausted,
};

/// snake_case name as shown in diagnostics ("div_by_zero", ...).
std::string_view trap_kind_name(TrapKind kind);

/// Terminal result of an execution. No step applies to an Outcome.
struct Outcome {
    enum class Kind : uint8_t { Returned, Trap, UncaughtException, FuelExhausted };

    Kind kind = Kind::Returned;
    std::vector<Value> values;              // Returned
    TrapKind trap = TrapKind::Unreachable;  // Trap
    Value payload;                          // UncaughtException

    static Outcome returned(std::vector<Value> vs);
    static Outcome trapped(TrapKind k);
    static Outcome uncaught(Value payload);
    static Outcome fuel_exhausted();

    friend bool operator==(const Outcome&, const Outcome&) = default;
};

struct Store {
    std::vector<uint8_t> memory;  // size always page_count * kPageSize
    uint32_t page_count = 0;
    uint32_t max_pages = 0;
    std::vector<Value> globals;
};

struct Instance {
    ValidatedModule module;
    Store store;
};

/// Zero-fills the declared initial pages and applies global initializers.
/// Throws EngineError when the declared initial pages exceed max_pages.
Instance instantiate(ValidatedModule vm, uint32_t max_pages);

enum class EntryKind : uint8_t { Block, Loop, IfArm, Try, Catch, FuncBody };

/// One nesting level of structured control: the instruction sequence still
/// to run plus what a branch to it, or falling off its end, must leave on
/// the value stack.
struct ControlEntry {
    const std::vector<Instr>* code = nullptr;
    uint32_t ip = 0;
    EntryKind kind = EntryKind::Block;
    uint32_t label_arity = 0;  // values a br to this entry carries (loop: 0)
    uint32_t end_arity = 0;    // values fall-through leaves (loop: its results)
    uint32_t entry_height = 0; // value-stack height when entered
    const std::vector<Instr>* catch_code = nullptr;  // kind == Try
};

struct Frame {
    uint32_t func_index = 0;
    std::vector<Value> locals;  // params then declared locals
    std::vector<Value> value_stack;
    std::vector<ControlEntry> ctrl_stack;  // bottom entry has kind FuncBody
    uint32_t result_arity = 0;
};

struct Config {
    Instance* instance = nullptr;
    std::vector<Frame> frames;
    std::optional<uint64_t> fuel;  // remaining dispatches; nullopt = unmetered
    uint32_t call_depth_limit = 1000;
    bool check_invariants = true;  // defensive assertions + annotation cross-checks
};

/// What a single step dispatched, for trace drivers.
struct StepInfo {
    const Instr* instr = nullptr;  // null for entry-/frame-exhausted bookkeeping
    uint32_t frame_depth = 0;      // frames.size() after the step
};

/// Builds the initial Config for calling an exported function. Throws
/// EngineError on unknown or unexported names and argument-count mismatch.
Config make_invoke_config(Instance& inst, std::string_view func_name,
                          const std::vector<Value>& args,
                          std::optional<uint64_t> fuel = std::nullopt,
                          uint32_t call_depth_limit = 1000);

/// Advances c by exactly one rule. Returns the Outcome when that rule is
/// terminal, nullopt otherwise. Fuel, when present, is charged per dispatch
/// including bookkeeping rules; at zero the step is FuelExhausted.
/// Throws InternalError if a defensive check fails (soundness bug).
std::optional<Outcome> step(Config& c, StepInfo* info = nullptr);

/// Iterates step to a terminal Outcome.
Outcome run_to_outcome(Config& c);

/// One-call driver: instantiate-once, then call by export name.
Outcome invoke(Instance& inst, std::string_view func_name, const std::vector<Value>& args,
               std::optional<uint64_t> fuel = std::nullopt, uint32_t call_depth_limit = 1000);

struct TraceRecord {
    uint64_t step_index = 0;  // 0-based, strictly increasing
    uint32_t frame_depth = 0;
    std::string instr;                    // printed head; "end" for bookkeeping
    std::vector<Value> value_stack_after; // top last; at most 8 entries
    bool truncated = false;               // stack had more than 8 values
};

struct TraceResult {
    Outcome outcome;
    std::vector<TraceRecord> records;
};

/// Like invoke, but records one TraceRecord per non-terminal step.
/// The Outcome is identical to invoke with the same inputs.
TraceResult trace(Instance& inst, std::string_view func_name, const std::vector<Value>& args,
                  uint64_t fuel, uint32_t call_depth_limit = 1000);

/// "#<step> depth=<d> <instr> -> [v ...]", the CLI --trace line format.
std::string format_trace_record(const TraceRecord& r);

/// Dynamic unwinding for Throw: pops control entries to the nearest try,
/// converts it to its catch with the payload pushed, crossing (and
/// discarding) frames as needed; UncaughtException when no try exists.
std::optional<Outcome> unwind(Config& c, Value payload);

}  // namespace wasmlite
