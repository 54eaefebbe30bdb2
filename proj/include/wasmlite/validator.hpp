// wasmlite: a distilled WebAssembly
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wasmlite/ast.hpp"

namespace wasmlite {

struct Features {
    bool exceptions = false;
};

enum class ErrorKind : uint8_t {
    StackUnderflow,
    TypeMismatch,
    UnknownIndex,
    DepthOutOfRange,
    ImmutableGlobal,
    MissingResult,
    FeatureDisabled,
    ArityMismatch,
};

/// snake_case name as shown in diagnostics ("stack_underflow", ...).
std::string_view error_kind_name(ErrorKind kind);

struct ValidationError {
    SourcePos pos;
    ErrorKind kind;
    std::string message;
};

/// Exact per-function maxima over all reachable static paths; the
/// interpreter cross-checks its observed stack heights against these.
struct FuncAnnotations {
    uint32_t max_value_stack = 0;
    uint32_t max_ctrl_depth = 0;
};

struct ValidatedModule {
    ModuleAst ast;
    std::vector<FuncAnnotations> per_func;  // indexed by function index
};

/// Deliberate validator corruptions for mutation-sensitivity tests of the
/// soundness harness. All flags off in normal operation.
struct ValidatorTestHooks {
    bool skip_br_depth_check = false;
};

struct ValidateResult {
    std::optional<ValidatedModule> module;  // engaged iff errors is empty
    std::vector<ValidationError> errors;    // ordered by SourcePos

    bool ok() const { return errors.empty(); }
};

/// Stack-typed validation of every function body plus module-level checks
/// (call targets, global mutability, memory-requiring instructions,
/// feature gating of throw/try). Collects all errors; never throws.
ValidateResult validate_module(const ModuleAst& m, Features features = {},
                               const ValidatorTestHooks* hooks = nullptr);

enum class ArityClass : uint8_t {
    Fixed,             // pops/pushes fully describe the stack effect
    NeverFallsThrough, // br, return, unreachable, throw: stack-polymorphic after
    Structural,        // block/loop/if/try/br_if: effect depends on control frames
};

struct InstrArity {
    ArityClass cls;
    uint32_t pops = 0;
    uint32_t pushes = 0;
};

/// Single-instruction signature. Returns nullopt when a function or global
/// index in `instr` is not resolvable in m.
std::optional<InstrArity> instr_arity(const Instr& instr, const ModuleAst& m);

}  // namespace wasmlite
