// wasmlite: a distilled WebAssembly
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "wasmlite/ast.hpp"

namespace wasmlite {

/// Canonical text for a module: one instruction per line inside bodies,
/// two-space indentation, `end`/`else`/`catch` at the opening keyword's
/// indent, names with `$` sigil. parse_module(print_module(m)) equals m
/// structurally for any m that satisfies the ModuleAst invariants.
std::string print_module(const ModuleAst& m);

/// One-line head of an instruction, without nested bodies ("i32.const 5",
/// "block (result i32)", "call $f"). ctx resolves function/global names;
/// pass nullptr to fall back to raw indices, which do not re-parse.
std::string print_instr_head(const Instr& instr, const ModuleAst* ctx);

/// Text keyword for an opcode ("i32.add", "try", ...).
const char* op_keyword(Op op);

}  // namespace wasmlite
