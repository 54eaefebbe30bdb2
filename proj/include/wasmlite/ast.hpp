// wasmlite: a distilled WebAssembly
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wasmlite {

/// The only value type in the language. Kept as a real type so signatures
/// read as types rather than bare counts.
enum class ValType : uint8_t { I32 };

/// 1-based line/column of a token. line == 0 means "synthesized, no source".
struct SourcePos {
    uint32_t line = 0;
    uint32_t col = 0;
};

enum class Op : uint8_t {
    Const,
    // binops
    Add,
    Sub,
    Mul,
    DivS,
    RemS,
    And,
    Or,
    Xor,
    Shl,
    ShrU,
    // relops
    Eq,
    Ne,
    LtS,
    LeS,
    LtU,
    Eqz,
    Drop,
    Select,
    LocalGet,
    LocalSet,
    LocalTee,
    GlobalGet,
    GlobalSet,
    Load,
    Store,
    MemorySize,
    MemoryGrow,
    Block,
    Loop,
    If,
    Br,
    BrIf,
    Return,
    Call,
    Nop,
    Unreachable,
    // exceptions extension
    Throw,
    TryCatch,
};

bool is_binop(Op op);
bool is_relop(Op op);
bool is_block_like(Op op);  // Block, Loop, If, TryCatch

/// Function signature. Every slot is i32, so the ordered parameter and
/// result lists reduce to counts. result_count is 0 or 1.
struct FuncType {
    uint32_t param_count = 0;
    uint32_t result_count = 0;
};

struct Instr {
    Op op = Op::Nop;
    uint8_t result_arity = 0;  // Block/Loop/If/TryCatch result count
    uint32_t index = 0;        // local/global/function index or branch depth
    int32_t value = 0;         // Const immediate
    SourcePos pos;
    std::vector<Instr> body;   // Block/Loop body, If then-arm, TryCatch try-body
    std::vector<Instr> body2;  // If else-arm, TryCatch catch-body
};

struct FuncDef {
    std::string name;
    FuncType type;
    uint32_t local_count = 0;  // declared locals, zero-initialized; params excluded
    std::vector<Instr> body;
    bool exported = false;
    SourcePos pos;
};

struct GlobalDef {
    std::string name;
    bool is_mutable = false;
    int32_t init = 0;
    SourcePos pos;
};

struct MemoryDecl {
    uint32_t initial_pages = 0;
    SourcePos pos;
};

inline constexpr uint32_t kPageSize = 65536;

struct ModuleAst {
    std::vector<GlobalDef> globals;
    std::optional<MemoryDecl> memory;
    std::vector<FuncDef> funcs;

    std::optional<uint32_t> find_func(std::string_view name) const;
    std::optional<uint32_t> find_global(std::string_view name) const;
};

/// Structural equality. SourcePos is diagnostic metadata and is ignored.
bool structurally_equal(const Instr& a, const Instr& b);
bool structurally_equal(const ModuleAst& a, const ModuleAst& b);

/// Pre-order traversal over an instruction tree, nested bodies included.
template <typename F>
void for_each_instr(std::vector<Instr>& body, F&& f) {
    for (Instr& instr : body) {
        f(instr);
        for_each_instr(instr.body, f);
        for_each_instr(instr.body2, f);
    }
}

template <typename F>
void for_each_instr(const std::vector<Instr>& body, F&& f) {
    for (const Instr& instr : body) {
        f(instr);
        for_each_instr(instr.body, f);
        for_each_instr(instr.body2, f);
    }
}

}  // namespace wasmlite
