// wasmlite: a distilled WebAssembly
// SPDX-License-Identifier: Apache-2.0
#include "wasmlite/ast.hpp"

namespace wasmlite {

bool is_binop(Op op) {
    switch (op) {
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::DivS:
    case Op::RemS:
    case Op::And:
    case Op::Or:
    case Op::Xor:
    case Op::Shl:
    case Op::ShrU:
        return true;
    default:
        return false;
    }
}

bool is_relop(Op op) {
    switch (op) {
    case Op::Eq:
    case Op::Ne:
    case Op::LtS:
    case Op::LeS:
    case Op::LtU:
        return true;
    default:
        return false;
    }
}

bool is_block_like(Op op) {
    return op == Op::Block || op == Op::Loop || op == Op::If || op == Op::TryCatch;
}

std::optional<uint32_t> ModuleAst::find_func(std::string_view name) const {
    for (uint32_t i = 0; i < funcs.size(); ++i)
        if (funcs[i].name == name) return i;
    return std::nullopt;
}

std::optional<uint32_t> ModuleAst::find_global(std::string_view name) const {
    for (uint32_t i = 0; i < globals.size(); ++i)
        if (globals[i].name == name) return i;
    return std::nullopt;
}

bool structurally_equal(const Instr& a, const Instr& b) {
    if (a.op != b.op || a.result_arity != b.result_arity || a.index != b.index ||
        a.value != b.value)
        return false;
    if (a.body.size() != b.body.size() || a.body2.size() != b.body2.size()) return false;
    for (size_t i = 0; i < a.body.size(); ++i)
        if (!structurally_equal(a.body[i], b.body[i])) return false;
    for (size_t i = 0; i < a.body2.size(); ++i)
        if (!structurally_equal(a.body2[i], b.body2[i])) return false;
    return true;
}

static bool bodies_equal(const std::vector<Instr>& a, const std::vector<Instr>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (!structurally_equal(a[i], b[i])) return false;
    return true;
}

bool structurally_equal(const ModuleAst& a, const ModuleAst& b) {
    if (a.globals.size() != b.globals.size() || a.funcs.size() != b.funcs.size())
        return false;
    if (a.memory.has_value() != b.memory.has_value()) return false;
    if (a.memory && a.memory->initial_pages != b.memory->initial_pages) return false;
    for (size_t i = 0; i < a.globals.size(); ++i) {
        const auto& x = a.globals[i];
        const auto& y = b.globals[i];
        if (x.name != y.name || x.is_mutable != y.is_mutable || x.init != y.init)
            return false;
    }
    for (size_t i = 0; i < a.funcs.size(); ++i) {
        const auto& x = a.funcs[i];
        const auto& y = b.funcs[i];
        if (x.name != y.name || x.exported != y.exported ||
            x.type.param_count != y.type.param_count ||
            x.type.result_count != y.type.result_count || x.local_count != y.local_count)
            return false;
        if (!bodies_equal(x.body, y.body)) return false;
    }
    return true;
}

}  // namespace wasmlite
