// wasmlite: a distilled WebAssembly
// SPDX-License-Identifier: Apache-2.0
#include "wasmlite/printer.hpp"

#include <string>

namespace wasmlite {

const char* op_keyword(Op op) {
    switch (op) {
        case Op::Const: return "i32.const";
        case Op::Add: return "i32.add";
        case Op::Sub: return "i32.sub";
        case Op::Mul: return "i32.mul";
        case Op::DivS: return "i32.div_s";
        case Op::RemS: return "i32.rem_s";
        case Op::And: return "i32.and";
        case Op::Or: return "i32.or";
        case Op::Xor: return "i32.xor";
        case Op::Shl: return "i32.shl";
        case Op::ShrU: return "i32.shr_u";
        case Op::Eq: return "i32.eq";
        case Op::Ne: return "i32.ne";
        case Op::LtS: return "i32.lt_s";
        case Op::LeS: return "i32.le_s";
        case Op::LtU: return "i32.lt_u";
        case Op::Eqz: return "i32.eqz";
        case Op::Drop: return "drop";
        case Op::Select: return "select";
        case Op::LocalGet: return "local.get";
        case Op::LocalSet: return "local.set";
        case Op::LocalTee: return "local.tee";
        case Op::GlobalGet: return "global.get";
        case Op::GlobalSet: return "global.set";
        case Op::Load: return "i32.load";
        case Op::Store: return "i32.store";
        case Op::MemorySize: return "memory.size";
        case Op::MemoryGrow: return "memory.grow";
        case Op::Block: return "block";
        case Op::Loop: return "loop";
        case Op::If: return "if";
        case Op::Br: return "br";
        case Op::BrIf: return "br_if";
        case Op::Return: return "return";
        case Op::Call: return "call";
        case Op::Nop: return "nop";
        case Op::Unreachable: return "unreachable";
        case Op::Throw: return "throw";
        case Op::TryCatch: return "try";
    }
    return "??";
}

namespace {

void append_head(std::string& out, const Instr& instr, const ModuleAst* ctx) {
    out += op_keyword(instr.op);
    switch (instr.op) {
        case Op::Const:
            out += ' ';
            out += std::to_string(instr.value);
            break;
        case Op::LocalGet:
        case Op::LocalSet:
        case Op::LocalTee:
        case Op::Br:
        case Op::BrIf:
            out += ' ';
            out += std::to_string(instr.index);
            break;
        case Op::Call:
            out += ' ';
            if (ctx && instr.index < ctx->funcs.size()) {
                out += '$';
                out += ctx->funcs[instr.index].name;
            } else {
                out += std::to_string(instr.index);
            }
            break;
        case Op::GlobalGet:
        case Op::GlobalSet:
            out += ' ';
            if (ctx && instr.index < ctx->globals.size()) {
                out += '$';
                out += ctx->globals[instr.index].name;
            } else {
                out += std::to_string(instr.index);
            }
            break;
        case Op::Block:
        case Op::Loop:
        case Op::If:
        case Op::TryCatch:
            if (instr.result_arity > 0) out += " (result i32)";
            break;
        default:
            break;
    }
}

void append_indent(std::string& out, int indent) {
    out.append(static_cast<size_t>(indent) * 2, ' ');
}

void append_seq(std::string& out, const std::vector<Instr>& seq, const ModuleAst& m, int indent);

void append_instr(std::string& out, const Instr& instr, const ModuleAst& m, int indent) {
    append_indent(out, indent);
    append_head(out, instr, &m);
    out += '\n';
    if (!is_block_like(instr.op)) return;
    append_seq(out, instr.body, m, indent + 1);
    if (instr.op == Op::If && !instr.body2.empty()) {
        append_indent(out, indent);
        out += "else\n";
        append_seq(out, instr.body2, m, indent + 1);
    } else if (instr.op == Op::TryCatch) {
        append_indent(out, indent);
        out += "catch\n";
        append_seq(out, instr.body2, m, indent + 1);
    }
    append_indent(out, indent);
    out += "end\n";
}

void append_seq(std::string& out, const std::vector<Instr>& seq, const ModuleAst& m, int indent) {
    for (const Instr& instr : seq) append_instr(out, instr, m, indent);
}

void append_func(std::string& out, const FuncDef& f, const ModuleAst& m) {
    out += "  (func $";
    out += f.name;
    if (f.exported) out += " (export)";
    for (uint32_t i = 0; i < f.type.param_count; ++i) out += " (param i32)";
    if (f.type.result_count > 0) out += " (result i32)";
    for (uint32_t i = 0; i < f.local_count; ++i) out += " (local i32)";
    if (f.body.empty()) {
        out += ")\n";
        return;
    }
    out += '\n';
    append_seq(out, f.body, m, 2);
    out += "  )\n";
}

}  // namespace

std::string print_module(const ModuleAst& m) {
    if (m.globals.empty() && !m.memory && m.funcs.empty()) return "(module)\n";
    std::string out = "(module\n";
    for (const GlobalDef& g : m.globals) {
        out += "  (global $";
        out += g.name;
        if (g.is_mutable) out += " (mut i32)";
        out += " (i32.const ";
        out += std::to_string(g.init);
        out += "))\n";
    }
    if (m.memory) {
        out += "  (memory ";
        out += std::to_string(m.memory->initial_pages);
        out += ")\n";
    }
    for (const FuncDef& f : m.funcs) append_func(out, f, m);
    out += ")\n";
    return out;
}

std::string print_instr_head(const Instr& instr, const ModuleAst* ctx) {
    std::string out;
    append_head(out, instr, ctx);
    return out;
}

}  // namespace wasmlite
