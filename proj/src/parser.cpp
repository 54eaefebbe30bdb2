// wasmlite: a distilled WebAssembly
// SPDX-License-Identifier: Apache-2.0
#include "wasmlite/parser.hpp"

#include <cassert>
#include <charconv>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>

namespace wasmlite {
namespace {

constexpr int kMaxNesting = 1000;

struct Token {
    enum class Kind { LParen, RParen, Atom };
    Kind kind;
    std::string_view text;
    SourcePos pos;
};

bool is_atom_char(char c) {
    return c != '(' && c != ')' && c != ';' && c != ' ' && c != '\t' && c != '\r' && c != '\n';
}

std::vector<Token> lex(std::string_view text, std::vector<ParseError>& errors) {
    std::vector<Token> tokens;
    uint32_t line = 1;
    uint32_t col = 1;
    size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (c == '\n') {
            ++line;
            col = 1;
            ++i;
        } else if (c == ' ' || c == '\t' || c == '\r') {
            ++col;
            ++i;
        } else if (c == ';') {
            if (i + 1 < text.size() && text[i + 1] == ';') {
                while (i < text.size() && text[i] != '\n') ++i;
            } else {
                errors.push_back({{line, col}, "stray ';' (line comments use ';;')"});
                ++col;
                ++i;
            }
        } else if (c == '(') {
            tokens.push_back({Token::Kind::LParen, text.substr(i, 1), {line, col}});
            ++col;
            ++i;
        } else if (c == ')') {
            tokens.push_back({Token::Kind::RParen, text.substr(i, 1), {line, col}});
            ++col;
            ++i;
        } else {
            size_t start = i;
            SourcePos pos{line, col};
            while (i < text.size() && is_atom_char(text[i])) {
                ++i;
                ++col;
            }
            tokens.push_back({Token::Kind::Atom, text.substr(start, i - start), pos});
        }
    }
    return tokens;
}

// S-expression tree. Atoms keep views into the input text.
struct SNode {
    bool is_list = false;
    std::string_view atom;
    SourcePos pos;
    std::vector<SNode> items;
};

// Parses one node starting at tokens[i]. Returns false on a structural
// error (already recorded); the caller stops consuming input.
bool parse_node(const std::vector<Token>& tokens, size_t& i, int depth, SNode& out,
                std::vector<ParseError>& errors) {
    const Token& t = tokens[i];
    if (t.kind == Token::Kind::Atom) {
        out.is_list = false;
        out.atom = t.text;
        out.pos = t.pos;
        ++i;
        return true;
    }
    if (t.kind == Token::Kind::RParen) {
        errors.push_back({t.pos, "unbalanced ')'"});
        return false;
    }
    if (depth >= kMaxNesting) {
        errors.push_back({t.pos, "nesting too deep"});
        return false;
    }
    out.is_list = true;
    out.pos = t.pos;
    ++i;  // consume '('
    while (true) {
        if (i >= tokens.size()) {
            errors.push_back({t.pos, "unbalanced '(' (unclosed list)"});
            return false;
        }
        if (tokens[i].kind == Token::Kind::RParen) {
            ++i;
            return true;
        }
        SNode child;
        if (!parse_node(tokens, i, depth + 1, child, errors)) return false;
        out.items.push_back(std::move(child));
    }
}

bool is_atom(const SNode& n, std::string_view s) { return !n.is_list && n.atom == s; }

bool head_is(const SNode& n, std::string_view kw) {
    return n.is_list && !n.items.empty() && is_atom(n.items[0], kw);
}

std::string quoted(std::string_view s) { return "'" + std::string(s) + "'"; }

// Optional sign, then decimal or 0x-hex digits. Signless values up to
// 2^32-1 are wrapped to two's complement; signed values must fit in i32.
std::optional<int32_t> parse_i32_literal(std::string_view s) {
    if (s.empty()) return std::nullopt;
    bool neg = false;
    bool signed_form = false;
    if (s[0] == '+' || s[0] == '-') {
        neg = s[0] == '-';
        signed_form = true;
        s.remove_prefix(1);
    }
    int base = 10;
    if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
        base = 16;
        s.remove_prefix(2);
    }
    uint64_t magnitude = 0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), magnitude, base);
    if (ec != std::errc() || end != s.data() + s.size()) return std::nullopt;
    if (signed_form) {
        uint64_t limit = neg ? 0x80000000u : 0x7FFFFFFFu;
        if (magnitude > limit) return std::nullopt;
        int64_t v = neg ? -static_cast<int64_t>(magnitude) : static_cast<int64_t>(magnitude);
        return static_cast<int32_t>(v);
    }
    if (magnitude > 0xFFFFFFFFu) return std::nullopt;
    return static_cast<int32_t>(static_cast<uint32_t>(magnitude));
}

// Plain unsigned decimal, used for local/label indices and page counts.
std::optional<uint32_t> parse_index_literal(std::string_view s) {
    if (s.empty()) return std::nullopt;
    uint32_t v = 0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 10);
    if (ec != std::errc() || end != s.data() + s.size()) return std::nullopt;
    return v;
}

bool is_valid_name(std::string_view s) {
    if (s.size() < 2 || s[0] != '$') return false;
    char first = s[1];
    if (!((first >= 'a' && first <= 'z') || (first >= 'A' && first <= 'Z') || first == '_'))
        return false;  // leading digit would read like an index
    for (char c : s.substr(2)) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                  c == '_' || c == '-' || c == '.';
        if (!ok) return false;
    }
    return true;
}

struct Ctx {
    explicit Ctx(std::vector<ParseError>& errs) : errors(errs) {}

    std::vector<ParseError>& errors;
    std::unordered_map<std::string_view, uint32_t> func_index;
    std::unordered_map<std::string_view, uint32_t> global_index;
    bool func_failed = false;  // abort flag for the function being parsed

    void error(SourcePos pos, std::string message) {
        errors.push_back({pos, std::move(message)});
    }
    void fail(SourcePos pos, std::string message) {
        error(pos, std::move(message));
        func_failed = true;
    }
};

enum class BodyKind { Func, Block, Loop, IfThen, IfElse, TryBody, CatchBody };

// Consumes an optional (result i32) list at items[cur], returning the arity.
uint8_t parse_result_annotation(const std::vector<SNode>& items, size_t& cur, Ctx& ctx) {
    if (cur >= items.size() || !head_is(items[cur], "result")) return 0;
    const SNode& form = items[cur];
    ++cur;
    if (form.items.size() != 2 || !is_atom(form.items[1], "i32")) {
        ctx.fail(form.pos, form.items.size() > 2 ? "at most one result"
                                                 : "expected (result i32)");
        return 0;
    }
    return 1;
}

const SNode* take_atom(const std::vector<SNode>& items, size_t& cur) {
    if (cur >= items.size() || items[cur].is_list) return nullptr;
    return &items[cur++];
}

void parse_seq(const std::vector<SNode>& items, size_t& cur, int depth, BodyKind kind,
               Ctx& ctx, std::vector<Instr>& out, std::string_view& terminator);

// Parses one instruction whose keyword atom is items[cur]. The cursor sits
// past the keyword's operands (and past the matching end for block forms)
// on return.
void parse_instr(const std::vector<SNode>& items, size_t& cur, int depth, Ctx& ctx,
                 std::vector<Instr>& out) {
    const SNode& kw = items[cur];
    assert(!kw.is_list);
    ++cur;
    Instr instr;
    instr.pos = kw.pos;

    auto take_const_operand = [&]() {
        const SNode* lit = take_atom(items, cur);
        if (!lit) {
            ctx.fail(kw.pos, "expected integer literal after 'i32.const'");
            return;
        }
        std::optional<int32_t> v = parse_i32_literal(lit->atom);
        if (!v) {
            ctx.fail(lit->pos, "malformed integer literal " + quoted(lit->atom));
            return;
        }
        instr.value = *v;
    };
    auto take_index_operand = [&]() {
        const SNode* lit = take_atom(items, cur);
        if (!lit) {
            ctx.fail(kw.pos, "expected index after " + quoted(kw.atom));
            return;
        }
        std::optional<uint32_t> v = parse_index_literal(lit->atom);
        if (!v) {
            ctx.fail(lit->pos, "malformed index " + quoted(lit->atom));
            return;
        }
        instr.index = *v;
    };
    auto take_name_operand = [&](const std::unordered_map<std::string_view, uint32_t>& table,
                                 std::string_view what) {
        const SNode* name = take_atom(items, cur);
        if (!name || name->atom.empty() || name->atom[0] != '$') {
            ctx.fail(kw.pos, "expected $name after " + quoted(kw.atom));
            return;
        }
        auto it = table.find(name->atom);
        if (it == table.end()) {
            ctx.fail(name->pos, "unknown " + std::string(what) + " " + quoted(name->atom));
            return;
        }
        instr.index = it->second;
    };
    auto parse_block_body = [&](BodyKind body_kind, std::vector<Instr>& body,
                                std::string_view& term) {
        if (depth >= kMaxNesting) {
            ctx.fail(kw.pos, "nesting too deep");
            return;
        }
        parse_seq(items, cur, depth + 1, body_kind, ctx, body, term);
    };

    std::string_view w = kw.atom;
    if (w == "i32.const") {
        instr.op = Op::Const;
        take_const_operand();
    } else if (w == "i32.add") {
        instr.op = Op::Add;
    } else if (w == "i32.sub") {
        instr.op = Op::Sub;
    } else if (w == "i32.mul") {
        instr.op = Op::Mul;
    } else if (w == "i32.div_s") {
        instr.op = Op::DivS;
    } else if (w == "i32.rem_s") {
        instr.op = Op::RemS;
    } else if (w == "i32.and") {
        instr.op = Op::And;
    } else if (w == "i32.or") {
        instr.op = Op::Or;
    } else if (w == "i32.xor") {
        instr.op = Op::Xor;
    } else if (w == "i32.shl") {
        instr.op = Op::Shl;
    } else if (w == "i32.shr_u") {
        instr.op = Op::ShrU;
    } else if (w == "i32.eq") {
        instr.op = Op::Eq;
    } else if (w == "i32.ne") {
        instr.op = Op::Ne;
    } else if (w == "i32.lt_s") {
        instr.op = Op::LtS;
    } else if (w == "i32.le_s") {
        instr.op = Op::LeS;
    } else if (w == "i32.lt_u") {
        instr.op = Op::LtU;
    } else if (w == "i32.eqz") {
        instr.op = Op::Eqz;
    } else if (w == "drop") {
        instr.op = Op::Drop;
    } else if (w == "select") {
        instr.op = Op::Select;
    } else if (w == "local.get") {
        instr.op = Op::LocalGet;
        take_index_operand();
    } else if (w == "local.set") {
        instr.op = Op::LocalSet;
        take_index_operand();
    } else if (w == "local.tee") {
        instr.op = Op::LocalTee;
        take_index_operand();
    } else if (w == "global.get") {
        instr.op = Op::GlobalGet;
        take_name_operand(ctx.global_index, "global");
    } else if (w == "global.set") {
        instr.op = Op::GlobalSet;
        take_name_operand(ctx.global_index, "global");
    } else if (w == "i32.load") {
        instr.op = Op::Load;
    } else if (w == "i32.store") {
        instr.op = Op::Store;
    } else if (w == "memory.size") {
        instr.op = Op::MemorySize;
    } else if (w == "memory.grow") {
        instr.op = Op::MemoryGrow;
    } else if (w == "br") {
        instr.op = Op::Br;
        take_index_operand();
    } else if (w == "br_if") {
        instr.op = Op::BrIf;
        take_index_operand();
    } else if (w == "return") {
        instr.op = Op::Return;
    } else if (w == "call") {
        instr.op = Op::Call;
        take_name_operand(ctx.func_index, "function");
    } else if (w == "nop") {
        instr.op = Op::Nop;
    } else if (w == "unreachable") {
        instr.op = Op::Unreachable;
    } else if (w == "throw") {
        instr.op = Op::Throw;
    } else if (w == "block" || w == "loop") {
        instr.op = w == "block" ? Op::Block : Op::Loop;
        instr.result_arity = parse_result_annotation(items, cur, ctx);
        if (ctx.func_failed) return;
        std::string_view term;
        parse_block_body(w == "block" ? BodyKind::Block : BodyKind::Loop, instr.body, term);
    } else if (w == "if") {
        instr.op = Op::If;
        instr.result_arity = parse_result_annotation(items, cur, ctx);
        if (ctx.func_failed) return;
        std::string_view term;
        parse_block_body(BodyKind::IfThen, instr.body, term);
        if (ctx.func_failed) return;
        if (term == "else") parse_block_body(BodyKind::IfElse, instr.body2, term);
    } else if (w == "try") {
        instr.op = Op::TryCatch;
        instr.result_arity = parse_result_annotation(items, cur, ctx);
        if (ctx.func_failed) return;
        std::string_view term;
        parse_block_body(BodyKind::TryBody, instr.body, term);
        if (ctx.func_failed) return;
        parse_block_body(BodyKind::CatchBody, instr.body2, term);
    } else {
        ctx.fail(kw.pos, "unknown keyword " + quoted(w));
        return;
    }
    if (!ctx.func_failed) out.push_back(std::move(instr));
}

// Parses instructions until this level's terminator. For BodyKind::Func the
// terminator is the end of the function form; block forms end at 'end',
// if-then additionally at 'else', and a try body only at 'catch'.
void parse_seq(const std::vector<SNode>& items, size_t& cur, int depth, BodyKind kind,
               Ctx& ctx, std::vector<Instr>& out, std::string_view& terminator) {
    terminator = {};
    while (!ctx.func_failed) {
        if (cur >= items.size()) {
            if (kind == BodyKind::Func) return;
            ctx.fail(items.empty() ? SourcePos{} : items.back().pos,
                     kind == BodyKind::TryBody ? "missing 'catch' in try" : "missing 'end'");
            return;
        }
        const SNode& n = items[cur];
        if (n.is_list) {
            if (head_is(n, "param") || head_is(n, "result") || head_is(n, "local") ||
                head_is(n, "export")) {
                ctx.fail(n.pos, quoted(n.items[0].atom) + " must precede the function body");
            } else {
                ctx.fail(n.pos, "folded instruction forms are not supported");
            }
            return;
        }
        if (n.atom == "end" || n.atom == "else" || n.atom == "catch") {
            switch (kind) {
                case BodyKind::Func:
                    ctx.fail(n.pos, quoted(n.atom) + " without an open block");
                    return;
                case BodyKind::TryBody:
                    if (n.atom != "catch") {
                        ctx.fail(n.pos, n.atom == "else" ? "'else' outside if"
                                                         : "missing 'catch' in try");
                        return;
                    }
                    break;
                case BodyKind::IfThen:
                    if (n.atom == "catch") {
                        ctx.fail(n.pos, "'catch' outside try");
                        return;
                    }
                    break;
                default:
                    if (n.atom != "end") {
                        ctx.fail(n.pos, n.atom == "else" ? "'else' outside if"
                                                         : "'catch' outside try");
                        return;
                    }
                    break;
            }
            terminator = n.atom;
            ++cur;
            return;
        }
        parse_instr(items, cur, depth, ctx, out);
    }
}

// (func $name (export)? (param i32)* (result i32)? (local i32)* instr*)
void parse_func(const SNode& form, Ctx& ctx, ModuleAst& m) {
    ctx.func_failed = false;
    FuncDef func;
    func.pos = form.pos;
    size_t cur = 1;
    if (cur >= form.items.size() || form.items[cur].is_list ||
        !is_valid_name(form.items[cur].atom)) {
        ctx.error(form.pos, "expected $name after 'func'");
        return;
    }
    func.name = std::string(form.items[cur].atom.substr(1));
    ++cur;

    // Header forms in fixed order: export, params, result, locals.
    int stage = 0;  // 0=export 1=param 2=result 3=local
    while (cur < form.items.size() && form.items[cur].is_list) {
        const SNode& h = form.items[cur];
        if (head_is(h, "export")) {
            if (stage > 0 || func.exported) {
                ctx.error(h.pos, "'(export)' must come first in the function header");
                return;
            }
            if (h.items.size() != 1) {
                ctx.error(h.pos, "expected bare '(export)'");
                return;
            }
            func.exported = true;
            ++cur;
        } else if (head_is(h, "param")) {
            if (stage > 1) {
                ctx.error(h.pos, "'(param ...)' must precede results and locals");
                return;
            }
            stage = 1;
            for (size_t k = 1; k < h.items.size(); ++k) {
                if (!is_atom(h.items[k], "i32")) {
                    ctx.error(h.pos, "expected (param i32)");
                    return;
                }
                ++func.type.param_count;
            }
            ++cur;
        } else if (head_is(h, "result")) {
            if (stage > 2 || func.type.result_count > 0) {
                ctx.error(h.pos, stage > 2 ? "'(result ...)' must precede locals"
                                           : "at most one result");
                return;
            }
            stage = 2;
            if (h.items.size() != 2 || !is_atom(h.items[1], "i32")) {
                ctx.error(h.pos, h.items.size() > 2 ? "at most one result"
                                                    : "expected (result i32)");
                return;
            }
            func.type.result_count = 1;
            ++cur;
        } else if (head_is(h, "local")) {
            stage = 3;
            for (size_t k = 1; k < h.items.size(); ++k) {
                if (!is_atom(h.items[k], "i32")) {
                    ctx.error(h.pos, "expected (local i32)");
                    return;
                }
                ++func.local_count;
            }
            ++cur;
        } else {
            break;  // not a header form; body parsing reports it
        }
    }

    std::string_view term;
    parse_seq(form.items, cur, 0, BodyKind::Func, ctx, func.body, term);
    if (!ctx.func_failed) m.funcs.push_back(std::move(func));
}

// (global $name (mut i32)? (i32.const K))
void parse_global(const SNode& form, Ctx& ctx, ModuleAst& m) {
    GlobalDef g;
    g.pos = form.pos;
    size_t cur = 1;
    if (cur >= form.items.size() || form.items[cur].is_list ||
        !is_valid_name(form.items[cur].atom)) {
        ctx.error(form.pos, "expected $name after 'global'");
        return;
    }
    g.name = std::string(form.items[cur].atom.substr(1));
    ++cur;
    if (cur < form.items.size() && head_is(form.items[cur], "mut")) {
        const SNode& mut = form.items[cur];
        if (mut.items.size() != 2 || !is_atom(mut.items[1], "i32")) {
            ctx.error(mut.pos, "expected (mut i32)");
            return;
        }
        g.is_mutable = true;
        ++cur;
    }
    if (cur >= form.items.size() || !head_is(form.items[cur], "i32.const")) {
        ctx.error(form.pos, "expected (i32.const K) global initializer");
        return;
    }
    const SNode& init = form.items[cur];
    if (init.items.size() != 2 || init.items[1].is_list) {
        ctx.error(init.pos, "expected (i32.const K) global initializer");
        return;
    }
    std::optional<int32_t> v = parse_i32_literal(init.items[1].atom);
    if (!v) {
        ctx.error(init.items[1].pos, "malformed integer literal " + quoted(init.items[1].atom));
        return;
    }
    g.init = *v;
    ++cur;
    if (cur != form.items.size()) {
        ctx.error(form.items[cur].pos, "unexpected item in global declaration");
        return;
    }
    m.globals.push_back(std::move(g));
}

// (memory N)
void parse_memory(const SNode& form, Ctx& ctx, ModuleAst& m) {
    if (m.memory) {
        ctx.error(form.pos, "duplicate memory");
        return;
    }
    if (form.items.size() != 2 || form.items[1].is_list) {
        ctx.error(form.pos, "expected (memory N)");
        return;
    }
    std::optional<uint32_t> pages = parse_index_literal(form.items[1].atom);
    if (!pages) {
        ctx.error(form.items[1].pos, "malformed page count " + quoted(form.items[1].atom));
        return;
    }
    m.memory = MemoryDecl{*pages, form.pos};
}

std::optional<ModuleAst> parse_tree(const SNode& root, std::vector<ParseError>& errors) {
    if (!head_is(root, "module")) {
        errors.push_back({root.pos, "expected (module ...)"});
        return std::nullopt;
    }
    Ctx ctx{errors};
    ModuleAst m;

    // First pass: name tables (forward references) and skeleton order.
    int stage = 0;  // 0=globals 1=memory 2=funcs
    uint32_t n_funcs = 0;
    uint32_t n_globals = 0;
    for (size_t i = 1; i < root.items.size(); ++i) {
        const SNode& form = root.items[i];
        if (head_is(form, "func")) {
            stage = 2;
            if (form.items.size() >= 2 && !form.items[1].is_list &&
                is_valid_name(form.items[1].atom)) {
                auto [it, fresh] = ctx.func_index.emplace(form.items[1].atom, n_funcs);
                if (!fresh) {
                    ctx.error(form.items[1].pos,
                              "duplicate function name " + quoted(form.items[1].atom));
                }
            }
            ++n_funcs;
        } else if (head_is(form, "global")) {
            if (stage > 0) {
                ctx.error(form.pos, "global declarations must precede memory and functions");
                continue;
            }
            if (form.items.size() >= 2 && !form.items[1].is_list &&
                is_valid_name(form.items[1].atom)) {
                auto [it, fresh] = ctx.global_index.emplace(form.items[1].atom, n_globals);
                if (!fresh) {
                    ctx.error(form.items[1].pos,
                              "duplicate global name " + quoted(form.items[1].atom));
                }
            }
            ++n_globals;
        } else if (head_is(form, "memory")) {
            if (stage > 1) {
                ctx.error(form.pos, "memory must precede functions");
                continue;
            }
            stage = 1;
        } else if (form.is_list && !form.items.empty() && !form.items[0].is_list) {
            ctx.error(form.pos, "unknown keyword " + quoted(form.items[0].atom));
        } else {
            ctx.error(form.pos, "expected (global ...), (memory ...), or (func ...)");
        }
    }

    // Second pass: contents.
    for (size_t i = 1; i < root.items.size(); ++i) {
        const SNode& form = root.items[i];
        if (head_is(form, "func")) {
            parse_func(form, ctx, m);
        } else if (head_is(form, "global") && m.funcs.empty() && !m.memory) {
            parse_global(form, ctx, m);
        } else if (head_is(form, "memory") && m.funcs.empty()) {
            parse_memory(form, ctx, m);
        }
    }

    if (!errors.empty()) return std::nullopt;
    return m;
}

}  // namespace

ParseResult parse_module(std::string_view text) {
    ParseResult result;
    std::vector<Token> tokens = lex(text, result.errors);
    if (!result.errors.empty()) return result;
    if (tokens.empty()) {
        result.errors.push_back({{1, 1}, "expected (module ...)"});
        return result;
    }
    SNode root;
    size_t i = 0;
    if (!parse_node(tokens, i, 0, root, result.errors)) return result;
    if (i < tokens.size()) {
        bool stray_close = tokens[i].kind == Token::Kind::RParen;
        result.errors.push_back(
            {tokens[i].pos, stray_close ? "unbalanced ')'" : "text after module form"});
        return result;
    }
    result.module = parse_tree(root, result.errors);
    return result;
}

}  // namespace wasmlite
