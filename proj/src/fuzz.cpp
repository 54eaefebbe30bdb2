// wasmlite: a distilled WebAssembly
// SPDX-License-Identifier: Apache-2.0
#include "wasmlite/fuzz.hpp"

#include <algorithm>
#include <limits>
#include <string>
#include <utility>

#include "wasmlite/interpreter.hpp"
#include "wasmlite/rng.hpp"

namespace wasmlite {
namespace {

Instr mk(Op op) {
    Instr i;
    i.op = op;
    return i;
}

Instr mk_const(int32_t v) {
    Instr i;
    i.op = Op::Const;
    i.value = v;
    return i;
}

Instr mk_idx(Op op, uint32_t index) {
    Instr i;
    i.op = op;
    i.index = index;
    return i;
}

// Candidate instructions considered at each generation step. Terminal ones
// end the current body.
enum class Cand : uint8_t {
    Const,
    Binop,
    Relop,
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
    Nop,
    Call,
    Block,
    Loop,
    If,
    Try,
    BrIf,
    Br,
    Return,
    Throw,
    Unreachable,
};

class ModuleGen {
public:
    explicit ModuleGen(const GenConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {}

    ModuleAst run() {
        uint32_t n_globals = rng_.below(3);
        for (uint32_t i = 0; i < n_globals; ++i) {
            GlobalDef g;
            g.name = "g" + std::to_string(i);
            g.is_mutable = rng_.below(4) != 0;
            g.init = const_value();
            if (g.is_mutable) mutable_globals_.push_back(i);
            m_.globals.push_back(std::move(g));
        }
        if (cfg_.enable_memory) m_.memory = MemoryDecl{1, {}};
        // Signatures first so bodies can call forward.
        uint32_t n_funcs = 1 + rng_.below(std::max(1u, cfg_.max_funcs));
        for (uint32_t i = 0; i < n_funcs; ++i) {
            FuncDef f;
            f.name = "f" + std::to_string(i);
            f.exported = i == 0;
            f.type.param_count = rng_.below(4);
            f.type.result_count = rng_.below(2);
            f.local_count = rng_.below(cfg_.max_locals + 1);
            m_.funcs.push_back(std::move(f));
        }
        for (uint32_t i = 0; i < n_funcs; ++i) gen_body(i);
        return std::move(m_);
    }

private:
    int32_t const_value() {
        switch (rng_.below(8)) {
            case 0: return 0;
            case 1: return 1;
            case 2: return static_cast<int32_t>(rng_.below(16));
            case 3: return -1;
            case 4: return std::numeric_limits<int32_t>::max();
            case 5: return std::numeric_limits<int32_t>::min();
            case 6: return -static_cast<int32_t>(rng_.below(16));
            default: return static_cast<int32_t>(rng_.next());
        }
    }

    void gen_body(uint32_t func_index) {
        FuncDef& f = m_.funcs[func_index];
        n_locals_ = f.type.param_count + f.local_count;
        result_count_ = f.type.result_count;
        budget_ = 1 + rng_.below(std::max(1u, cfg_.max_body_len));
        labels_.assign(1, f.type.result_count);
        std::vector<Instr> body;
        gen_seq(body, 0, f.type.result_count, 0);
        f.body = std::move(body);
    }

    // Emits instructions into out, starting at stack height h0 relative to
    // the enclosing frame's floor, until a terminal instruction ends the
    // body or the close coin flips; then pads or drops to exactly target.
    void gen_seq(std::vector<Instr>& out, uint32_t h0, uint32_t target, uint32_t depth) {
        uint32_t h = h0;
        while (budget_ > 0 && rng_.below(8) != 0) {
            --budget_;
            if (emit_one(out, h, depth)) return;
        }
        while (h > target) {
            out.push_back(mk(Op::Drop));
            --h;
        }
        while (h < target) {
            out.push_back(mk_const(const_value()));
            ++h;
        }
    }

    // The k in `br k` values eligible at stack height h (label payload must
    // be on the stack), optionally reserving one slot for a condition.
    uint32_t pick_branch_depth(uint32_t h, bool* found) {
        uint32_t eligible[16];
        uint32_t n = 0;
        for (uint32_t k = 0; k < labels_.size() && n < 16; ++k) {
            if (labels_[labels_.size() - 1 - k] <= h) eligible[n++] = k;
        }
        if (n == 0) {
            *found = false;
            return 0;
        }
        *found = true;
        return eligible[rng_.below(n)];
    }

    bool emit_one(std::vector<Instr>& out, uint32_t& h, uint32_t depth) {
        struct WC {
            Cand c;
            uint32_t w;
        };
        WC cands[32];
        uint32_t n_cands = 0;
        uint32_t total = 0;
        auto add = [&](Cand c, uint32_t w) {
            cands[n_cands++] = {c, w};
            total += w;
        };

        bool blocks_ok = depth < cfg_.max_block_depth;
        bool any_br = false;
        bool any_br_if = false;
        for (uint32_t k = 0; k < labels_.size(); ++k) {
            uint32_t arity = labels_[labels_.size() - 1 - k];
            if (arity <= h) any_br = true;
            if (h >= 1 && arity <= h - 1) any_br_if = true;
        }
        bool any_callee = false;
        for (const FuncDef& f : m_.funcs)
            if (f.type.param_count <= h) any_callee = true;

        add(Cand::Const, 8);
        add(Cand::Nop, 1);
        add(Cand::Unreachable, 1);
        if (h >= 1) {
            add(Cand::Eqz, 2);
            add(Cand::Drop, 2);
        }
        if (h >= 2) {
            add(Cand::Binop, 10);
            add(Cand::Relop, 5);
        }
        if (h >= 3) add(Cand::Select, 2);
        if (n_locals_ > 0) {
            add(Cand::LocalGet, 6);
            if (h >= 1) {
                add(Cand::LocalSet, 3);
                add(Cand::LocalTee, 2);
            }
        }
        if (!m_.globals.empty()) add(Cand::GlobalGet, 2);
        if (!mutable_globals_.empty() && h >= 1) add(Cand::GlobalSet, 2);
        if (cfg_.enable_memory) {
            add(Cand::MemorySize, 1);
            if (h >= 1) {
                add(Cand::Load, 2);
                add(Cand::MemoryGrow, 1);
            }
            if (h >= 2) add(Cand::Store, 2);
        }
        if (any_callee) add(Cand::Call, 4);
        if (blocks_ok) {
            add(Cand::Block, 3);
            add(Cand::Loop, 3);
            if (h >= 1) add(Cand::If, 4);
            if (cfg_.enable_exceptions) add(Cand::Try, 3);
        }
        if (any_br) add(Cand::Br, 2);
        if (any_br_if) add(Cand::BrIf, 3);
        if (h >= result_count_) add(Cand::Return, 2);
        if (cfg_.enable_exceptions && h >= 1) add(Cand::Throw, 2);

        uint32_t roll = rng_.below(total);
        Cand chosen = cands[0].c;
        for (uint32_t i = 0; i < n_cands; ++i) {
            if (roll < cands[i].w) {
                chosen = cands[i].c;
                break;
            }
            roll -= cands[i].w;
        }

        switch (chosen) {
            case Cand::Const:
                out.push_back(mk_const(const_value()));
                ++h;
                return false;
            case Cand::Binop:
                out.push_back(mk(static_cast<Op>(static_cast<int>(Op::Add) + rng_.below(10))));
                --h;
                return false;
            case Cand::Relop:
                out.push_back(mk(static_cast<Op>(static_cast<int>(Op::Eq) + rng_.below(5))));
                --h;
                return false;
            case Cand::Eqz:
                out.push_back(mk(Op::Eqz));
                return false;
            case Cand::Drop:
                out.push_back(mk(Op::Drop));
                --h;
                return false;
            case Cand::Select:
                out.push_back(mk(Op::Select));
                h -= 2;
                return false;
            case Cand::LocalGet:
                out.push_back(mk_idx(Op::LocalGet, rng_.below(n_locals_)));
                ++h;
                return false;
            case Cand::LocalSet:
                out.push_back(mk_idx(Op::LocalSet, rng_.below(n_locals_)));
                --h;
                return false;
            case Cand::LocalTee:
                out.push_back(mk_idx(Op::LocalTee, rng_.below(n_locals_)));
                return false;
            case Cand::GlobalGet:
                out.push_back(mk_idx(Op::GlobalGet,
                                     rng_.below(static_cast<uint32_t>(m_.globals.size()))));
                ++h;
                return false;
            case Cand::GlobalSet:
                out.push_back(mk_idx(
                    Op::GlobalSet,
                    mutable_globals_[rng_.below(static_cast<uint32_t>(mutable_globals_.size()))]));
                --h;
                return false;
            case Cand::Load:
                out.push_back(mk(Op::Load));
                return false;
            case Cand::Store:
                out.push_back(mk(Op::Store));
                h -= 2;
                return false;
            case Cand::MemorySize:
                out.push_back(mk(Op::MemorySize));
                ++h;
                return false;
            case Cand::MemoryGrow:
                out.push_back(mk(Op::MemoryGrow));
                return false;
            case Cand::Nop:
                out.push_back(mk(Op::Nop));
                return false;
            case Cand::Call: {
                uint32_t eligible[64];
                uint32_t n = 0;
                for (uint32_t i = 0; i < m_.funcs.size() && n < 64; ++i)
                    if (m_.funcs[i].type.param_count <= h) eligible[n++] = i;
                uint32_t callee = eligible[rng_.below(n)];
                out.push_back(mk_idx(Op::Call, callee));
                h -= m_.funcs[callee].type.param_count;
                h += m_.funcs[callee].type.result_count;
                return false;
            }
            case Cand::Block:
            case Cand::Loop: {
                bool is_loop = chosen == Cand::Loop;
                Instr b = mk(is_loop ? Op::Loop : Op::Block);
                b.result_arity = static_cast<uint8_t>(rng_.below(2));
                labels_.push_back(is_loop ? 0 : b.result_arity);
                gen_seq(b.body, 0, b.result_arity, depth + 1);
                labels_.pop_back();
                h += b.result_arity;
                out.push_back(std::move(b));
                return false;
            }
            case Cand::If: {
                Instr b = mk(Op::If);
                b.result_arity = static_cast<uint8_t>(rng_.below(2));
                --h;  // condition
                labels_.push_back(b.result_arity);
                gen_seq(b.body, 0, b.result_arity, depth + 1);
                if (b.result_arity == 1 || rng_.below(2) == 0)
                    gen_seq(b.body2, 0, b.result_arity, depth + 1);
                labels_.pop_back();
                h += b.result_arity;
                out.push_back(std::move(b));
                return false;
            }
            case Cand::Try: {
                Instr b = mk(Op::TryCatch);
                b.result_arity = static_cast<uint8_t>(rng_.below(2));
                labels_.push_back(b.result_arity);
                gen_seq(b.body, 0, b.result_arity, depth + 1);
                gen_seq(b.body2, 1, b.result_arity, depth + 1);  // payload on the stack
                labels_.pop_back();
                h += b.result_arity;
                out.push_back(std::move(b));
                return false;
            }
            case Cand::BrIf: {
                bool found = false;
                uint32_t k = pick_branch_depth(h - 1, &found);
                if (!found) {
                    out.push_back(mk(Op::Nop));
                    return false;
                }
                out.push_back(mk_idx(Op::BrIf, k));
                --h;
                return false;
            }
            case Cand::Br: {
                bool found = false;
                uint32_t k = pick_branch_depth(h, &found);
                if (!found) {
                    out.push_back(mk(Op::Nop));
                    return false;
                }
                out.push_back(mk_idx(Op::Br, k));
                return true;
            }
            case Cand::Return:
                out.push_back(mk(Op::Return));
                return true;
            case Cand::Throw:
                out.push_back(mk(Op::Throw));
                return true;
            case Cand::Unreachable:
                out.push_back(mk(Op::Unreachable));
                return true;
        }
        return false;
    }

    const GenConfig& cfg_;
    Xorshift64Star rng_;
    ModuleAst m_;
    std::vector<uint32_t> mutable_globals_;
    std::vector<uint32_t> labels_;  // label arity per open frame, bottom = function
    uint32_t budget_ = 0;
    uint32_t n_locals_ = 0;
    uint32_t result_count_ = 0;
};

}  // namespace

ModuleAst gen_module(const GenConfig& cfg) { return ModuleGen(cfg).run(); }

ModuleAst mutate_module(const ModuleAst& m, uint64_t seed) {
    ModuleAst out = m;
    Xorshift64Star rng(seed ^ 0x5DEECE66DULL);
    if (out.funcs.empty()) return out;

    std::vector<std::vector<Instr>*> bodies;
    std::vector<Instr*> instrs;
    for (FuncDef& f : out.funcs) {
        bodies.push_back(&f.body);
        for_each_instr(f.body, [&](Instr& instr) {
            instrs.push_back(&instr);
            if (is_block_like(instr.op)) {
                bodies.push_back(&instr.body);
                bodies.push_back(&instr.body2);
            }
        });
    }
    std::vector<std::vector<Instr>*> nonempty;
    for (std::vector<Instr>* b : bodies)
        if (!b->empty()) nonempty.push_back(b);

    for (int attempt = 0; attempt < 8; ++attempt) {
        switch (rng.below(6)) {
            case 0: {  // bump a branch depth
                std::vector<Instr*> brs;
                for (Instr* p : instrs)
                    if (p->op == Op::Br || p->op == Op::BrIf) brs.push_back(p);
                if (brs.empty()) break;
                brs[rng.below(static_cast<uint32_t>(brs.size()))]->index += 1 + rng.below(3);
                return out;
            }
            case 1: {  // retarget an index operand
                std::vector<Instr*> xs;
                for (Instr* p : instrs) {
                    switch (p->op) {
                        case Op::LocalGet:
                        case Op::LocalSet:
                        case Op::LocalTee:
                        case Op::GlobalGet:
                        case Op::GlobalSet:
                        case Op::Call:
                            xs.push_back(p);
                            break;
                        default:
                            break;
                    }
                }
                if (xs.empty()) break;
                xs[rng.below(static_cast<uint32_t>(xs.size()))]->index = rng.below(6);
                return out;
            }
            case 2: {  // delete an instruction
                if (nonempty.empty()) break;
                std::vector<Instr>* b = nonempty[rng.below(static_cast<uint32_t>(nonempty.size()))];
                b->erase(b->begin() + rng.below(static_cast<uint32_t>(b->size())));
                return out;
            }
            case 3: {  // duplicate an instruction
                if (nonempty.empty()) break;
                std::vector<Instr>* b = nonempty[rng.below(static_cast<uint32_t>(nonempty.size()))];
                uint32_t i = rng.below(static_cast<uint32_t>(b->size()));
                Instr copy = (*b)[i];
                b->insert(b->begin() + i, std::move(copy));
                return out;
            }
            case 4: {  // insert a fresh instruction
                std::vector<Instr>* b = bodies[rng.below(static_cast<uint32_t>(bodies.size()))];
                uint32_t pos = rng.below(static_cast<uint32_t>(b->size()) + 1);
                Instr instr;
                switch (rng.below(6)) {
                    case 0: instr = mk_const(static_cast<int32_t>(rng.next())); break;
                    case 1: instr = mk(Op::Drop); break;
                    case 2: instr = mk(Op::Add); break;
                    case 3: instr = mk(Op::Select); break;
                    case 4: instr = mk_idx(Op::Br, rng.below(4)); break;
                    default: instr = mk(Op::Throw); break;
                }
                b->insert(b->begin() + pos, std::move(instr));
                return out;
            }
            default: {  // flip a constant
                std::vector<Instr*> consts;
                for (Instr* p : instrs)
                    if (p->op == Op::Const) consts.push_back(p);
                if (consts.empty()) break;
                consts[rng.below(static_cast<uint32_t>(consts.size()))]->value =
                    static_cast<int32_t>(rng.next());
                return out;
            }
        }
    }
    return out;
}

namespace {

void record_outcome(FuzzReport& rep, const Outcome& o) {
    switch (o.kind) {
        case Outcome::Kind::Returned:
            ++rep.returned;
            return;
        case Outcome::Kind::Trap:
            switch (o.trap) {
                case TrapKind::Unreachable: ++rep.trap_unreachable; return;
                case TrapKind::DivByZero: ++rep.trap_div_by_zero; return;
                case TrapKind::IntOverflow: ++rep.trap_int_overflow; return;
                case TrapKind::OobMemory: ++rep.trap_oob_memory; return;
                case TrapKind::CallStackExhausted: ++rep.trap_call_stack_exhausted; return;
            }
            return;
        case Outcome::Kind::UncaughtException:
            ++rep.uncaught_exception;
            return;
        case Outcome::Kind::FuelExhausted:
            ++rep.fuel_exhausted;
            return;
    }
}

void fuzz_case(uint64_t seed, const GenConfig& tmpl, const FuzzOptions& opts, FuzzReport& rep) {
    ++rep.cases_run;
    GenConfig cfg = tmpl;
    cfg.seed = seed;
    auto fail = [&](std::string diagnostic) {
        rep.assertion_failures.emplace_back(seed, std::move(diagnostic));
    };
    try {
        ModuleAst m = gen_module(cfg);
        Features features{cfg.enable_exceptions};
        ValidateResult vr = validate_module(m, features, &opts.validator_hooks);
        if (!vr.ok()) {
            fail("generated module failed validation: " + vr.errors[0].message);
            return;
        }
        ++rep.validated;
        const ValidatedModule& vm = *vr.module;

        const FuncDef& entry = vm.ast.funcs[0];
        if (!entry.exported) {
            fail("generated module has no exported entry function");
            return;
        }
        std::vector<Value> args(entry.type.param_count, Value{});

        Instance inst = instantiate(vm, opts.max_pages);
        Outcome main_out = invoke(inst, entry.name, args, cfg.fuel);
        record_outcome(rep, main_out);

        if (opts.check_trace) {
            Instance inst2 = instantiate(vm, opts.max_pages);
            TraceResult tr = trace(inst2, entry.name, args, cfg.fuel);
            if (!(tr.outcome == main_out)) fail("trace and invoke disagree on the outcome");
        }

        if (opts.run_mutants) {
            ModuleAst mutant = mutate_module(m, seed);
            ValidateResult mv = validate_module(mutant, features, &opts.validator_hooks);
            if (!mv.ok()) {
                ++rep.mutants_rejected;
            } else {
                ++rep.mutants_accepted;
                const FuncDef* mentry = nullptr;
                for (const FuncDef& f : mv.module->ast.funcs)
                    if (f.exported) {
                        mentry = &f;
                        break;
                    }
                if (mentry) {
                    Instance mi = instantiate(*mv.module, opts.max_pages);
                    std::vector<Value> margs(mentry->type.param_count, Value{});
                    invoke(mi, mentry->name, margs, cfg.fuel);
                }
            }
        }
    } catch (const InternalError& e) {
        fail(std::string("internal error: ") + e.what());
    } catch (const EngineError& e) {
        fail(std::string("engine error: ") + e.what());
    } catch (const std::exception& e) {
        fail(std::string("unexpected exception: ") + e.what());
    }
}

}  // namespace

void FuzzReport::merge(FuzzReport other) {
    cases_run += other.cases_run;
    validated += other.validated;
    returned += other.returned;
    trap_unreachable += other.trap_unreachable;
    trap_div_by_zero += other.trap_div_by_zero;
    trap_int_overflow += other.trap_int_overflow;
    trap_oob_memory += other.trap_oob_memory;
    trap_call_stack_exhausted += other.trap_call_stack_exhausted;
    uncaught_exception += other.uncaught_exception;
    fuel_exhausted += other.fuel_exhausted;
    mutants_rejected += other.mutants_rejected;
    mutants_accepted += other.mutants_accepted;
    for (auto& f : other.assertion_failures) assertion_failures.push_back(std::move(f));
}

std::string FuzzReport::to_kv() const {
    std::string s;
    auto kv = [&s](const char* k, uint64_t v) {
        s += k;
        s += '=';
        s += std::to_string(v);
        s += '\n';
    };
    kv("cases_run", cases_run);
    kv("validated", validated);
    kv("returned", returned);
    kv("trap_unreachable", trap_unreachable);
    kv("trap_div_by_zero", trap_div_by_zero);
    kv("trap_int_overflow", trap_int_overflow);
    kv("trap_oob_memory", trap_oob_memory);
    kv("trap_call_stack_exhausted", trap_call_stack_exhausted);
    kv("uncaught_exception", uncaught_exception);
    kv("fuel_exhausted", fuel_exhausted);
    kv("mutants_rejected", mutants_rejected);
    kv("mutants_accepted", mutants_accepted);
    kv("assertion_failures", assertion_failures.size());
    for (size_t i = 0; i < assertion_failures.size(); ++i) {
        s += "failure_" + std::to_string(i) + "=" + std::to_string(assertion_failures[i].first) +
             ":" + assertion_failures[i].second + "\n";
    }
    return s;
}

std::string FuzzReport::to_text() const {
    std::string s;
    auto line = [&s](const char* k, uint64_t v) {
        s += "  ";
        s += k;
        s += ": ";
        s += std::to_string(v);
        s += '\n';
    };
    s += "cases run: " + std::to_string(cases_run) + ", validated: " + std::to_string(validated) +
         "\n";
    s += "outcomes:\n";
    line("returned", returned);
    line("trap unreachable", trap_unreachable);
    line("trap div_by_zero", trap_div_by_zero);
    line("trap int_overflow", trap_int_overflow);
    line("trap oob_memory", trap_oob_memory);
    line("trap call_stack_exhausted", trap_call_stack_exhausted);
    line("uncaught exception", uncaught_exception);
    line("fuel exhausted", fuel_exhausted);
    s += "mutants: " + std::to_string(mutants_accepted) + " accepted, " +
         std::to_string(mutants_rejected) + " rejected\n";
    s += "assertion failures: " + std::to_string(assertion_failures.size()) + "\n";
    size_t shown = std::min<size_t>(assertion_failures.size(), 10);
    for (size_t i = 0; i < shown; ++i) {
        s += "  seed " + std::to_string(assertion_failures[i].first) + ": " +
             assertion_failures[i].second + "\n";
    }
    if (shown < assertion_failures.size())
        s += "  ... " + std::to_string(assertion_failures.size() - shown) + " more\n";
    return s;
}

FuzzReport fuzz_soundness_serial(uint64_t n, const GenConfig& cfg_template,
                                 const FuzzOptions& opts) {
    FuzzReport rep;
    for (uint64_t i = 0; i < n; ++i) fuzz_case(opts.base_seed + i, cfg_template, opts, rep);
    std::sort(rep.assertion_failures.begin(), rep.assertion_failures.end());
    return rep;
}

FuzzReport fuzz_soundness(uint64_t n, const GenConfig& cfg_template, const FuzzOptions& opts) {
#ifdef _OPENMP
    FuzzReport rep;
#pragma omp parallel
    {
        FuzzReport local;
#pragma omp for schedule(dynamic, 16) nowait
        for (int64_t i = 0; i < static_cast<int64_t>(n); ++i)
            fuzz_case(opts.base_seed + static_cast<uint64_t>(i), cfg_template, opts, local);
#pragma omp critical
        rep.merge(std::move(local));
    }
    std::sort(rep.assertion_failures.begin(), rep.assertion_failures.end());
    return rep;
#else
    return fuzz_soundness_serial(n, cfg_template, opts);
#endif
}

}  // namespace wasmlite
