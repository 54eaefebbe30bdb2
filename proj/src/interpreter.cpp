// wasmlite: a distilled WebAssembly
// SPDX-License-Identifier: Apache-2.0
#include "wasmlite/interpreter.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <utility>

#include "wasmlite/printer.hpp"

namespace wasmlite {

std::string_view trap_kind_name(TrapKind kind) {
    switch (kind) {
        case TrapKind::Unreachable: return "unreachable";
        case TrapKind::DivByZero: return "div_by_zero";
        case TrapKind::IntOverflow: return "int_overflow";
        case TrapKind::OobMemory: return "oob_memory";
        case TrapKind::CallStackExhausted: return "call_stack_exhausted";
    }
    return "?";
}

Outcome Outcome::returned(std::vector<Value> vs) {
    Outcome o;
    o.kind = Kind::Returned;
    o.values = std::move(vs);
    return o;
}

Outcome Outcome::trapped(TrapKind k) {
    Outcome o;
    o.kind = Kind::Trap;
    o.trap = k;
    return o;
}

Outcome Outcome::uncaught(Value payload) {
    Outcome o;
    o.kind = Kind::UncaughtException;
    o.payload = payload;
    return o;
}

Outcome Outcome::fuel_exhausted() {
    Outcome o;
    o.kind = Kind::FuelExhausted;
    return o;
}

Instance instantiate(ValidatedModule vm, uint32_t max_pages) {
    Instance inst{std::move(vm), {}};
    uint32_t initial = inst.module.ast.memory ? inst.module.ast.memory->initial_pages : 0;
    if (initial > max_pages) {
        throw EngineError("initial memory (" + std::to_string(initial) +
                          " pages) exceeds the limit of " + std::to_string(max_pages) +
                          " pages");
    }
    Store& st = inst.store;
    st.max_pages = max_pages;
    st.page_count = initial;
    st.memory.assign(static_cast<size_t>(initial) * kPageSize, 0);
    st.globals.reserve(inst.module.ast.globals.size());
    for (const GlobalDef& g : inst.module.ast.globals) st.globals.push_back(Value::of_i32(g.init));
    return inst;
}

namespace {

[[noreturn]] void internal(const char* msg) { throw InternalError(msg); }

const FuncAnnotations& annotations(const Config& c, uint32_t func_index) {
    const std::vector<FuncAnnotations>& per_func = c.instance->module.per_func;
    if (func_index >= per_func.size()) internal("missing function annotations");
    return per_func[func_index];
}

Value pop_value(Frame& fr) {
    if (fr.value_stack.empty()) internal("value stack underflow");
    Value v = fr.value_stack.back();
    fr.value_stack.pop_back();
    return v;
}

void push_value(Config& c, Frame& fr, Value v) {
    fr.value_stack.push_back(v);
    if (c.check_invariants &&
        fr.value_stack.size() > annotations(c, fr.func_index).max_value_stack)
        internal("value stack exceeds the max_value_stack annotation");
}

void push_entry(Config& c, Frame& fr, ControlEntry e) {
    fr.ctrl_stack.push_back(e);
    if (c.check_invariants &&
        fr.ctrl_stack.size() > annotations(c, fr.func_index).max_ctrl_depth)
        internal("control stack exceeds the max_ctrl_depth annotation");
}

// Pops the top frame, moving its result_arity values to the caller's
// stack; Returned when it was the outermost frame.
std::optional<Outcome> finish_frame(Config& c) {
    Frame& fr = c.frames.back();
    if (c.check_invariants && fr.value_stack.size() != fr.result_arity)
        internal("frame ends with the wrong number of values");
    if (fr.value_stack.size() < fr.result_arity) internal("value stack underflow at frame end");
    std::vector<Value> results(fr.value_stack.end() - fr.result_arity, fr.value_stack.end());
    c.frames.pop_back();
    if (c.frames.empty()) return Outcome::returned(std::move(results));
    Frame& caller = c.frames.back();
    for (Value v : results) push_value(c, caller, v);
    return std::nullopt;
}

// Br k: save the target's label_arity values, truncate to its entry
// height, pop k+1 entries (re-entering loops with a fresh body), restore
// the saved values. A branch to the func_body entry returns the frame.
std::optional<Outcome> do_branch(Config& c, uint32_t k) {
    Frame& fr = c.frames.back();
    if (k >= fr.ctrl_stack.size()) internal("branch depth out of range");
    ControlEntry target = fr.ctrl_stack[fr.ctrl_stack.size() - 1 - k];
    if (fr.value_stack.size() < target.entry_height + target.label_arity)
        internal("value stack underflow at branch");
    std::vector<Value> saved(fr.value_stack.end() - target.label_arity, fr.value_stack.end());
    fr.value_stack.resize(target.entry_height);
    fr.ctrl_stack.resize(fr.ctrl_stack.size() - (k + 1));
    if (target.kind == EntryKind::Loop) {
        push_entry(c, fr,
                   {target.code, 0, EntryKind::Loop, 0, target.end_arity, target.entry_height,
                    nullptr});
    }
    for (Value v : saved) push_value(c, fr, v);
    if (target.kind == EntryKind::FuncBody) return finish_frame(c);
    return std::nullopt;
}

uint32_t read_le32(const std::vector<uint8_t>& mem, uint32_t addr) {
    return static_cast<uint32_t>(mem[addr]) | static_cast<uint32_t>(mem[addr + 1]) << 8 |
           static_cast<uint32_t>(mem[addr + 2]) << 16 | static_cast<uint32_t>(mem[addr + 3]) << 24;
}

void write_le32(std::vector<uint8_t>& mem, uint32_t addr, uint32_t v) {
    mem[addr] = static_cast<uint8_t>(v);
    mem[addr + 1] = static_cast<uint8_t>(v >> 8);
    mem[addr + 2] = static_cast<uint8_t>(v >> 16);
    mem[addr + 3] = static_cast<uint8_t>(v >> 24);
}

std::optional<Outcome> step_impl(Config& c, StepInfo* info) {
    if (c.frames.empty()) internal("step on a terminated configuration");
    if (c.fuel) {
        if (*c.fuel == 0) return Outcome::fuel_exhausted();
        --*c.fuel;
    }
    Frame& fr = c.frames.back();
    if (fr.ctrl_stack.empty()) internal("frame without control entries");
    ControlEntry& top = fr.ctrl_stack.back();

    if (top.ip >= top.code->size()) {
        if (top.kind == EntryKind::FuncBody) return finish_frame(c);
        // Fall-through: results are already in place above entry_height.
        if (c.check_invariants &&
            fr.value_stack.size() != top.entry_height + top.end_arity)
            internal("stack height at block end does not match its type");
        fr.ctrl_stack.pop_back();
        return std::nullopt;
    }

    const Instr& in = (*top.code)[top.ip];
    ++top.ip;
    if (info) info->instr = &in;
    Store& st = c.instance->store;

    auto push = [&](uint32_t bits) { push_value(c, fr, Value{bits}); };
    auto pop = [&]() { return pop_value(fr); };
    auto check_local = [&](uint32_t i) {
        if (i >= fr.locals.size()) internal("local index out of range");
    };
    auto check_global = [&](uint32_t i) {
        if (i >= st.globals.size()) internal("global index out of range");
    };

    switch (in.op) {
        case Op::Const:
            push(static_cast<uint32_t>(in.value));
            return std::nullopt;
        case Op::Add: {
            Value b = pop(), a = pop();
            push(a.bits + b.bits);
            return std::nullopt;
        }
        case Op::Sub: {
            Value b = pop(), a = pop();
            push(a.bits - b.bits);
            return std::nullopt;
        }
        case Op::Mul: {
            Value b = pop(), a = pop();
            push(a.bits * b.bits);
            return std::nullopt;
        }
        case Op::DivS: {
            Value b = pop(), a = pop();
            int32_t bi = b.as_i32(), ai = a.as_i32();
            if (bi == 0) return Outcome::trapped(TrapKind::DivByZero);
            if (ai == std::numeric_limits<int32_t>::min() && bi == -1)
                return Outcome::trapped(TrapKind::IntOverflow);
            push(static_cast<uint32_t>(ai / bi));
            return std::nullopt;
        }
        case Op::RemS: {
            Value b = pop(), a = pop();
            int32_t bi = b.as_i32(), ai = a.as_i32();
            if (bi == 0) return Outcome::trapped(TrapKind::DivByZero);
            // INT32_MIN rem -1 is 0; the C++ expression would overflow.
            uint32_t r = (ai == std::numeric_limits<int32_t>::min() && bi == -1)
                             ? 0
                             : static_cast<uint32_t>(ai % bi);
            push(r);
            return std::nullopt;
        }
        case Op::And: {
            Value b = pop(), a = pop();
            push(a.bits & b.bits);
            return std::nullopt;
        }
        case Op::Or: {
            Value b = pop(), a = pop();
            push(a.bits | b.bits);
            return std::nullopt;
        }
        case Op::Xor: {
            Value b = pop(), a = pop();
            push(a.bits ^ b.bits);
            return std::nullopt;
        }
        case Op::Shl: {
            Value b = pop(), a = pop();
            push(a.bits << (b.bits & 31));
            return std::nullopt;
        }
        case Op::ShrU: {
            Value b = pop(), a = pop();
            push(a.bits >> (b.bits & 31));
            return std::nullopt;
        }
        case Op::Eq: {
            Value b = pop(), a = pop();
            push(a.bits == b.bits ? 1 : 0);
            return std::nullopt;
        }
        case Op::Ne: {
            Value b = pop(), a = pop();
            push(a.bits != b.bits ? 1 : 0);
            return std::nullopt;
        }
        case Op::LtS: {
            Value b = pop(), a = pop();
            push(a.as_i32() < b.as_i32() ? 1 : 0);
            return std::nullopt;
        }
        case Op::LeS: {
            Value b = pop(), a = pop();
            push(a.as_i32() <= b.as_i32() ? 1 : 0);
            return std::nullopt;
        }
        case Op::LtU: {
            Value b = pop(), a = pop();
            push(a.bits < b.bits ? 1 : 0);
            return std::nullopt;
        }
        case Op::Eqz:
            push(pop().bits == 0 ? 1 : 0);
            return std::nullopt;
        case Op::Drop:
            pop();
            return std::nullopt;
        case Op::Select: {
            Value cond = pop(), v2 = pop(), v1 = pop();
            push(cond.bits != 0 ? v1.bits : v2.bits);
            return std::nullopt;
        }
        case Op::LocalGet:
            check_local(in.index);
            push(fr.locals[in.index].bits);
            return std::nullopt;
        case Op::LocalSet:
            check_local(in.index);
            fr.locals[in.index] = pop();
            return std::nullopt;
        case Op::LocalTee:
            check_local(in.index);
            if (fr.value_stack.empty()) internal("value stack underflow");
            fr.locals[in.index] = fr.value_stack.back();
            return std::nullopt;
        case Op::GlobalGet:
            check_global(in.index);
            push(st.globals[in.index].bits);
            return std::nullopt;
        case Op::GlobalSet:
            check_global(in.index);
            st.globals[in.index] = pop();
            return std::nullopt;
        case Op::Load: {
            uint32_t addr = pop().bits;
            if (static_cast<uint64_t>(addr) + 4 > st.memory.size())
                return Outcome::trapped(TrapKind::OobMemory);
            push(read_le32(st.memory, addr));
            return std::nullopt;
        }
        case Op::Store: {
            Value v = pop();
            uint32_t addr = pop().bits;
            if (static_cast<uint64_t>(addr) + 4 > st.memory.size())
                return Outcome::trapped(TrapKind::OobMemory);
            write_le32(st.memory, addr, v.bits);
            return std::nullopt;
        }
        case Op::MemorySize:
            push(st.page_count);
            return std::nullopt;
        case Op::MemoryGrow: {
            uint32_t delta = pop().bits;
            uint64_t new_pages = static_cast<uint64_t>(st.page_count) + delta;
            if (new_pages > st.max_pages) {
                push(0xFFFFFFFFu);
                return std::nullopt;
            }
            push(st.page_count);
            st.page_count = static_cast<uint32_t>(new_pages);
            st.memory.resize(static_cast<size_t>(new_pages) * kPageSize, 0);
            return std::nullopt;
        }
        case Op::Block:
            push_entry(c, fr,
                       {&in.body, 0, EntryKind::Block, in.result_arity, in.result_arity,
                        static_cast<uint32_t>(fr.value_stack.size()), nullptr});
            return std::nullopt;
        case Op::Loop:
            push_entry(c, fr,
                       {&in.body, 0, EntryKind::Loop, 0, in.result_arity,
                        static_cast<uint32_t>(fr.value_stack.size()), nullptr});
            return std::nullopt;
        case Op::If: {
            Value cond = pop();
            const std::vector<Instr>* arm = cond.bits != 0 ? &in.body : &in.body2;
            push_entry(c, fr,
                       {arm, 0, EntryKind::IfArm, in.result_arity, in.result_arity,
                        static_cast<uint32_t>(fr.value_stack.size()), nullptr});
            return std::nullopt;
        }
        case Op::TryCatch:
            push_entry(c, fr,
                       {&in.body, 0, EntryKind::Try, in.result_arity, in.result_arity,
                        static_cast<uint32_t>(fr.value_stack.size()), &in.body2});
            return std::nullopt;
        case Op::Br:
            return do_branch(c, in.index);
        case Op::BrIf: {
            Value cond = pop();
            if (cond.bits != 0) return do_branch(c, in.index);
            return std::nullopt;
        }
        case Op::Return:
            return do_branch(c, static_cast<uint32_t>(fr.ctrl_stack.size() - 1));
        case Op::Call: {
            const ModuleAst& ast = c.instance->module.ast;
            if (in.index >= ast.funcs.size()) internal("call index out of range");
            const FuncDef& callee = ast.funcs[in.index];
            if (c.frames.size() >= c.call_depth_limit)
                return Outcome::trapped(TrapKind::CallStackExhausted);
            uint32_t n_params = callee.type.param_count;
            if (fr.value_stack.size() < n_params) internal("value stack underflow at call");
            Frame nf;
            nf.func_index = in.index;
            nf.result_arity = callee.type.result_count;
            nf.locals.assign(fr.value_stack.end() - n_params, fr.value_stack.end());
            fr.value_stack.resize(fr.value_stack.size() - n_params);
            nf.locals.resize(n_params + callee.local_count, Value{});
            const FuncAnnotations& ann = annotations(c, in.index);
            nf.value_stack.reserve(ann.max_value_stack);
            nf.ctrl_stack.reserve(ann.max_ctrl_depth);
            nf.ctrl_stack.push_back({&callee.body, 0, EntryKind::FuncBody,
                                     callee.type.result_count, callee.type.result_count, 0,
                                     nullptr});
            c.frames.push_back(std::move(nf));
            return std::nullopt;
        }
        case Op::Nop:
            return std::nullopt;
        case Op::Unreachable:
            return Outcome::trapped(TrapKind::Unreachable);
        case Op::Throw:
            return unwind(c, pop());
    }
    internal("unhandled opcode");
}

}  // namespace

std::optional<Outcome> step(Config& c, StepInfo* info) {
    if (info) *info = StepInfo{};
    std::optional<Outcome> out = step_impl(c, info);
    if (info && !out) info->frame_depth = static_cast<uint32_t>(c.frames.size());
    return out;
}

Outcome run_to_outcome(Config& c) {
    while (true) {
        if (std::optional<Outcome> out = step(c)) return std::move(*out);
    }
}

Config make_invoke_config(Instance& inst, std::string_view func_name,
                          const std::vector<Value>& args, std::optional<uint64_t> fuel,
                          uint32_t call_depth_limit) {
    std::optional<uint32_t> idx = inst.module.ast.find_func(func_name);
    if (!idx) throw EngineError("unknown function '" + std::string(func_name) + "'");
    const FuncDef& f = inst.module.ast.funcs[*idx];
    if (!f.exported)
        throw EngineError("function '" + std::string(func_name) + "' is not exported");
    if (args.size() != f.type.param_count) {
        throw EngineError("function '" + std::string(func_name) + "' takes " +
                          std::to_string(f.type.param_count) + " argument(s), got " +
                          std::to_string(args.size()));
    }
    if (inst.module.per_func.size() != inst.module.ast.funcs.size())
        throw EngineError("instance has no validation annotations");
    Frame fr;
    fr.func_index = *idx;
    fr.result_arity = f.type.result_count;
    fr.locals = args;
    fr.locals.resize(args.size() + f.local_count, Value{});
    const FuncAnnotations& ann = inst.module.per_func[*idx];
    fr.value_stack.reserve(ann.max_value_stack);
    fr.ctrl_stack.reserve(ann.max_ctrl_depth);
    fr.ctrl_stack.push_back({&f.body, 0, EntryKind::FuncBody, f.type.result_count,
                             f.type.result_count, 0, nullptr});
    Config c;
    c.instance = &inst;
    c.frames.push_back(std::move(fr));
    c.fuel = fuel;
    c.call_depth_limit = call_depth_limit;
    return c;
}

Outcome invoke(Instance& inst, std::string_view func_name, const std::vector<Value>& args,
               std::optional<uint64_t> fuel, uint32_t call_depth_limit) {
    Config c = make_invoke_config(inst, func_name, args, fuel, call_depth_limit);
    return run_to_outcome(c);
}

TraceResult trace(Instance& inst, std::string_view func_name, const std::vector<Value>& args,
                  uint64_t fuel, uint32_t call_depth_limit) {
    Config c = make_invoke_config(inst, func_name, args, fuel, call_depth_limit);
    TraceResult tr;
    uint64_t index = 0;
    while (true) {
        StepInfo info;
        std::optional<Outcome> out = step(c, &info);
        if (out) {
            tr.outcome = std::move(*out);
            return tr;
        }
        TraceRecord rec;
        rec.step_index = index++;
        rec.frame_depth = info.frame_depth;
        rec.instr = info.instr ? print_instr_head(*info.instr, &inst.module.ast) : "end";
        const std::vector<Value>& vs = c.frames.back().value_stack;
        size_t keep = vs.size() > 8 ? 8 : vs.size();
        rec.truncated = vs.size() > 8;
        rec.value_stack_after.assign(vs.end() - keep, vs.end());
        tr.records.push_back(std::move(rec));
    }
}

std::string format_trace_record(const TraceRecord& r) {
    std::string s = "#" + std::to_string(r.step_index) + " depth=" +
                    std::to_string(r.frame_depth) + " " + r.instr + " -> [";
    bool first = true;
    if (r.truncated) {
        s += "...";
        first = false;
    }
    for (Value v : r.value_stack_after) {
        if (!first) s += ' ';
        s += std::to_string(v.as_i32());
        first = false;
    }
    s += ']';
    return s;
}

}  // namespace wasmlite
