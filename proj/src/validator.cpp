// wasmlite: a distilled WebAssembly
// SPDX-License-Identifier: Apache-2.0
#include "wasmlite/validator.hpp"

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>

#include "wasmlite/printer.hpp"

namespace wasmlite {

std::string_view error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::StackUnderflow: return "stack_underflow";
        case ErrorKind::TypeMismatch: return "type_mismatch";
        case ErrorKind::UnknownIndex: return "unknown_index";
        case ErrorKind::DepthOutOfRange: return "depth_out_of_range";
        case ErrorKind::ImmutableGlobal: return "immutable_global";
        case ErrorKind::MissingResult: return "missing_result";
        case ErrorKind::FeatureDisabled: return "feature_disabled";
        case ErrorKind::ArityMismatch: return "arity_mismatch";
    }
    return "?";
}

std::optional<InstrArity> instr_arity(const Instr& instr, const ModuleAst& m) {
    auto fixed = [](uint32_t pops, uint32_t pushes) {
        return InstrArity{ArityClass::Fixed, pops, pushes};
    };
    switch (instr.op) {
        case Op::Const:
        case Op::LocalGet:
        case Op::MemorySize:
            return fixed(0, 1);
        case Op::GlobalGet:
            if (instr.index >= m.globals.size()) return std::nullopt;
            return fixed(0, 1);
        case Op::GlobalSet:
            if (instr.index >= m.globals.size()) return std::nullopt;
            return fixed(1, 0);
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
        case Op::Eq:
        case Op::Ne:
        case Op::LtS:
        case Op::LeS:
        case Op::LtU:
            return fixed(2, 1);
        case Op::Eqz:
        case Op::LocalTee:
        case Op::Load:
        case Op::MemoryGrow:
            return fixed(1, 1);
        case Op::Drop:
        case Op::LocalSet:
            return fixed(1, 0);
        case Op::Select:
            return fixed(3, 1);
        case Op::Store:
            return fixed(2, 0);
        case Op::Nop:
            return fixed(0, 0);
        case Op::Call: {
            if (instr.index >= m.funcs.size()) return std::nullopt;
            const FuncType& t = m.funcs[instr.index].type;
            return fixed(t.param_count, t.result_count);
        }
        case Op::Br:
        case Op::Return:
        case Op::Unreachable:
        case Op::Throw:
            return InstrArity{ArityClass::NeverFallsThrough, 0, 0};
        case Op::BrIf:
        case Op::Block:
        case Op::Loop:
        case Op::If:
        case Op::TryCatch:
            return InstrArity{ArityClass::Structural, 0, 0};
    }
    return std::nullopt;
}

namespace {

enum class FrameKind : uint8_t { Func, Block, Loop, If, Try, Catch };

struct VFrame {
    FrameKind kind;
    uint32_t label_arity;   // values a br to this frame carries (loop: 0)
    uint32_t end_arity;     // values left on fall-through
    uint32_t entry_height;
    bool unreachable = false;
    bool poisoned = false;  // an error was recorded here; skip its end checks
};

const char* frame_noun(FrameKind k) {
    switch (k) {
        case FrameKind::Func: return "function";
        case FrameKind::Block: return "block";
        case FrameKind::Loop: return "loop";
        case FrameKind::If: return "if";
        case FrameKind::Try: return "try";
        case FrameKind::Catch: return "catch";
    }
    return "?";
}

class FuncValidator {
public:
    FuncValidator(const ModuleAst& m, const FuncDef& f, Features features,
                  ValidatorTestHooks hooks, std::vector<ValidationError>& errors)
        : m_(m), f_(f), features_(features), hooks_(hooks), errors_(errors) {}

    FuncAnnotations run() {
        frames_.push_back({FrameKind::Func, f_.type.result_count, f_.type.result_count, 0});
        ann_.max_ctrl_depth = 1;
        validate_seq(f_.body);
        exit_frame(f_.pos);
        return ann_;
    }

private:
    void error(SourcePos pos, ErrorKind kind, std::string message) {
        errors_.push_back({pos, kind, std::move(message)});
        frames_.back().poisoned = true;
        mark_unreachable();
    }

    void mark_unreachable() {
        VFrame& cur = frames_.back();
        h_ = cur.entry_height;
        if (!cur.unreachable) {
            cur.unreachable = true;
            ++dead_;
        }
    }

    void push_value() {
        ++h_;
        if (dead_ == 0 && h_ > ann_.max_value_stack) ann_.max_value_stack = h_;
    }

    // One popped slot. At the current frame's floor this succeeds
    // polymorphically when the frame is unreachable, else reports `kind`.
    void pop_value(SourcePos pos, ErrorKind kind, const std::string& what) {
        VFrame& cur = frames_.back();
        if (h_ == cur.entry_height) {
            if (cur.unreachable) return;
            error(pos, kind, what + " underflows the stack");
            return;
        }
        --h_;
    }

    void push_frame(FrameKind kind, uint32_t label_arity, uint32_t end_arity) {
        frames_.push_back({kind, label_arity, end_arity, h_});
        if (dead_ == 0 && frames_.size() > ann_.max_ctrl_depth)
            ann_.max_ctrl_depth = static_cast<uint32_t>(frames_.size());
    }

    // Fall-through at the end of the top frame's body: exactly end_arity
    // values above entry_height, which transfer to the enclosing frame.
    void exit_frame(SourcePos pos) {
        const char* noun = frame_noun(frames_.back().kind);
        uint32_t end_arity = frames_.back().end_arity;
        bool poisoned = frames_.back().poisoned;
        for (uint32_t i = 0; !poisoned && i < end_arity; ++i) {
            VFrame& cur = frames_.back();
            if (h_ == cur.entry_height) {
                if (!cur.unreachable)
                    error(pos, ErrorKind::MissingResult,
                          std::string(noun) + " ends without its result");
            } else {
                --h_;
            }
        }
        VFrame& cur = frames_.back();
        if (!poisoned && h_ != cur.entry_height) {
            error(pos, ErrorKind::TypeMismatch,
                  std::to_string(h_ - cur.entry_height) +
                      " extra value(s) on the stack at the end of this " + noun);
        }
        bool was_dead = frames_.back().unreachable;
        uint32_t entry = frames_.back().entry_height;
        frames_.pop_back();
        if (was_dead) --dead_;
        // stack arithmetic after an error is untrustworthy, so the
        // enclosing frames skip their end checks as well
        if (poisoned && !frames_.empty()) frames_.back().poisoned = true;
        h_ = entry;
        for (uint32_t i = 0; i < end_arity; ++i) push_value();
    }

    void validate_seq(const std::vector<Instr>& seq) {
        for (const Instr& instr : seq) validate_instr(instr);
    }

    bool check_result_arity(const Instr& instr) {
        if (instr.result_arity <= 1) return true;
        error(instr.pos, ErrorKind::ArityMismatch,
              std::string("'") + op_keyword(instr.op) + "' declares more than one result");
        return false;
    }

    // The k-th frame from the top, or nullptr with a diagnostic (suppressed
    // under the mutation hook) when k is out of range.
    VFrame* branch_target(const Instr& instr) {
        if (instr.index < frames_.size())
            return &frames_[frames_.size() - 1 - instr.index];
        if (!hooks_.skip_br_depth_check) {
            error(instr.pos, ErrorKind::DepthOutOfRange,
                  "branch depth " + std::to_string(instr.index) + " exceeds the " +
                      std::to_string(frames_.size() - 1) + " enclosing block(s)");
        }
        return nullptr;
    }

    void validate_instr(const Instr& instr) {
        const char* kw = op_keyword(instr.op);
        auto quoted = [&] { return "'" + std::string(kw) + "'"; };
        switch (instr.op) {
            case Op::LocalGet:
            case Op::LocalSet:
            case Op::LocalTee:
                if (instr.index >= f_.type.param_count + f_.local_count) {
                    error(instr.pos, ErrorKind::UnknownIndex,
                          quoted() + " references local " + std::to_string(instr.index) +
                              " but the function has " +
                              std::to_string(f_.type.param_count + f_.local_count));
                    return;
                }
                break;
            case Op::GlobalGet:
            case Op::GlobalSet:
                if (instr.index >= m_.globals.size()) {
                    error(instr.pos, ErrorKind::UnknownIndex,
                          quoted() + " references global " + std::to_string(instr.index) +
                              " but the module has " + std::to_string(m_.globals.size()));
                    return;
                }
                if (instr.op == Op::GlobalSet && !m_.globals[instr.index].is_mutable) {
                    error(instr.pos, ErrorKind::ImmutableGlobal,
                          "global $" + m_.globals[instr.index].name + " is immutable");
                    return;
                }
                break;
            case Op::Load:
            case Op::Store:
            case Op::MemorySize:
            case Op::MemoryGrow:
                if (!m_.memory) {
                    error(instr.pos, ErrorKind::UnknownIndex,
                          quoted() + " requires a declared memory");
                    return;
                }
                break;
            case Op::Call:
                if (instr.index >= m_.funcs.size()) {
                    error(instr.pos, ErrorKind::UnknownIndex,
                          quoted() + " references function " + std::to_string(instr.index) +
                              " but the module has " + std::to_string(m_.funcs.size()));
                    return;
                }
                break;
            case Op::Throw:
            case Op::TryCatch:
                if (!features_.exceptions) {
                    error(instr.pos, ErrorKind::FeatureDisabled,
                          quoted() + " requires the exceptions feature");
                    return;
                }
                break;
            default:
                break;
        }

        switch (instr.op) {
            case Op::Block:
            case Op::Loop: {
                if (!check_result_arity(instr)) return;
                bool is_loop = instr.op == Op::Loop;
                push_frame(is_loop ? FrameKind::Loop : FrameKind::Block,
                           is_loop ? 0 : instr.result_arity, instr.result_arity);
                validate_seq(instr.body);
                exit_frame(instr.pos);
                return;
            }
            case Op::If: {
                if (!check_result_arity(instr)) return;
                pop_value(instr.pos, ErrorKind::StackUnderflow, "'if' condition");
                if (instr.result_arity > 0 && instr.body2.empty()) {
                    error(instr.pos, ErrorKind::ArityMismatch,
                          "'if' with a result requires an 'else' arm");
                    return;
                }
                uint32_t entry = h_;
                push_frame(FrameKind::If, instr.result_arity, instr.result_arity);
                validate_seq(instr.body);
                exit_frame(instr.pos);
                if (!instr.body2.empty()) {
                    h_ = entry;
                    push_frame(FrameKind::If, instr.result_arity, instr.result_arity);
                    validate_seq(instr.body2);
                    exit_frame(instr.pos);
                }
                return;
            }
            case Op::TryCatch: {
                if (!check_result_arity(instr)) return;
                uint32_t entry = h_;
                push_frame(FrameKind::Try, instr.result_arity, instr.result_arity);
                validate_seq(instr.body);
                exit_frame(instr.pos);
                h_ = entry;
                push_frame(FrameKind::Catch, instr.result_arity, instr.result_arity);
                push_value();  // the caught payload
                validate_seq(instr.body2);
                exit_frame(instr.pos);
                return;
            }
            case Op::Br: {
                VFrame* target = branch_target(instr);
                if (target) {
                    for (uint32_t i = 0; i < target->label_arity; ++i)
                        pop_value(instr.pos, ErrorKind::StackUnderflow, "branch operand");
                }
                mark_unreachable();
                return;
            }
            case Op::BrIf: {
                pop_value(instr.pos, ErrorKind::StackUnderflow, "'br_if' condition");
                VFrame* target = branch_target(instr);
                if (target) {
                    uint32_t arity = target->label_arity;
                    for (uint32_t i = 0; i < arity; ++i)
                        pop_value(instr.pos, ErrorKind::StackUnderflow, "branch operand");
                    for (uint32_t i = 0; i < arity; ++i) push_value();
                }
                return;
            }
            case Op::Return:
                for (uint32_t i = 0; i < f_.type.result_count; ++i)
                    pop_value(instr.pos, ErrorKind::StackUnderflow, "'return' operand");
                mark_unreachable();
                return;
            case Op::Unreachable:
                mark_unreachable();
                return;
            case Op::Throw:
                pop_value(instr.pos, ErrorKind::StackUnderflow, "'throw' payload");
                mark_unreachable();
                return;
            default: {
                std::optional<InstrArity> arity = instr_arity(instr, m_);
                // Index errors were handled above, so the table never
                // misses here and the class is Fixed.
                if (!arity) return;
                for (uint32_t i = 0; i < arity->pops; ++i)
                    pop_value(instr.pos, ErrorKind::StackUnderflow, quoted() + " operand");
                for (uint32_t i = 0; i < arity->pushes; ++i) push_value();
                return;
            }
        }
    }

    const ModuleAst& m_;
    const FuncDef& f_;
    Features features_;
    ValidatorTestHooks hooks_;
    std::vector<ValidationError>& errors_;
    std::vector<VFrame> frames_;
    uint32_t h_ = 0;
    uint32_t dead_ = 0;  // frames currently marked unreachable
    FuncAnnotations ann_;
};

}  // namespace

ValidateResult validate_module(const ModuleAst& m, Features features,
                               const ValidatorTestHooks* hooks) {
    ValidateResult result;
    ValidatorTestHooks hk = hooks ? *hooks : ValidatorTestHooks{};
    std::vector<FuncAnnotations> per_func(m.funcs.size());
    for (size_t i = 0; i < m.funcs.size(); ++i) {
        const FuncDef& f = m.funcs[i];
        if (f.type.result_count > 1) {
            result.errors.push_back({f.pos, ErrorKind::ArityMismatch,
                                     "function $" + f.name + " declares more than one result"});
            continue;
        }
        per_func[i] = FuncValidator(m, f, features, hk, result.errors).run();
    }
    std::stable_sort(result.errors.begin(), result.errors.end(),
                     [](const ValidationError& a, const ValidationError& b) {
                         if (a.pos.line != b.pos.line) return a.pos.line < b.pos.line;
                         return a.pos.col < b.pos.col;
                     });
    if (result.errors.empty()) result.module = ValidatedModule{m, std::move(per_func)};
    return result;
}

}  // namespace wasmlite
