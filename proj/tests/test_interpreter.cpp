// wasmlite: a distilled WebAssembly
// SPDX-License-Identifier: Apache-2.0
#include <limits>
#include <string>

#include "doctest.h"
#include "wasmlite/interpreter.hpp"
#include "wasmlite/parser.hpp"
#include "wasmlite/validator.hpp"

using namespace wasmlite;

namespace {

ValidatedModule compile(const std::string& text, Features features = {}) {
    ParseResult pr = parse_module(text);
    if (!pr.ok()) {
        CAPTURE(pr.errors[0].message);
        REQUIRE(pr.ok());
    }
    ValidateResult vr = validate_module(*pr.module, features);
    if (!vr.ok()) {
        CAPTURE(vr.errors[0].message);
        REQUIRE(vr.ok());
    }
    return std::move(*vr.module);
}

Outcome run1(const std::string& text, std::string_view name, std::vector<Value> args,
             std::optional<uint64_t> fuel = std::nullopt, uint32_t max_pages = 4) {
    Instance inst = instantiate(compile(text), max_pages);
    return invoke(inst, name, args, fuel);
}

int32_t result_of(const Outcome& out) {
    REQUIRE(out.kind == Outcome::Kind::Returned);
    REQUIRE(out.values.size() == 1);
    return out.values[0].as_i32();
}

// a unary wrapper around a two-instruction arithmetic snippet
int32_t binop(const char* op, int32_t a, int32_t b) {
    std::string text = std::string("(module (func $f (export) (param i32 i32) (result i32) "
                                   "local.get 0 local.get 1 ") +
                       op + "))";
    return result_of(run1(text, "f", {Value::of_i32(a), Value::of_i32(b)}));
}

TrapKind trap_of(const Outcome& out) {
    REQUIRE(out.kind == Outcome::Kind::Trap);
    return out.trap;
}

constexpr int32_t kMin = std::numeric_limits<int32_t>::min();
constexpr int32_t kMax = std::numeric_limits<int32_t>::max();

}  // namespace

TEST_CASE("arithmetic wraps modulo 2^32") {
    CHECK(binop("i32.add", 2, 3) == 5);
    CHECK(binop("i32.add", kMax, 1) == kMin);
    CHECK(binop("i32.sub", kMin, 1) == kMax);
    CHECK(binop("i32.mul", 0x10000, 0x10000) == 0);
    CHECK(binop("i32.mul", 65537, 65537) == 131073);
    CHECK(binop("i32.and", 0x0F0F, 0x00FF) == 0x000F);
    CHECK(binop("i32.or", 0x0F00, 0x00F0) == 0x0FF0);
    CHECK(binop("i32.xor", -1, 0x0F) == ~0x0F);
}

TEST_CASE("division edges") {
    CHECK(binop("i32.div_s", 7, 2) == 3);
    CHECK(binop("i32.div_s", -7, 2) == -3);  // truncates toward zero
    CHECK(binop("i32.rem_s", 7, 2) == 1);
    CHECK(binop("i32.rem_s", -7, 2) == -1);
    CHECK(binop("i32.rem_s", kMin, -1) == 0);  // the one non-trapping overflow case

    std::string div = "(module (func $f (export) (param i32 i32) (result i32) local.get 0 "
                      "local.get 1 i32.div_s))";
    CHECK(trap_of(run1(div, "f", {Value::of_i32(1), Value::of_i32(0)})) == TrapKind::DivByZero);
    CHECK(trap_of(run1(div, "f", {Value::of_i32(kMin), Value::of_i32(-1)})) ==
          TrapKind::IntOverflow);
    std::string rem = "(module (func $f (export) (param i32 i32) (result i32) local.get 0 "
                      "local.get 1 i32.rem_s))";
    CHECK(trap_of(run1(rem, "f", {Value::of_i32(5), Value::of_i32(0)})) == TrapKind::DivByZero);
}

TEST_CASE("shifts mask the count") {
    CHECK(binop("i32.shl", 1, 4) == 16);
    CHECK(binop("i32.shl", 1, 33) == 2);
    CHECK(binop("i32.shr_u", -1, 28) == 15);
    CHECK(binop("i32.shr_u", 16, 36) == 1);
}

TEST_CASE("comparisons push 0 or 1") {
    CHECK(binop("i32.eq", 4, 4) == 1);
    CHECK(binop("i32.eq", 4, 5) == 0);
    CHECK(binop("i32.ne", 4, 5) == 1);
    CHECK(binop("i32.lt_s", -1, 0) == 1);
    CHECK(binop("i32.lt_u", -1, 0) == 0);  // 0xFFFFFFFF is large unsigned
    CHECK(binop("i32.lt_u", 0, -1) == 1);
    CHECK(binop("i32.le_s", 3, 3) == 1);
    CHECK(binop("i32.le_s", 4, 3) == 0);

    std::string eqz = "(module (func $f (export) (param i32) (result i32) local.get 0 i32.eqz))";
    CHECK(result_of(run1(eqz, "f", {Value::of_i32(0)})) == 1);
    CHECK(result_of(run1(eqz, "f", {Value::of_i32(7)})) == 0);
}

TEST_CASE("select picks by condition") {
    std::string text = "(module (func $f (export) (param i32) (result i32) i32.const 11 "
                       "i32.const 22 local.get 0 select))";
    CHECK(result_of(run1(text, "f", {Value::of_i32(1)})) == 11);
    CHECK(result_of(run1(text, "f", {Value::of_i32(0)})) == 22);
    CHECK(result_of(run1(text, "f", {Value::of_i32(-9)})) == 11);
}

TEST_CASE("locals") {
    std::string tee = "(module (func $f (export) (param i32) (result i32) (local i32) local.get "
                      "0 local.tee 1 local.get 1 i32.add))";
    CHECK(result_of(run1(tee, "f", {Value::of_i32(21)})) == 42);
    // declared locals start at zero
    std::string zero = "(module (func $f (export) (result i32) (local i32) local.get 0))";
    CHECK(result_of(run1(zero, "f", {})) == 0);
}

TEST_CASE("globals persist across invocations of one instance") {
    Instance inst = instantiate(
        compile("(module (global $n (mut i32) (i32.const 40)) (func $bump (export) (result i32) "
                "global.get $n i32.const 1 i32.add global.set $n global.get $n))"),
        4);
    CHECK(result_of(invoke(inst, "bump", {})) == 41);
    CHECK(result_of(invoke(inst, "bump", {})) == 42);
    // a fresh instance starts over
    Instance inst2 = instantiate(inst.module, 4);
    CHECK(result_of(invoke(inst2, "bump", {})) == 41);
}

TEST_CASE("memory load and store are little-endian") {
    std::string text =
        "(module (memory 1) (func $f (export) (result i32) i32.const 8 i32.const 0x01020304 "
        "i32.store i32.const 8 i32.load))";
    Instance inst = instantiate(compile(text), 4);
    CHECK(result_of(invoke(inst, "f", {})) == 0x01020304);
    CHECK(inst.store.memory[8] == 0x04);
    CHECK(inst.store.memory[9] == 0x03);
    CHECK(inst.store.memory[10] == 0x02);
    CHECK(inst.store.memory[11] == 0x01);
}

TEST_CASE("memory bounds") {
    std::string load = "(module (memory 1) (func $f (export) (param i32) (result i32) local.get "
                       "0 i32.load))";
    CHECK(result_of(run1(load, "f", {Value::of_i32(65532)})) == 0);
    CHECK(trap_of(run1(load, "f", {Value::of_i32(65533)})) == TrapKind::OobMemory);
    CHECK(trap_of(run1(load, "f", {Value::of_i32(-4)})) == TrapKind::OobMemory);
    std::string store = "(module (memory 1) (func $f (export) (param i32) local.get 0 i32.const "
                        "1 i32.store))";
    CHECK(trap_of(run1(store, "f", {Value::of_i32(65533)})) == TrapKind::OobMemory);
}

TEST_CASE("memory size and grow") {
    std::string text =
        "(module (memory 1) (func $size (export) (result i32) memory.size) (func $grow (export) "
        "(param i32) (result i32) local.get 0 memory.grow))";
    Instance inst = instantiate(compile(text), 3);
    CHECK(result_of(invoke(inst, "size", {})) == 1);
    CHECK(result_of(invoke(inst, "grow", {Value::of_i32(1)})) == 1);  // old page count
    CHECK(result_of(invoke(inst, "size", {})) == 2);
    CHECK(inst.store.memory.size() == 2 * kPageSize);
    CHECK(inst.store.memory[2 * kPageSize - 1] == 0);
    // past max_pages: -1, size unchanged
    CHECK(result_of(invoke(inst, "grow", {Value::of_i32(2)})) == -1);
    CHECK(result_of(invoke(inst, "size", {})) == 2);
    CHECK(result_of(invoke(inst, "grow", {Value::of_i32(-1)})) == -1);  // huge unsigned delta
}

TEST_CASE("unreachable traps") {
    CHECK(trap_of(run1("(module (func $f (export) unreachable))", "f", {})) ==
          TrapKind::Unreachable);
}

TEST_CASE("blocks, branches, and loops") {
    // br to the function body returns
    CHECK(result_of(run1("(module (func $f (export) (result i32) i32.const 7 br 0))", "f", {})) ==
          7);
    // br skips the rest of the block
    CHECK(result_of(run1("(module (func $f (export) (result i32) block (result i32) i32.const 1 "
                         "br 0 drop i32.const 2 end))",
                         "f", {})) == 1);
    // br_if falls through on zero
    std::string brif = "(module (func $f (export) (param i32) (result i32) block (result i32) "
                       "i32.const 10 local.get 0 br_if 0 drop i32.const 20 end))";
    CHECK(result_of(run1(brif, "f", {Value::of_i32(1)})) == 10);
    CHECK(result_of(run1(brif, "f", {Value::of_i32(0)})) == 20);
    // loop: sum 1..4 by branching back
    std::string sum =
        "(module (func $f (export) (param i32) (result i32) (local i32)\n"
        "  block loop local.get 0 i32.eqz br_if 1 local.get 1 local.get 0 i32.add local.set 1\n"
        "  local.get 0 i32.const 1 i32.sub local.set 0 br 0 end end local.get 1))";
    CHECK(result_of(run1(sum, "f", {Value::of_i32(4)})) == 10);
    // loop fall-through carries its result
    CHECK(result_of(run1("(module (func $f (export) (result i32) loop (result i32) i32.const 3 "
                         "end))",
                         "f", {})) == 3);
    // nested blocks, br 1 exits both
    CHECK(result_of(run1("(module (func $f (export) (result i32) block (result i32) block "
                         "i32.const 5 br 1 end i32.const 6 end))",
                         "f", {})) == 5);
}

TEST_CASE("if picks an arm") {
    std::string text = "(module (func $f (export) (param i32) (result i32) local.get 0 if "
                       "(result i32) i32.const 1 else i32.const 2 end))";
    CHECK(result_of(run1(text, "f", {Value::of_i32(5)})) == 1);
    CHECK(result_of(run1(text, "f", {Value::of_i32(0)})) == 2);
    // missing else arm behaves as an empty arm
    std::string noelse = "(module (func $f (export) (param i32) (result i32) local.get 0 if nop "
                         "end i32.const 9))";
    CHECK(result_of(run1(noelse, "f", {Value::of_i32(1)})) == 9);
    CHECK(result_of(run1(noelse, "f", {Value::of_i32(0)})) == 9);
}

TEST_CASE("calls pass arguments in order") {
    std::string text =
        "(module (func $sub (param i32 i32) (result i32) local.get 0 local.get 1 i32.sub)\n"
        "  (func $f (export) (result i32) i32.const 10 i32.const 3 call $sub))";
    CHECK(result_of(run1(text, "f", {})) == 7);
}

TEST_CASE("factorial") {
    std::string text =
        "(module (func $factorial (export) (param i32) (result i32) (local i32)\n"
        "  i32.const 1 local.set 1\n"
        "  block loop local.get 0 i32.const 0 i32.le_s br_if 1\n"
        "    local.get 1 local.get 0 i32.mul local.set 1\n"
        "    local.get 0 i32.const 1 i32.sub local.set 0 br 0 end end\n"
        "  local.get 1))";
    CHECK(result_of(run1(text, "factorial", {Value::of_i32(10)})) == 3628800);
    CHECK(result_of(run1(text, "factorial", {Value::of_i32(0)})) == 1);
}

TEST_CASE("recursion exhausts the call stack") {
    std::string text = "(module (func $f (export) (result i32) call $f))";
    Instance inst = instantiate(compile(text), 4);
    Outcome out = invoke(inst, "f", {}, std::nullopt, /*call_depth_limit=*/100);
    CHECK(trap_of(out) == TrapKind::CallStackExhausted);
    // mutual recursion too
    std::string text2 = "(module (func $a (export) (result i32) call $b) (func $b (result i32) "
                        "call $a))";
    CHECK(trap_of(run1(text2, "a", {}, 100000)) == TrapKind::CallStackExhausted);
}

TEST_CASE("fuel is linear and checked before dispatch") {
    std::string add = "(module (func $f (export) (param i32 i32) (result i32) local.get 0 "
                      "local.get 1 i32.add))";
    std::vector<Value> args{Value::of_i32(2), Value::of_i32(3)};
    // 3 instructions + the frame-return step = 4 units of fuel
    for (uint64_t fuel = 0; fuel < 4; ++fuel) {
        Instance inst = instantiate(compile(add), 4);
        Outcome out = invoke(inst, "f", args, fuel);
        CAPTURE(fuel);
        CHECK(out.kind == Outcome::Kind::FuelExhausted);
    }
    Instance inst = instantiate(compile(add), 4);
    CHECK(result_of(invoke(inst, "f", args, 4)) == 5);
}

TEST_CASE("trace records only non-terminal steps") {
    std::string add = "(module (func $f (export) (param i32 i32) (result i32) local.get 0 "
                      "local.get 1 i32.add))";
    Instance inst = instantiate(compile(add), 4);
    TraceResult tr = trace(inst, "f", {Value::of_i32(2), Value::of_i32(3)}, 1000);
    REQUIRE(tr.outcome.kind == Outcome::Kind::Returned);
    REQUIRE(tr.records.size() == 3);
    CHECK(format_trace_record(tr.records[0]) == "#0 depth=1 local.get 0 -> [2]");
    CHECK(format_trace_record(tr.records[1]) == "#1 depth=1 local.get 1 -> [2 3]");
    CHECK(format_trace_record(tr.records[2]) == "#2 depth=1 i32.add -> [5]");

    // truncated fuel truncates the trace, never past the limit
    Instance inst2 = instantiate(compile(add), 4);
    TraceResult tr2 = trace(inst2, "f", {Value::of_i32(2), Value::of_i32(3)}, 1);
    CHECK(tr2.outcome.kind == Outcome::Kind::FuelExhausted);
    CHECK(tr2.records.size() == 1);
}

TEST_CASE("trace shows at most eight stack values") {
    std::string text = "(module (func $f (export) i32.const 1 i32.const 2 i32.const 3 i32.const "
                       "4 i32.const 5 i32.const 6 i32.const 7 i32.const 8 i32.const 9 drop drop "
                       "drop drop drop drop drop drop drop))";
    Instance inst = instantiate(compile(text), 4);
    TraceResult tr = trace(inst, "f", {}, 1000);
    REQUIRE(tr.outcome.kind == Outcome::Kind::Returned);
    const TraceRecord& wide = tr.records[8];  // after the ninth push
    CHECK(wide.truncated);
    CHECK(wide.value_stack_after.size() == 8);
    std::string line = format_trace_record(wide);
    CHECK(line.find("[... 2 3 4 5 6 7 8 9]") != std::string::npos);
}

TEST_CASE("manual stepping exposes frame depth") {
    std::string text = "(module (func $g (result i32) i32.const 4) (func $f (export) (result "
                       "i32) call $g))";
    Instance inst = instantiate(compile(text), 4);
    Config cfg = make_invoke_config(inst, "f", {});
    bool saw_depth2 = false;
    StepInfo info;
    std::optional<Outcome> out;
    for (int i = 0; i < 100 && !out; ++i) {
        out = step(cfg, &info);
        if (info.frame_depth == 2) saw_depth2 = true;
    }
    REQUIRE(out.has_value());
    CHECK(result_of(*out) == 4);
    CHECK(saw_depth2);
}

TEST_CASE("engine usage errors") {
    std::string text = "(module (func $f (export) (param i32)) (func $hidden))";
    Instance inst = instantiate(compile(text), 4);
    CHECK_THROWS_AS((void)invoke(inst, "nope", {}), EngineError);
    CHECK_THROWS_AS((void)invoke(inst, "hidden", {}), EngineError);
    CHECK_THROWS_AS((void)invoke(inst, "f", {}), EngineError);  // arity
    CHECK_THROWS_AS(
        (void)instantiate(compile("(module (memory 8) (func $f (export)))"), /*max_pages=*/4),
        EngineError);
}

TEST_CASE("instances are isolated") {
    ValidatedModule vm = compile(
        "(module (memory 1) (func $poke (export) i32.const 0 i32.const 77 i32.store) (func "
        "$peek (export) (result i32) i32.const 0 i32.load))");
    Instance a = instantiate(vm, 4);
    Instance b = instantiate(vm, 4);
    REQUIRE(invoke(a, "poke", {}).kind == Outcome::Kind::Returned);
    CHECK(result_of(invoke(a, "peek", {})) == 77);
    CHECK(result_of(invoke(b, "peek", {})) == 0);
}

TEST_CASE("zero-result functions return no values") {
    Outcome out = run1("(module (func $f (export) nop))", "f", {});
    REQUIRE(out.kind == Outcome::Kind::Returned);
    CHECK(out.values.empty());
}

TEST_CASE("return pops intermediate state") {
    CHECK(result_of(run1("(module (func $f (export) (result i32) block i32.const 3 return end "
                         "i32.const 4))",
                         "f", {})) == 3);
}
