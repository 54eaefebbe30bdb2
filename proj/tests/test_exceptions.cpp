// wasmlite: a distilled WebAssembly
// SPDX-License-Identifier: Apache-2.0
#include <string>

#include "doctest.h"
#include "wasmlite/interpreter.hpp"
#include "wasmlite/parser.hpp"
#include "wasmlite/validator.hpp"

using namespace wasmlite;

namespace {

ValidatedModule compile_exc(const std::string& text) {
    ParseResult pr = parse_module(text);
    if (!pr.ok()) {
        CAPTURE(pr.errors[0].message);
        REQUIRE(pr.ok());
    }
    Features features;
    features.exceptions = true;
    ValidateResult vr = validate_module(*pr.module, features);
    if (!vr.ok()) {
        CAPTURE(vr.errors[0].message);
        REQUIRE(vr.ok());
    }
    return std::move(*vr.module);
}

Outcome run1(const std::string& text, std::string_view name, std::vector<Value> args = {},
             std::optional<uint64_t> fuel = std::nullopt) {
    Instance inst = instantiate(compile_exc(text), 4);
    return invoke(inst, name, args, fuel);
}

int32_t result_of(const Outcome& out) {
    REQUIRE(out.kind == Outcome::Kind::Returned);
    REQUIRE(out.values.size() == 1);
    return out.values[0].as_i32();
}

}  // namespace

TEST_CASE("uncaught throw surfaces the payload") {
    Outcome out = run1("(module (func $f (export) i32.const 42 throw))", "f");
    REQUIRE(out.kind == Outcome::Kind::UncaughtException);
    CHECK(out.payload.as_i32() == 42);
}

TEST_CASE("try/catch in one frame") {
    CHECK(result_of(run1("(module (func $f (export) (result i32) try (result i32) i32.const 42 "
                         "throw catch i32.const 1 i32.add end))",
                         "f")) == 43);
    // no throw: the catch arm never runs
    CHECK(result_of(run1("(module (func $f (export) (result i32) try (result i32) i32.const 7 "
                         "catch i32.const 99 i32.add end))",
                         "f")) == 7);
}

TEST_CASE("unwinding discards the operand stack above the try") {
    CHECK(result_of(run1("(module (func $f (export) (result i32) try (result i32) i32.const 99 "
                         "i32.const 1 throw catch end))",
                         "f")) == 1);
}

TEST_CASE("throw escapes nested blocks to the nearest try") {
    CHECK(result_of(run1("(module (func $f (export) (result i32) try (result i32) block loop "
                         "i32.const 5 throw end end i32.const 0 catch end))",
                         "f")) == 5);
}

TEST_CASE("a throw in a catch arm goes to the enclosing try") {
    CHECK(result_of(run1("(module (func $f (export) (result i32)\n"
                         "  try (result i32)\n"
                         "    try (result i32) i32.const 1 throw catch i32.const 1 i32.add throw "
                         "end\n"
                         "  catch i32.const 10 i32.add end))",
                         "f")) == 12);
}

TEST_CASE("unwinding crosses call frames") {
    std::string text =
        "(module\n"
        "  (func $risky (param i32) (result i32) local.get 0 i32.eqz if i32.const 42 throw end "
        "local.get 0)\n"
        "  (func $guarded (export) (param i32) (result i32) try (result i32) local.get 0 call "
        "$risky catch i32.const 1 i32.add end))";
    CHECK(result_of(run1(text, "guarded", {Value::of_i32(0)})) == 43);
    CHECK(result_of(run1(text, "guarded", {Value::of_i32(5)})) == 5);
}

TEST_CASE("unwinding crosses several frames at once") {
    std::string text =
        "(module\n"
        "  (func $inner (result i32) i32.const 9 throw)\n"
        "  (func $mid (result i32) call $inner)\n"
        "  (func $outer (export) (result i32) try (result i32) call $mid catch end))";
    CHECK(result_of(run1(text, "outer")) == 9);
}

TEST_CASE("traps are not catchable") {
    Outcome o1 = run1("(module (func $f (export) try unreachable catch drop end))", "f");
    REQUIRE(o1.kind == Outcome::Kind::Trap);
    CHECK(o1.trap == TrapKind::Unreachable);
    Outcome o2 = run1("(module (func $f (export) (result i32) try (result i32) i32.const 1 "
                      "i32.const 0 i32.div_s catch end))",
                      "f");
    REQUIRE(o2.kind == Outcome::Kind::Trap);
    CHECK(o2.trap == TrapKind::DivByZero);
}

TEST_CASE("uncaught exceptions cross the entry frame") {
    std::string text = "(module (func $deep (result i32) i32.const -3 throw) (func $f (export) "
                       "(result i32) call $deep))";
    Outcome out = run1(text, "f");
    REQUIRE(out.kind == Outcome::Kind::UncaughtException);
    CHECK(out.payload.as_i32() == -3);
}

TEST_CASE("locals survive a caught throw in the same frame") {
    CHECK(result_of(run1("(module (func $f (export) (result i32) (local i32) i32.const 31 "
                         "local.set 0 try (result i32) i32.const 0 throw catch drop local.get 0 "
                         "end))",
                         "f")) == 31);
}

TEST_CASE("throw consumes fuel like any step") {
    std::string text = "(module (func $f (export) (result i32) try (result i32) i32.const 2 "
                       "throw catch end))";
    // steps: try, const, throw(+unwind), catch-exhausted, frame-return
    Instance inst = instantiate(compile_exc(text), 4);
    TraceResult tr = trace(inst, "f", {}, 1000);
    REQUIRE(tr.outcome.kind == Outcome::Kind::Returned);
    CHECK(result_of(tr.outcome) == 2);
    size_t throws_seen = 0;
    for (const TraceRecord& r : tr.records)
        if (r.instr.find("throw") != std::string::npos) ++throws_seen;
    CHECK(throws_seen == 1);
    uint64_t steps = tr.records.size() + 1;  // plus the terminal step
    for (uint64_t fuel = 0; fuel < steps; ++fuel) {
        Instance i2 = instantiate(compile_exc(text), 4);
        CHECK(invoke(i2, "f", {}, fuel).kind == Outcome::Kind::FuelExhausted);
    }
    Instance i3 = instantiate(compile_exc(text), 4);
    CHECK(invoke(i3, "f", {}, steps).kind == Outcome::Kind::Returned);
}

TEST_CASE("exception state does not leak between invocations") {
    std::string text = "(module (global $mode (mut i32) (i32.const 0))\n"
                       "  (func $f (export) (result i32) global.get $mode if i32.const 8 throw "
                       "end i32.const 1))";
    Instance inst = instantiate(compile_exc(text), 4);
    CHECK(result_of(invoke(inst, "f", {})) == 1);
    inst.store.globals[0] = Value::of_i32(1);
    Outcome out = invoke(inst, "f", {});
    REQUIRE(out.kind == Outcome::Kind::UncaughtException);
    CHECK(out.payload.as_i32() == 8);
    inst.store.globals[0] = Value::of_i32(0);
    CHECK(result_of(invoke(inst, "f", {})) == 1);
}
