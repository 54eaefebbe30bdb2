// wasmlite: a distilled WebAssembly
// SPDX-License-Identifier: Apache-2.0
#include <set>
#include <string>

#include "doctest.h"
#include "oracle_eval.hpp"
#include "wasmlite/fuzz.hpp"
#include "wasmlite/interpreter.hpp"
#include "wasmlite/parser.hpp"
#include "wasmlite/printer.hpp"
#include "wasmlite/validator.hpp"

using namespace wasmlite;

TEST_CASE("generation is deterministic per seed") {
    GenConfig cfg;
    cfg.seed = 7;
    CHECK(print_module(gen_module(cfg)) == print_module(gen_module(cfg)));
    GenConfig other = cfg;
    other.seed = 8;
    CHECK(print_module(gen_module(cfg)) != print_module(gen_module(other)));
}

TEST_CASE("every generated module validates") {
    GenConfig cfg;
    Features features;
    features.exceptions = cfg.enable_exceptions;
    for (uint64_t seed = 0; seed < 2000; ++seed) {
        cfg.seed = seed;
        ModuleAst m = gen_module(cfg);
        ValidateResult vr = validate_module(m, features);
        if (!vr.ok()) {
            CAPTURE(seed);
            CAPTURE(vr.errors[0].message);
            CAPTURE(print_module(m));
            REQUIRE(vr.ok());
        }
    }
}

TEST_CASE("feature flags shape the output") {
    GenConfig cfg;
    cfg.enable_exceptions = false;
    cfg.enable_memory = false;
    for (uint64_t seed = 0; seed < 300; ++seed) {
        cfg.seed = seed;
        ModuleAst m = gen_module(cfg);
        CHECK_FALSE(m.memory.has_value());
        bool bad = false;
        for (const FuncDef& f : m.funcs)
            for_each_instr(f.body, [&](const Instr& in) {
                switch (in.op) {
                    case Op::Throw:
                    case Op::TryCatch:
                    case Op::Load:
                    case Op::Store:
                    case Op::MemorySize:
                    case Op::MemoryGrow: bad = true; break;
                    default: break;
                }
            });
        CHECK_FALSE(bad);
        // still validates without the feature
        CHECK(validate_module(m).ok());
    }
}

TEST_CASE("exactly one exported entry function") {
    GenConfig cfg;
    for (uint64_t seed = 0; seed < 200; ++seed) {
        cfg.seed = seed;
        ModuleAst m = gen_module(cfg);
        REQUIRE_FALSE(m.funcs.empty());
        CHECK(m.funcs[0].exported);
        int exported = 0;
        for (const FuncDef& f : m.funcs) exported += f.exported ? 1 : 0;
        CHECK(exported == 1);
    }
}

TEST_CASE("the generator reaches every opcode") {
    GenConfig cfg;
    std::set<Op> seen;
    for (uint64_t seed = 0; seed < 10000 && seen.size() < 39; ++seed) {
        cfg.seed = seed;
        ModuleAst m = gen_module(cfg);
        for (const FuncDef& f : m.funcs)
            for_each_instr(f.body, [&](const Instr& in) { seen.insert(in.op); });
    }
    const Op all[] = {Op::Const,     Op::Add,        Op::Sub,       Op::Mul,
                      Op::DivS,      Op::RemS,       Op::And,       Op::Or,
                      Op::Xor,       Op::Shl,        Op::ShrU,      Op::Eq,
                      Op::Ne,        Op::LtS,        Op::LeS,       Op::LtU,
                      Op::Eqz,       Op::Drop,       Op::Select,    Op::LocalGet,
                      Op::LocalSet,  Op::LocalTee,   Op::GlobalGet, Op::GlobalSet,
                      Op::Load,      Op::Store,      Op::MemorySize, Op::MemoryGrow,
                      Op::Block,     Op::Loop,       Op::If,        Op::Br,
                      Op::BrIf,      Op::Return,     Op::Call,      Op::Nop,
                      Op::Unreachable, Op::Throw,    Op::TryCatch};
    for (Op op : all) {
        CAPTURE(static_cast<int>(op));
        CHECK(seen.count(op) == 1);
    }
}

TEST_CASE("mutation is deterministic and usually changes the module") {
    GenConfig cfg;
    cfg.seed = 5;
    ModuleAst m = gen_module(cfg);
    int changed = 0;
    for (uint64_t seed = 0; seed < 100; ++seed) {
        ModuleAst a = mutate_module(m, seed);
        ModuleAst b = mutate_module(m, seed);
        CHECK(structurally_equal(a, b));
        if (!structurally_equal(a, m)) ++changed;
    }
    CHECK(changed >= 90);
}

TEST_CASE("small fuzz batches are sound") {
    GenConfig cfg;
    FuzzOptions opts;
    FuzzReport rep = fuzz_soundness_serial(300, cfg, opts);
    CAPTURE(rep.to_text());
    REQUIRE(rep.sound());
    CHECK(rep.cases_run == 300);
    CHECK(rep.validated == 300);
    uint64_t outcomes = rep.returned + rep.trap_unreachable + rep.trap_div_by_zero +
                        rep.trap_int_overflow + rep.trap_oob_memory +
                        rep.trap_call_stack_exhausted + rep.uncaught_exception +
                        rep.fuel_exhausted;
    CHECK(outcomes == rep.cases_run);
    CHECK(rep.mutants_accepted + rep.mutants_rejected == rep.cases_run);
    CHECK(rep.mutants_rejected > 0);  // type-oblivious mutation mostly breaks modules
    // the histogram is not degenerate: several outcome kinds appear
    int kinds = 0;
    for (uint64_t c : {rep.returned, rep.trap_unreachable, rep.uncaught_exception,
                       rep.fuel_exhausted})
        kinds += c > 0 ? 1 : 0;
    CHECK(kinds >= 3);
}

TEST_CASE("parallel and serial drivers agree byte for byte") {
    GenConfig cfg;
    FuzzOptions opts;
    FuzzReport serial = fuzz_soundness_serial(300, cfg, opts);
    FuzzReport parallel = fuzz_soundness(300, cfg, opts);
    CHECK(serial.to_kv() == parallel.to_kv());
    FuzzReport again = fuzz_soundness(300, cfg, opts);
    CHECK(parallel.to_kv() == again.to_kv());
}

TEST_CASE("the base seed shifts the workload") {
    GenConfig cfg;
    FuzzOptions a, b;
    a.base_seed = 0;
    b.base_seed = 1000;
    CHECK(fuzz_soundness_serial(50, cfg, a).to_kv() !=
          fuzz_soundness_serial(50, cfg, b).to_kv());
}

TEST_CASE("a weakened validator is caught by the mutation stage") {
    GenConfig cfg;
    FuzzOptions opts;
    opts.validator_hooks.skip_br_depth_check = true;
    FuzzReport rep = fuzz_soundness_serial(500, cfg, opts);
    // mutants with out-of-range branch depths now pass validation and the
    // engine's internal checks must catch them at run time
    CHECK_FALSE(rep.sound());
    bool branch_failure = false;
    for (const auto& [seed, diag] : rep.assertion_failures)
        if (diag.find("internal error") != std::string::npos) branch_failure = true;
    CHECK(branch_failure);
}

TEST_CASE("engine agrees with the big-step oracle") {
    GenConfig cfg;
    Features features;
    features.exceptions = true;
    uint64_t compared = 0;
    for (uint64_t seed = 0; seed < 1500; ++seed) {
        cfg.seed = seed;
        ModuleAst m = gen_module(cfg);
        ValidateResult vr = validate_module(m, features);
        REQUIRE(vr.ok());
        const ValidatedModule& vm = *vr.module;
        std::vector<Value> args(vm.ast.funcs[0].type.param_count, Value{});

        Instance inst = instantiate(vm, 4);
        Outcome real = invoke(inst, vm.ast.funcs[0].name, args, cfg.fuel);
        if (real.kind == Outcome::Kind::FuelExhausted) continue;  // oracle has no fuel notion

        std::optional<Outcome> ref =
            oracle::eval_module(vm, vm.ast.funcs[0].name, args, cfg.fuel * 50 + 1000, 4);
        CAPTURE(seed);
        CAPTURE(print_module(m));
        REQUIRE(ref.has_value());
        bool same = *ref == real;
        if (!same) {
            CAPTURE(static_cast<int>(real.kind));
            CAPTURE(static_cast<int>(ref->kind));
        }
        REQUIRE(same);
        ++compared;
    }
    CHECK(compared > 1000);  // the skip path must not hollow the test out
}

TEST_CASE("reports serialize stably") {
    FuzzReport rep;
    rep.cases_run = 2;
    rep.validated = 2;
    rep.returned = 1;
    rep.fuel_exhausted = 1;
    rep.assertion_failures.emplace_back(17, "example diagnostic");
    std::string kv = rep.to_kv();
    CHECK(kv.find("cases_run=2\n") != std::string::npos);
    CHECK(kv.find("assertion_failures=1\n") != std::string::npos);
    CHECK(kv.find("failure_0=17:example diagnostic\n") != std::string::npos);
    CHECK(rep.to_text().find("seed 17") != std::string::npos);

    FuzzReport other;
    other.cases_run = 3;
    other.returned = 3;
    FuzzReport merged = rep;
    merged.merge(other);
    CHECK(merged.cases_run == 5);
    CHECK(merged.returned == 4);
}
