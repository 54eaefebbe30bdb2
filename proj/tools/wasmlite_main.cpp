// wasmlite: a distilled WebAssembly
// SPDX-License-Identifier: Apache-2.0
//
// Exit codes: 0 returned/ok, 1 trap, 2 validation error, 3 parse error,
// 4 uncaught exception, 5 fuel exhausted, 6 usage error.
#include <charconv>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "wasmlite/fuzz.hpp"
#include "wasmlite/interpreter.hpp"
#include "wasmlite/parser.hpp"
#include "wasmlite/printer.hpp"
#include "wasmlite/validator.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitTrap = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitParse = 3;
constexpr int kExitException = 4;
constexpr int kExitFuel = 5;
constexpr int kExitUsage = 6;

std::optional<std::string> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Parses the file, printing diagnostics to stderr. nullopt means exit(3).
std::optional<wasmlite::ModuleAst> parse_file(const std::string& path) {
    std::optional<std::string> text = read_file(path);
    if (!text) {
        std::cerr << "error: cannot open '" << path << "'\n";
        return std::nullopt;
    }
    wasmlite::ParseResult pr = wasmlite::parse_module(*text);
    if (!pr.ok()) {
        for (const wasmlite::ParseError& e : pr.errors)
            std::cerr << path << ":" << e.pos.line << ":" << e.pos.col << ": error: " << e.message
                      << "\n";
        return std::nullopt;
    }
    return std::move(pr.module);
}

// Validates, printing diagnostics to stderr. nullopt means exit(2).
std::optional<wasmlite::ValidatedModule> validate(const std::string& path,
                                                  const wasmlite::ModuleAst& m,
                                                  bool enable_exceptions) {
    wasmlite::Features features;
    features.exceptions = enable_exceptions;
    wasmlite::ValidateResult vr = wasmlite::validate_module(m, features);
    if (!vr.ok()) {
        for (const wasmlite::ValidationError& e : vr.errors)
            std::cerr << path << ":" << e.pos.line << ":" << e.pos.col << ": "
                      << wasmlite::error_kind_name(e.kind) << ": " << e.message << "\n";
        return std::nullopt;
    }
    return std::move(vr.module);
}

// Accepts the language's integer literal forms: optional sign, decimal or
// 0x hex; signless values up to 2^32-1 wrap.
std::optional<wasmlite::Value> parse_arg(const std::string& s) {
    std::string_view v = s;
    bool neg = false;
    bool has_sign = false;
    if (!v.empty() && (v[0] == '+' || v[0] == '-')) {
        neg = v[0] == '-';
        has_sign = true;
        v.remove_prefix(1);
    }
    int base = 10;
    if (v.size() > 2 && v[0] == '0' && (v[1] == 'x' || v[1] == 'X')) {
        base = 16;
        v.remove_prefix(2);
    }
    if (v.empty()) return std::nullopt;
    uint64_t mag = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), mag, base);
    if (ec != std::errc() || ptr != v.data() + v.size()) return std::nullopt;
    if (has_sign) {
        if (mag > (neg ? 0x80000000ull : 0x7FFFFFFFull)) return std::nullopt;
        uint32_t bits = neg ? static_cast<uint32_t>(~mag + 1) : static_cast<uint32_t>(mag);
        return wasmlite::Value{bits};
    }
    if (mag > 0xFFFFFFFFull) return std::nullopt;
    return wasmlite::Value{static_cast<uint32_t>(mag)};
}

int print_outcome(const wasmlite::Outcome& out) {
    switch (out.kind) {
        case wasmlite::Outcome::Kind::Returned:
            if (out.values.empty()) {
                std::cout << "result: (none)\n";
            } else {
                std::cout << "result:";
                for (wasmlite::Value v : out.values) std::cout << " " << v.as_i32();
                std::cout << "\n";
            }
            return kExitOk;
        case wasmlite::Outcome::Kind::Trap:
            std::cout << "trap: " << wasmlite::trap_kind_name(out.trap) << "\n";
            return kExitTrap;
        case wasmlite::Outcome::Kind::UncaughtException:
            std::cerr << "exception: " << out.payload.as_i32() << "\n";
            return kExitException;
        case wasmlite::Outcome::Kind::FuelExhausted:
            std::cerr << "fuel exhausted\n";
            return kExitFuel;
    }
    return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wasmlite: parse, validate, and run wasmlite modules"};
    app.require_subcommand(1);

    std::string file;
    bool enable_exceptions = false;

    CLI::App* parse_cmd = app.add_subcommand("parse", "parse a module and print it back");
    parse_cmd->add_option("file", file, "module file")->required();

    CLI::App* validate_cmd = app.add_subcommand("validate", "validate a module");
    validate_cmd->add_option("file", file, "module file")->required();
    validate_cmd->add_flag("--enable-exceptions", enable_exceptions, "allow throw and try/catch");

    CLI::App* run_cmd = app.add_subcommand("run", "invoke an exported function");
    std::string invoke_name;
    std::vector<std::string> raw_args;
    uint64_t fuel = 0;
    uint32_t max_pages = 16;
    uint32_t call_depth = 1000;
    bool want_trace = false;
    run_cmd->add_option("file", file, "module file")->required();
    run_cmd->add_option("--invoke", invoke_name, "exported function name")->required();
    run_cmd->add_option("args", raw_args, "i32 arguments (use -- before negatives)");
    CLI::Option* fuel_opt = run_cmd->add_option("--fuel", fuel, "max steps (default unlimited)");
    run_cmd->add_option("--max-pages", max_pages, "memory growth limit in pages");
    run_cmd->add_option("--call-depth", call_depth, "call stack frame limit");
    run_cmd->add_flag("--trace", want_trace, "print one line per step");
    run_cmd->add_flag("--enable-exceptions", enable_exceptions, "allow throw and try/catch");

    CLI::App* fuzz_cmd = app.add_subcommand("fuzz", "run the soundness fuzzer");
    uint64_t fuzz_n = 1000;
    wasmlite::GenConfig gen_cfg;
    bool no_mutants = false;
    bool no_trace_check = false;
    bool serial = false;
    bool kv = false;
    fuzz_cmd->add_option("--n", fuzz_n, "number of cases");
    fuzz_cmd->add_option("--seed", gen_cfg.seed, "base seed");
    fuzz_cmd->add_option("--fuel", gen_cfg.fuel, "fuel per invocation");
    fuzz_cmd->add_option("--max-funcs", gen_cfg.max_funcs, "max functions per module");
    fuzz_cmd->add_option("--max-body-len", gen_cfg.max_body_len, "instruction budget per body");
    fuzz_cmd->add_option("--max-block-depth", gen_cfg.max_block_depth, "max block nesting");
    fuzz_cmd->add_flag("--no-exceptions", "generate without throw/try");
    fuzz_cmd->add_flag("--no-memory", "generate without a memory");
    fuzz_cmd->add_flag("--no-mutants", no_mutants, "skip the mutation stage");
    fuzz_cmd->add_flag("--no-trace-check", no_trace_check, "skip the trace differential");
    fuzz_cmd->add_flag("--serial", serial, "single-threaded driver");
    fuzz_cmd->add_flag("--kv", kv, "machine-readable key=value report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (parse_cmd->parsed()) {
            std::optional<wasmlite::ModuleAst> m = parse_file(file);
            if (!m) return kExitParse;
            std::cout << wasmlite::print_module(*m);
            return kExitOk;
        }

        if (validate_cmd->parsed()) {
            std::optional<wasmlite::ModuleAst> m = parse_file(file);
            if (!m) return kExitParse;
            if (!validate(file, *m, enable_exceptions)) return kExitInvalid;
            std::cout << "OK\n";
            return kExitOk;
        }

        if (run_cmd->parsed()) {
            std::optional<wasmlite::ModuleAst> m = parse_file(file);
            if (!m) return kExitParse;
            std::optional<wasmlite::ValidatedModule> vm = validate(file, *m, enable_exceptions);
            if (!vm) return kExitInvalid;

            std::vector<wasmlite::Value> args;
            for (const std::string& raw : raw_args) {
                std::optional<wasmlite::Value> v = parse_arg(raw);
                if (!v) {
                    std::cerr << "error: bad i32 argument '" << raw << "'\n";
                    return kExitUsage;
                }
                args.push_back(*v);
            }
            std::optional<uint64_t> fuel_limit;
            if (fuel_opt->count() > 0) fuel_limit = fuel;

            wasmlite::Instance inst = wasmlite::instantiate(std::move(*vm), max_pages);
            if (want_trace) {
                wasmlite::TraceResult tr = wasmlite::trace(
                    inst, invoke_name, args, fuel_limit.value_or(UINT64_MAX), call_depth);
                for (const wasmlite::TraceRecord& rec : tr.records)
                    std::cout << wasmlite::format_trace_record(rec) << "\n";
                return print_outcome(tr.outcome);
            }
            return print_outcome(wasmlite::invoke(inst, invoke_name, args, fuel_limit, call_depth));
        }

        if (fuzz_cmd->parsed()) {
            gen_cfg.enable_exceptions = fuzz_cmd->count("--no-exceptions") == 0;
            gen_cfg.enable_memory = fuzz_cmd->count("--no-memory") == 0;
            wasmlite::FuzzOptions opts;
            opts.base_seed = gen_cfg.seed;
            opts.run_mutants = !no_mutants;
            opts.check_trace = !no_trace_check;
            wasmlite::FuzzReport rep = serial
                                           ? wasmlite::fuzz_soundness_serial(fuzz_n, gen_cfg, opts)
                                           : wasmlite::fuzz_soundness(fuzz_n, gen_cfg, opts);
            std::cout << (kv ? rep.to_kv() : rep.to_text());
            return rep.sound() ? kExitOk : kExitTrap;
        }
    } catch (const wasmlite::EngineError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
