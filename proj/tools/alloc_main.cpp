// wasmlite: a distilled WebAssembly
// SPDX-License-Identifier: Apache-2.0
//
// Driver for allocator modules: generate workload scripts, run one script
// with full shadow-heap checking, or run a parallel stress batch.
// Exit codes: 0 clean, 1 violations or traps, 2 validation error,
// 3 parse/script error, 6 usage error.
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "wasmlite/alloc.hpp"

namespace {

std::optional<std::string> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wasmlite-alloc: shadow-heap harness for allocator modules"};
    app.require_subcommand(1);

    std::string allocator_path;
    std::string script_path;
    uint64_t seed = 0;
    uint32_t n_ops = 1000;
    uint32_t size_min = 1;
    uint32_t size_max = 256;
    double free_prob = 0.4;

    CLI::App* gen_cmd = app.add_subcommand("gen", "print a random malloc/free script");
    gen_cmd->add_option("--seed", seed, "script seed");
    gen_cmd->add_option("--ops", n_ops, "number of ops");
    gen_cmd->add_option("--size-min", size_min, "smallest malloc size");
    gen_cmd->add_option("--size-max", size_max, "largest malloc size");
    gen_cmd->add_option("--free-prob", free_prob, "probability an op frees a live block");

    CLI::App* run_cmd = app.add_subcommand("run", "run one script with shadow checking");
    uint32_t max_pages = 16;
    bool quiet = false;
    run_cmd->add_option("allocator", allocator_path, "allocator module")->required();
    run_cmd->add_option("script", script_path, "script file")->required();
    run_cmd->add_option("--max-pages", max_pages, "memory growth limit in pages");
    run_cmd->add_flag("--quiet", quiet, "suppress per-op results");

    CLI::App* stress_cmd = app.add_subcommand("stress", "run a batch of generated scripts");
    uint64_t n_scripts = 100;
    bool serial = false;
    bool kv = false;
    stress_cmd->add_option("allocator", allocator_path, "allocator module")->required();
    stress_cmd->add_option("--scripts", n_scripts, "number of scripts");
    stress_cmd->add_option("--ops", n_ops, "ops per script");
    stress_cmd->add_option("--size-min", size_min, "smallest malloc size");
    stress_cmd->add_option("--size-max", size_max, "largest malloc size");
    stress_cmd->add_option("--free-prob", free_prob, "probability an op frees a live block");
    stress_cmd->add_option("--seed", seed, "base seed");
    stress_cmd->add_flag("--serial", serial, "single-threaded driver");
    stress_cmd->add_flag("--kv", kv, "machine-readable key=value report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 6;
    }

    try {
        if (gen_cmd->parsed()) {
            std::cout << wasmlite::print_alloc_script(
                wasmlite::gen_alloc_script(seed, n_ops, size_min, size_max, free_prob));
            return 0;
        }

        if (run_cmd->parsed()) {
            wasmlite::ValidatedModule vm = wasmlite::load_allocator(allocator_path);
            std::optional<std::string> text = read_file(script_path);
            if (!text) {
                std::cerr << "error: cannot open '" << script_path << "'\n";
                return 3;
            }
            std::string err;
            std::optional<wasmlite::AllocScript> script =
                wasmlite::parse_alloc_script(*text, &err);
            if (!script) {
                std::cerr << script_path << ": " << err << "\n";
                return 3;
            }
            wasmlite::Instance inst = wasmlite::instantiate(vm, max_pages);
            wasmlite::AllocReport rep = wasmlite::run_script(inst, *script);
            if (!quiet) {
                for (size_t i = 0; i < rep.results.size(); ++i) {
                    const wasmlite::AllocOp& op = script->ops[i];
                    if (op.is_malloc)
                        std::cout << "malloc " << op.size << " " << op.id << " -> "
                                  << rep.results[i] << "\n";
                    else
                        std::cout << "free " << op.id << "\n";
                }
            }
            std::cout << "ops: " << rep.results.size() << "/" << script->ops.size()
                      << ", peak heap: " << rep.peak_heap << " bytes\n";
            for (const wasmlite::AllocViolation& v : rep.violations)
                std::cout << "violation at op " << v.op_index << ": " << v.invariant << "\n";
            return rep.ok() ? 0 : 1;
        }

        if (stress_cmd->parsed()) {
            wasmlite::ValidatedModule vm = wasmlite::load_allocator(allocator_path);
            wasmlite::AllocStressReport rep =
                serial ? wasmlite::alloc_stress_serial(vm, n_scripts, n_ops, size_min, size_max,
                                                       free_prob, seed)
                       : wasmlite::alloc_stress(vm, n_scripts, n_ops, size_min, size_max,
                                                free_prob, seed);
            std::cout << (kv ? rep.to_kv() : rep.to_text());
            return rep.ok() ? 0 : 1;
        }
    } catch (const wasmlite::EngineError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 6;
    }
    return 6;
}
