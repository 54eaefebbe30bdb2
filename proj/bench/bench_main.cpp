// wasmlite: a distilled WebAssembly
// SPDX-License-Identifier: Apache-2.0
//
// Times the serial reference drivers against the OpenMP ones on identical
// workloads and checks that both produce byte-identical reports.
#include <chrono>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "wasmlite/alloc.hpp"
#include "wasmlite/fuzz.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

template <typename F>
double time_ms(F&& f) {
    auto t0 = std::chrono::steady_clock::now();
    f();
    auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

void report_pair(const char* name, double serial_ms, double parallel_ms, bool match) {
    std::cout << name << ": serial " << serial_ms << " ms, parallel " << parallel_ms
              << " ms, speedup " << (parallel_ms > 0 ? serial_ms / parallel_ms : 0.0) << "x, "
              << (match ? "reports match" : "REPORTS DIFFER") << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wasmlite_bench: serial vs parallel driver comparison"};
    uint64_t fuzz_n = 2000;
    uint64_t alloc_scripts = 20;
    uint32_t alloc_ops = 1000;
    std::string allocator_path = std::string(WASMLITE_CORPUS_DIR) + "/alloc.wml";
    app.add_option("--fuzz-n", fuzz_n, "fuzz cases per driver");
    app.add_option("--alloc-scripts", alloc_scripts, "stress scripts per driver");
    app.add_option("--alloc-ops", alloc_ops, "ops per stress script");
    app.add_option("--allocator", allocator_path, "allocator module");
    CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
    std::cout << "openmp: " << omp_get_max_threads() << " thread(s)\n";
#else
    std::cout << "openmp: not enabled, parallel drivers fall back to serial\n";
#endif

    bool all_match = true;

    {
        wasmlite::GenConfig cfg;
        wasmlite::FuzzOptions opts;
        wasmlite::FuzzReport serial, parallel;
        double ts = time_ms([&] { serial = wasmlite::fuzz_soundness_serial(fuzz_n, cfg, opts); });
        double tp = time_ms([&] { parallel = wasmlite::fuzz_soundness(fuzz_n, cfg, opts); });
        bool match = serial.to_kv() == parallel.to_kv();
        all_match = all_match && match;
        report_pair("fuzz", ts, tp, match);
        if (!serial.sound()) std::cout << "  note: fuzz found failures\n" << serial.to_text();
    }

    try {
        wasmlite::ValidatedModule vm = wasmlite::load_allocator(allocator_path);
        wasmlite::AllocStressReport serial, parallel;
        double ts = time_ms([&] {
            serial = wasmlite::alloc_stress_serial(vm, alloc_scripts, alloc_ops, 1, 256, 0.4);
        });
        double tp = time_ms(
            [&] { parallel = wasmlite::alloc_stress(vm, alloc_scripts, alloc_ops, 1, 256, 0.4); });
        bool match = serial.to_kv() == parallel.to_kv();
        all_match = all_match && match;
        report_pair("alloc", ts, tp, match);
        if (!serial.ok()) std::cout << "  note: stress found failures\n" << serial.to_text();
    } catch (const std::exception& e) {
        std::cout << "alloc: skipped (" << e.what() << ")\n";
    }

    return all_match ? 0 : 1;
}
