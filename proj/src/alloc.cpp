// wasmlite: a distilled WebAssembly
// SPDX-License-Identifier: Apache-2.0
#include "wasmlite/alloc.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "wasmlite/parser.hpp"
#include "wasmlite/printer.hpp"
#include "wasmlite/rng.hpp"

namespace wasmlite {

AllocScript gen_alloc_script(uint64_t seed, uint32_t n_ops, uint32_t size_min, uint32_t size_max,
                             double free_prob) {
    if (size_min == 0) size_min = 1;
    if (size_max < size_min) size_max = size_min;
    double p = std::clamp(free_prob, 0.0, 1.0);
    auto threshold = static_cast<uint32_t>(p * 1'000'000.0);

    Xorshift64Star rng(seed);
    AllocScript script;
    script.ops.reserve(n_ops);
    std::vector<uint32_t> live;
    uint32_t next_id = 0;
    for (uint32_t i = 0; i < n_ops; ++i) {
        AllocOp op;
        if (!live.empty() && rng.below(1'000'000) < threshold) {
            uint32_t j = rng.below(static_cast<uint32_t>(live.size()));
            op.is_malloc = false;
            op.id = live[j];
            live.erase(live.begin() + j);
        } else {
            op.is_malloc = true;
            op.size = size_min + rng.below(size_max - size_min + 1);
            op.id = next_id++;
            live.push_back(op.id);
        }
        script.ops.push_back(op);
    }
    return script;
}

std::string print_alloc_script(const AllocScript& script) {
    std::string s;
    for (const AllocOp& op : script.ops) {
        if (op.is_malloc)
            s += "malloc " + std::to_string(op.size) + " " + std::to_string(op.id) + "\n";
        else
            s += "free " + std::to_string(op.id) + "\n";
    }
    return s;
}

namespace {

bool parse_u32_field(std::istringstream& in, uint32_t* out) {
    std::string tok;
    if (!(in >> tok)) return false;
    uint32_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) return false;
    *out = v;
    return true;
}

}  // namespace

std::optional<AllocScript> parse_alloc_script(std::string_view text, std::string* error) {
    AllocScript script;
    size_t line_no = 0;
    size_t pos = 0;
    auto fail = [&](const std::string& msg) {
        if (error) *error = "line " + std::to_string(line_no) + ": " + msg;
        return std::nullopt;
    };
    while (pos < text.size()) {
        size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string line(text.substr(pos, eol - pos));
        pos = eol + 1;
        ++line_no;

        std::istringstream in(line);
        std::string word;
        if (!(in >> word) || word[0] == '#') continue;
        AllocOp op;
        if (word == "malloc") {
            op.is_malloc = true;
            if (!parse_u32_field(in, &op.size) || !parse_u32_field(in, &op.id))
                return fail("expected 'malloc <size> <id>'");
        } else if (word == "free") {
            op.is_malloc = false;
            if (!parse_u32_field(in, &op.id)) return fail("expected 'free <id>'");
        } else {
            return fail("unknown op '" + word + "'");
        }
        if (in >> word) return fail("trailing text '" + word + "'");
        script.ops.push_back(op);
    }
    return script;
}

namespace {

constexpr uint64_t kOpFuel = 1'000'000;
constexpr uint32_t kHeapBase = 8;

uint32_t read_le32(const std::vector<uint8_t>& mem, uint32_t addr) {
    return static_cast<uint32_t>(mem[addr]) | static_cast<uint32_t>(mem[addr + 1]) << 8 |
           static_cast<uint32_t>(mem[addr + 2]) << 16 | static_cast<uint32_t>(mem[addr + 3]) << 24;
}

struct LiveBlock {
    uint32_t id;
    uint32_t addr;
    uint32_t size;
};

// Re-checks the allocator's heap against the shadow state after each op.
class ShadowHeap {
public:
    ShadowHeap(Instance& inst, AllocReport& report) : inst_(inst), report_(report) {
        brk_index_ = *inst.module.ast.find_global("brk");
    }

    bool violate(uint32_t op_index, std::string what) {
        report_.violations.push_back({op_index, std::move(what)});
        return false;
    }

    uint32_t brk() const { return inst_.store.globals[brk_index_].bits; }

    // Safe header read: bounds-checked against the instance memory.
    bool read_header(uint32_t op, uint32_t addr, uint32_t* out) {
        const auto& mem = inst_.store.memory;
        if (addr % 4 != 0 || static_cast<uint64_t>(addr) + 4 > mem.size())
            return violate(op, "header address " + std::to_string(addr) + " out of bounds");
        *out = read_le32(mem, addr);
        return true;
    }

    bool check_malloc_result(uint32_t op, uint32_t addr, uint32_t size) {
        if (size == 0) {
            if (addr != 0) return violate(op, "malloc(0) returned " + std::to_string(addr));
            return true;
        }
        if (addr == 0) return violate(op, "malloc returned null");
        if (addr % 4 != 0) return violate(op, "misaligned address " + std::to_string(addr));
        if (addr < kHeapBase + 4 || static_cast<uint64_t>(addr) + size > brk())
            return violate(op, "block [" + std::to_string(addr) + ", +" + std::to_string(size) +
                                   ") outside the heap");
        for (const LiveBlock& b : live_) {
            if (addr < b.addr + b.size && b.addr < addr + size)
                return violate(op, "block at " + std::to_string(addr) + " overlaps live block at " +
                                       std::to_string(b.addr));
        }
        uint32_t hdr = 0;
        if (!read_header(op, addr - 4, &hdr)) return false;
        if ((hdr & 1) == 0)
            return violate(op, "header at " + std::to_string(addr - 4) + " not marked allocated");
        uint32_t capacity = (hdr & ~3u) - 4;
        if (capacity < size)
            return violate(op, "header capacity " + std::to_string(capacity) +
                                   " below requested size " + std::to_string(size));
        return true;
    }

    bool check_freed(uint32_t op, uint32_t addr) {
        if (addr == 0) return true;  // free(0) is a no-op
        uint32_t hdr = 0;
        if (!read_header(op, addr - 4, &hdr)) return false;
        if ((hdr & 1) != 0)
            return violate(op, "free left the allocated bit set at " + std::to_string(addr - 4));
        return true;
    }

    // Walks the header chain from the heap base and re-checks every live
    // block's header. Runs after every op.
    bool check_heap(uint32_t op) {
        uint32_t b = brk();
        const auto& mem = inst_.store.memory;
        if (b < kHeapBase || b % 4 != 0 || b > mem.size())
            return violate(op, "brk " + std::to_string(b) + " out of range");
        uint32_t p = kHeapBase;
        while (p < b) {
            uint32_t hdr = 0;
            if (!read_header(op, p, &hdr)) return false;
            uint32_t bsize = hdr & ~3u;
            if (bsize < 8)
                return violate(op, "block size " + std::to_string(bsize) + " below minimum at " +
                                       std::to_string(p));
            if (static_cast<uint64_t>(p) + bsize > b)
                return violate(op, "block at " + std::to_string(p) + " runs past brk");
            p += bsize;
        }
        if (p != b) return violate(op, "heap walk ended at " + std::to_string(p) + ", not brk");
        for (const LiveBlock& blk : live_) {
            if (blk.addr == 0) continue;  // null result of malloc(0)
            uint32_t hdr = 0;
            if (!read_header(op, blk.addr - 4, &hdr)) return false;
            if ((hdr & 1) == 0)
                return violate(op, "live block " + std::to_string(blk.id) +
                                       " lost its allocated bit");
            if ((hdr & ~3u) - 4 < blk.size)
                return violate(op, "live block " + std::to_string(blk.id) + " shrank below " +
                                       std::to_string(blk.size));
        }
        return true;
    }

    // A null result still defines the id: freeing it later is free(0).
    void track(uint32_t id, uint32_t addr, uint32_t size) {
        live_.push_back({id, addr, size});
    }

    // Returns the block for id and stops tracking it; nullopt when unknown.
    std::optional<LiveBlock> untrack(uint32_t id) {
        for (size_t i = 0; i < live_.size(); ++i) {
            if (live_[i].id == id) {
                LiveBlock b = live_[i];
                live_.erase(live_.begin() + i);
                return b;
            }
        }
        return std::nullopt;
    }

private:
    Instance& inst_;
    AllocReport& report_;
    uint32_t brk_index_ = 0;
    std::vector<LiveBlock> live_;
};

// Invokes one export and converts any non-return into a violation.
bool invoke_op(Instance& inst, ShadowHeap& shadow, AllocReport& report, uint32_t op_index,
               std::string_view name, uint32_t arg, uint32_t* result) {
    Outcome out = invoke(inst, name, {Value{arg}}, kOpFuel);
    switch (out.kind) {
        case Outcome::Kind::Returned:
            *result = out.values.empty() ? 0 : out.values[0].bits;
            return true;
        case Outcome::Kind::Trap:
            ++report.traps;
            shadow.violate(op_index, std::string(name) + " trapped: " +
                                         std::string(trap_kind_name(out.trap)));
            return false;
        case Outcome::Kind::UncaughtException:
            ++report.traps;
            shadow.violate(op_index, std::string(name) + " threw an exception");
            return false;
        case Outcome::Kind::FuelExhausted:
            ++report.traps;
            shadow.violate(op_index, std::string(name) + " ran out of fuel");
            return false;
    }
    return false;
}

}  // namespace

AllocReport run_script(Instance& inst, const AllocScript& script) {
    AllocReport report;
    if (!inst.module.ast.find_global("brk") || !inst.module.ast.find_func("malloc") ||
        !inst.module.ast.find_func("free"))
        throw EngineError("allocator module must define $brk, malloc, and free");
    ShadowHeap shadow(inst, report);
    report.peak_heap = shadow.brk();

    for (uint32_t i = 0; i < script.ops.size(); ++i) {
        const AllocOp& op = script.ops[i];
        uint32_t result = 0;
        if (op.is_malloc) {
            if (!invoke_op(inst, shadow, report, i, "malloc", op.size, &result)) break;
            report.results.push_back(result);
            if (!shadow.check_malloc_result(i, result, op.size)) break;
            shadow.track(op.id, result, op.size);
        } else {
            std::optional<LiveBlock> blk = shadow.untrack(op.id);
            if (!blk) {
                shadow.violate(i, "free references unknown id " + std::to_string(op.id));
                break;
            }
            if (!invoke_op(inst, shadow, report, i, "free", blk->addr, &result)) break;
            report.results.push_back(0);
            if (!shadow.check_freed(i, blk->addr)) break;
        }
        if (!shadow.check_heap(i)) break;
        report.peak_heap = std::max(report.peak_heap, shadow.brk());
    }
    return report;
}

ValidatedModule load_allocator(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw EngineError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();

    ParseResult pr = parse_module(text);
    if (!pr.ok()) {
        const ParseError& e = pr.errors[0];
        throw EngineError(path + ":" + std::to_string(e.pos.line) + ":" +
                          std::to_string(e.pos.col) + ": " + e.message);
    }
    ValidateResult vr = validate_module(*pr.module);
    if (!vr.ok()) {
        const ValidationError& e = vr.errors[0];
        throw EngineError(path + ":" + std::to_string(e.pos.line) + ":" +
                          std::to_string(e.pos.col) + ": " + std::string(error_kind_name(e.kind)) +
                          ": " + e.message);
    }
    return std::move(*vr.module);
}

void AllocStressReport::merge(AllocStressReport other) {
    scripts_run += other.scripts_run;
    ops_run += other.ops_run;
    mallocs += other.mallocs;
    frees += other.frees;
    traps += other.traps;
    peak_heap = std::max(peak_heap, other.peak_heap);
    for (auto& f : other.failures) failures.push_back(std::move(f));
}

std::string AllocStressReport::to_kv() const {
    std::string s;
    auto kv = [&s](const char* k, uint64_t v) {
        s += k;
        s += '=';
        s += std::to_string(v);
        s += '\n';
    };
    kv("scripts_run", scripts_run);
    kv("ops_run", ops_run);
    kv("mallocs", mallocs);
    kv("frees", frees);
    kv("traps", traps);
    kv("peak_heap", peak_heap);
    kv("failures", failures.size());
    for (size_t i = 0; i < failures.size(); ++i) {
        s += "failure_" + std::to_string(i) + "=" + std::to_string(failures[i].first) + ":" +
             failures[i].second + "\n";
    }
    return s;
}

std::string AllocStressReport::to_text() const {
    std::string s;
    s += "scripts: " + std::to_string(scripts_run) + ", ops: " + std::to_string(ops_run) + " (" +
         std::to_string(mallocs) + " malloc, " + std::to_string(frees) + " free)\n";
    s += "peak heap: " + std::to_string(peak_heap) + " bytes\n";
    s += "failures: " + std::to_string(failures.size()) + "\n";
    size_t shown = std::min<size_t>(failures.size(), 10);
    for (size_t i = 0; i < shown; ++i)
        s += "  seed " + std::to_string(failures[i].first) + ": " + failures[i].second + "\n";
    if (shown < failures.size())
        s += "  ... " + std::to_string(failures.size() - shown) + " more\n";
    return s;
}

namespace {

void stress_one(const ValidatedModule& allocator, uint64_t seed, uint32_t n_ops, uint32_t size_min,
                uint32_t size_max, double free_prob, AllocStressReport& rep) {
    ++rep.scripts_run;
    AllocScript script = gen_alloc_script(seed, n_ops, size_min, size_max, free_prob);
    rep.ops_run += script.ops.size();
    for (const AllocOp& op : script.ops) (op.is_malloc ? rep.mallocs : rep.frees)++;
    try {
        Instance inst = instantiate(allocator, /*max_pages=*/16);
        AllocReport r = run_script(inst, script);
        rep.traps += r.traps;
        rep.peak_heap = std::max(rep.peak_heap, r.peak_heap);
        if (!r.violations.empty()) {
            const AllocViolation& v = r.violations.front();
            rep.failures.emplace_back(seed,
                                      "op " + std::to_string(v.op_index) + ": " + v.invariant);
        }
    } catch (const std::exception& e) {
        rep.failures.emplace_back(seed, std::string("exception: ") + e.what());
    }
}

}  // namespace

AllocStressReport alloc_stress_serial(const ValidatedModule& allocator, uint64_t n_scripts,
                                      uint32_t n_ops, uint32_t size_min, uint32_t size_max,
                                      double free_prob, uint64_t base_seed) {
    AllocStressReport rep;
    for (uint64_t i = 0; i < n_scripts; ++i)
        stress_one(allocator, base_seed + i, n_ops, size_min, size_max, free_prob, rep);
    std::sort(rep.failures.begin(), rep.failures.end());
    return rep;
}

AllocStressReport alloc_stress(const ValidatedModule& allocator, uint64_t n_scripts,
                               uint32_t n_ops, uint32_t size_min, uint32_t size_max,
                               double free_prob, uint64_t base_seed) {
#ifdef _OPENMP
    AllocStressReport rep;
#pragma omp parallel
    {
        AllocStressReport local;
#pragma omp for schedule(dynamic) nowait
        for (int64_t i = 0; i < static_cast<int64_t>(n_scripts); ++i)
            stress_one(allocator, base_seed + static_cast<uint64_t>(i), n_ops, size_min, size_max,
                       free_prob, local);
#pragma omp critical
        rep.merge(std::move(local));
    }
    std::sort(rep.failures.begin(), rep.failures.end());
    return rep;
#else
    return alloc_stress_serial(allocator, n_scripts, n_ops, size_min, size_max, free_prob,
                               base_seed);
#endif
}

}  // namespace wasmlite
