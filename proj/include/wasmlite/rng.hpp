// wasmlite: a distilled WebAssembly
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace wasmlite {

/// Deterministic random source shared by every generator in the project, so
/// identical seeds reproduce identical corpora everywhere.
///
/// Generator: xorshift64* with update equations
///     s ^= s >> 12;  s ^= s << 25;  s ^= s >> 27;
///     output = s * 0x2545F4914F6CDD1D
/// Seeding: one splitmix64 round so that seed 0 yields a nonzero state
///     z = seed + 0x9E3779B97F4A7C15
///     z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///     z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///     s = z ^ (z >> 31)          (s = 0x9E3779B97F4A7C15 if this is zero)
class Xorshift64Star {
public:
    explicit Xorshift64Star(uint64_t seed) : state_(mix(seed)) {
        if (state_ == 0) state_ = 0x9E3779B97F4A7C15ULL;
    }

    uint64_t next() {
        state_ ^= state_ >> 12;
        state_ ^= state_ << 25;
        state_ ^= state_ >> 27;
        return state_ * 0x2545F4914F6CDD1DULL;
    }

    /// Uniform-ish draw in [0, n). n must be nonzero.
    uint32_t below(uint32_t n) { return static_cast<uint32_t>(next() % n); }

    /// True with probability p/100.
    bool percent(uint32_t p) { return below(100) < p; }

    static uint64_t mix(uint64_t z) {
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    uint64_t state_;
};

}  // namespace wasmlite
