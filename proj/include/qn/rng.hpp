#pragma once

#include <cmath>
#include <cstdint>

namespace qn {

// Counter-based generator: one independent stream per (seed, stream_id) pair.
// Draw order within a stream is deterministic, so per-agent streams replay
// identically regardless of scheduling.
class CounterRng {
public:
    CounterRng() : CounterRng(0, 0) {}
    CounterRng(std::uint64_t seed, std::uint64_t stream_id)
        : state_(mix(mix(seed + 0x9e3779b97f4a7c15ULL) ^ mix(stream_id + 0xbf58476d1ce4e5b9ULL))) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    // uniform on [0,1) with 53 random bits
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

    // uniform integer in [0, n)
    std::uint64_t uniform_below(std::uint64_t n) {
        // rejection to avoid modulo bias
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t r;
        do {
            r = next_u64();
        } while (r >= limit);
        return r % n;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace qn
