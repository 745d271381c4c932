#pragma once

#include <cstdint>
#include <random>

namespace earstudy {

// Portable seeded random source. The engine's output sequence is fixed by
// the standard; the transforms below are spelled out here because the
// standard library distributions differ between implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1].
    double uniform_positive() { return 1.0 - uniform(); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Integer uniform on [lo, hi] (modulo bias negligible for small ranges).
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    /// Standard normal via Box-Muller.
    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }

    double exponential(double rate);

    /// Independent child seed for a numbered sub-stream.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace earstudy
