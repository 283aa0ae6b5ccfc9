#pragma once

// Portable random streams. std::mt19937_64 output is fixed by the standard; the
// distributions layered on top are implemented here (instead of <random>'s
// implementation-defined ones) so a (seed, run) pair replays identically everywhere.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace meshpredict {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Streams owned by one Monte-Carlo run.
enum class StreamId : std::uint64_t { Plant = 1, Network = 2 };

/// seed = splitmix64(splitmix64(master ^ splitmix64(run)) + stream)
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t run, StreamId stream) {
    return splitmix64(splitmix64(master ^ splitmix64(run)) + static_cast<std::uint64_t>(stream));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller; the second variate of each pair is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace meshpredict
