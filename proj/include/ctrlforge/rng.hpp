#pragma once

#include <cstdint>

namespace ctrlforge {

// Counter-based random stream: a stream is keyed by (seed, iteration, index)
// and then consumed sequentially. Evaluation order (parallel or not) cannot
// change the numbers a given (iteration, particle) pair sees.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t iteration, std::uint64_t index)
        : state_(key(seed, iteration, index)) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    static std::uint64_t key(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
        std::uint64_t x = seed;
        x = scramble(x ^ (a + 0x9E3779B97F4A7C15ULL));
        x = scramble(x ^ (b + 0xD1B54A32D192ED03ULL));
        return x;
    }

private:
    static std::uint64_t scramble(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

}  // namespace ctrlforge
