#pragma once

#include <cstdint>
#include <random>

namespace made {

/// Counter-based seed derivation (splitmix64 finalizer). Entry seeds depend
/// only on (master, index), so mask lists regenerate identically no matter
/// in which order entries are built. Model files persist these seeds, which
/// makes this mapping part of the on-disk format: do not change it.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Wrapper around std::mt19937_64 with hand-rolled bounded draws.
/// std::uniform_int_distribution is implementation-defined, so regenerating
/// masks from persisted seeds would not be portable through it; the draws
/// below are pinned to the standardized mt19937_64 output stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform integer on [lo, hi], both inclusive. Rejection sampling,
    /// bias-free.
    int uniform_int(int lo, int hi) {
        const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
        std::uint64_t r;
        do {
            r = eng_();
        } while (r >= limit);
        return lo + static_cast<int>(r % range);
    }

    /// Uniform double on [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    bool bernoulli(double p) { return uniform01() < p; }

private:
    std::mt19937_64 eng_;
};

}  // namespace made
