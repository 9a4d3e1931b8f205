#pragma once

#include <cstdint>
#include <span>

namespace twincf {

// SplitMix64: seedable, splittable, and identical across platforms.
// Every sampling entry point in the library takes an explicit u64 seed and
// builds one of these; worker shards derive independent streams with
// derive_seed(seed, block_index).
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). Multiply-shift; bias is negligible for the
    // small n used here (category counts, row indices).
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(next_double() * static_cast<double>(n)) % n;
    }

    // CDF inversion over a probability vector.
    int draw_categorical(std::span<const double> probs) {
        const double r = next_double();
        double acc = 0.0;
        int last_positive = 0;
        for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
            if (probs[i] > 0.0) last_positive = i;
            acc += probs[i];
            if (r < acc) return i;
        }
        return last_positive;  // guards FP shortfall when r ~ 1
    }

private:
    std::uint64_t state_;
};

// Derives an independent child seed for a worker/block stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    SplitMix64 g(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
    return g.next_u64();
}

}  // namespace twincf
