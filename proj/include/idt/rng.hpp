#pragma once

#include <cstdint>
#include <limits>

namespace idt {

// SplitMix64 used as a counter-based generator: the i-th output is a fixed
// bijective mix of (seed + i * golden_gamma). Streams are derived by mixing
// the seed with a stream id, so parallel and serial runs see identical draws.
class splitmix64 {
public:
    using result_type = std::uint64_t;

    explicit splitmix64(std::uint64_t seed = 0) noexcept : seed_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept { return mix(seed_ + (++counter_) * gamma); }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform01() noexcept { return double((*this)() >> 11) * 0x1.0p-53; }

    // Unbiased integer in [0, n) (Lemire's multiply-shift rejection).
    std::uint64_t below(std::uint64_t n) noexcept;

    bool bernoulli(double p) noexcept { return uniform01() < p; }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t counter() const noexcept { return counter_; }

    static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    static constexpr std::uint64_t gamma = 0x9e3779b97f4a7c15ULL;

    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

// Independent child seed for a numbered sub-stream.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return splitmix64::mix(seed ^ splitmix64::mix(stream + 0x632be59bd9b4e019ULL));
}

// Poisson variate; uses std::poisson_distribution over this generator.
std::uint64_t poisson(splitmix64& rng, double mean);

} // namespace idt
