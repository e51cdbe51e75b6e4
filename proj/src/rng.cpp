#include "idt/rng.hpp"

#include <random>

namespace idt {

std::uint64_t splitmix64::below(std::uint64_t n) noexcept {
    if (n <= 1) return 0;
    unsigned __int128 m = (unsigned __int128)(*this)() * n;
    auto low = std::uint64_t(m);
    if (low < n) {
        const std::uint64_t threshold = -n % n;
        while (low < threshold) {
            m = (unsigned __int128)(*this)() * n;
            low = std::uint64_t(m);
        }
    }
    return std::uint64_t(m >> 64);
}

std::uint64_t poisson(splitmix64& rng, double mean) {
    if (!(mean > 0)) return 0;
    std::poisson_distribution<std::uint64_t> d(mean);
    return d(rng);
}

} // namespace idt
