#include "idt/configuration.hpp"

#include "idt/errors.hpp"

#include <limits>
#include <string>

namespace idt {

std::uint64_t state_count(std::size_t n, std::size_t k) noexcept {
    std::uint64_t total = 1;
    for (std::size_t i = 0; i < n; ++i) {
        if (k != 0 && total > std::numeric_limits<std::uint64_t>::max() / k)
            return std::numeric_limits<std::uint64_t>::max();
        total *= k;
    }
    return total;
}

std::uint64_t checked_state_count(std::size_t n, std::size_t k) {
    auto total = state_count(n, k);
    if (total > desk_scale_limit)
        throw scale_guard_exceeded("enumeration of " + std::to_string(k) + "^" + std::to_string(n) +
                                   " states exceeds the 2^22 desk-scale guard");
    return total;
}

std::uint64_t encode(std::span<const symbol> x, std::size_t k) noexcept {
    std::uint64_t index = 0;
    for (symbol a: x) index = index * k + std::uint64_t(a);
    return index;
}

void decode_into(std::uint64_t index, std::size_t k, std::span<symbol> out) noexcept {
    for (std::size_t i = out.size(); i-- > 0;) {
        out[i] = symbol(index % k);
        index /= k;
    }
}

configuration decode(std::uint64_t index, std::size_t n, std::size_t k) {
    configuration x(n);
    decode_into(index, k, x);
    return x;
}

pinning pinning::all_but(std::span<const symbol> x, std::size_t i) {
    pinning p(x.size());
    for (std::size_t j = 0; j < x.size(); ++j)
        if (j != i) p.values_[j] = x[j];
    return p;
}

pinning pinning::prefix(std::span<const symbol> x, std::size_t n, std::size_t len) {
    pinning p(n);
    for (std::size_t j = 0; j < len; ++j) p.values_[j] = x[j];
    return p;
}

pinning pinning::on(std::span<const symbol> x, std::span<const std::size_t> coords) {
    pinning p(x.size());
    for (auto j: coords) p.values_[j] = x[j];
    return p;
}

std::size_t pinning::pinned_count() const noexcept {
    std::size_t c = 0;
    for (auto v: values_) c += (v != free);
    return c;
}

std::vector<std::size_t> pinning::free_coordinates() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < values_.size(); ++i)
        if (values_[i] == free) out.push_back(i);
    return out;
}

std::vector<std::size_t> pinning::pinned_coordinates() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < values_.size(); ++i)
        if (values_[i] != free) out.push_back(i);
    return out;
}

bool pinning::agrees(std::span<const symbol> x) const noexcept {
    for (std::size_t i = 0; i < values_.size(); ++i)
        if (values_[i] != free && values_[i] != x[i]) return false;
    return true;
}

} // namespace idt
