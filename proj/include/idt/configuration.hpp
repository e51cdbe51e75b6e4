#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace idt {

using symbol = int;
using configuration = std::vector<symbol>;

// Any exact enumeration is limited to this many states.
inline constexpr std::uint64_t desk_scale_limit = std::uint64_t(1) << 22;

// k^n, saturating at UINT64_MAX.
std::uint64_t state_count(std::size_t n, std::size_t k) noexcept;

// Throws scale_guard_exceeded when k^n exceeds the desk-scale limit.
std::uint64_t checked_state_count(std::size_t n, std::size_t k);

// Lexicographic state index: coordinate 0 is the most significant digit.
std::uint64_t encode(std::span<const symbol> x, std::size_t k) noexcept;
void decode_into(std::uint64_t index, std::size_t k, std::span<symbol> out) noexcept;
configuration decode(std::uint64_t index, std::size_t n, std::size_t k);

// A partial assignment. Unpinned coordinates hold pinning::free.
class pinning {
public:
    static constexpr symbol free = -1;

    pinning() = default;
    explicit pinning(std::size_t n) : values_(n, free) {}

    // Pins every coordinate of x except i (a coordinate-oracle query).
    static pinning all_but(std::span<const symbol> x, std::size_t i);
    // Pins coordinates 0..len-1 to x.
    static pinning prefix(std::span<const symbol> x, std::size_t n, std::size_t len);
    // Pins the listed coordinates to their values in x.
    static pinning on(std::span<const symbol> x, std::span<const std::size_t> coords);

    std::size_t size() const noexcept { return values_.size(); }
    bool pinned(std::size_t i) const noexcept { return values_[i] != free; }
    symbol operator[](std::size_t i) const noexcept { return values_[i]; }

    void set(std::size_t i, symbol a) noexcept { values_[i] = a; }
    void release(std::size_t i) noexcept { values_[i] = free; }

    std::size_t pinned_count() const noexcept;
    std::vector<std::size_t> free_coordinates() const;
    std::vector<std::size_t> pinned_coordinates() const;

    // True when x agrees with every pinned value.
    bool agrees(std::span<const symbol> x) const noexcept;

    std::span<const symbol> raw() const noexcept { return values_; }

    bool operator==(const pinning&) const = default;

private:
    std::vector<symbol> values_;
};

} // namespace idt
