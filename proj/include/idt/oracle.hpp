#pragma once

#include "idt/configuration.hpp"
#include "idt/model.hpp"
#include "idt/rng.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace idt {

// General < Coordinate < Subcube in power; Pairwise is its own branch.
// Coordinate and Pairwise oracles also answer General queries.
enum class oracle_mode { general, coordinate, subcube, pairwise };

std::string_view to_string(oracle_mode m) noexcept;
oracle_mode oracle_mode_from_string(std::string_view s);

// True when an oracle of mode `have` answers queries of kind `need`.
bool permits(oracle_mode have, oracle_mode need) noexcept;

enum class backend_kind { exact, glauber };

struct backend {
    backend_kind kind = backend_kind::exact;
    std::size_t steps = 0; // Glauber updates per sample; 0 means ceil(10 n ln(n+1))

    static backend exact() { return {}; }
    static backend glauber(std::size_t steps = 0) { return {backend_kind::glauber, steps}; }
};

std::size_t default_glauber_steps(std::size_t n) noexcept;

struct query_counts {
    std::uint64_t general = 0;
    std::uint64_t coordinate = 0;
    std::uint64_t subcube = 0;
    std::uint64_t pairwise = 0;

    std::uint64_t total() const noexcept { return general + coordinate + subcube + pairwise; }
    query_counts& operator+=(const query_counts& o) noexcept;
    bool operator==(const query_counts&) const = default;
};

// Query-counted sampler for a hidden distribution pi. Single-threaded: each
// trial owns its own oracle built from a shared model_spec.
class oracle {
public:
    oracle(model_spec pi, oracle_mode mode, backend be, std::uint64_t seed);

    configuration draw_general();

    // a ~ pi_i(.|pin) where pin covers every coordinate but i; symbol 0 when
    // the pinning has probability zero.
    symbol draw_coordinate(std::size_t i, const pinning& pin);

    // Free coordinates of pi(.|pin) in increasing coordinate order; all zero
    // when the pinning has probability zero.
    configuration draw_subcube(const pinning& pin);

    // x with probability pi(x)/(pi(x)+pi(y)); x when both have mass zero.
    const configuration& draw_pairwise(const configuration& x, const configuration& y);

    // Finite chain on coordinate i driven by pairwise queries. The initial
    // state is uniform on Q unless given.
    symbol simulate_coordinate_via_pairwise(std::size_t i, const pinning& pin, std::size_t chain_steps,
                                            std::optional<symbol> initial = std::nullopt);

    const query_counts& counts() const noexcept { return counts_; }
    oracle_mode mode() const noexcept { return mode_; }
    const model_spec& model() const noexcept { return pi_; }
    const backend& backend_config() const noexcept { return be_; }
    splitmix64& rng() noexcept { return rng_; }

private:
    void require(oracle_mode need, const char* what) const;
    configuration sample_unconditioned();
    configuration glauber_sample();
    configuration direct_sample();
    std::uint64_t draw_index(std::span<const double> cum, std::span<const double> mass);

    struct conditional_law {
        pinning pin;
        std::vector<std::size_t> free;
        std::vector<double> mass;
        std::vector<double> cum;
        bool feasible = false;
    };
    const conditional_law& law_for(const pinning& pin);

    model_spec pi_;
    oracle_mode mode_;
    backend be_;
    splitmix64 rng_;
    query_counts counts_;
    bool use_table_ = false;

    std::size_t coord_i_ = std::size_t(-1);
    pinning coord_pin_;
    std::vector<double> coord_cdf_;
    bool coord_feasible_ = false;

    conditional_law law_;
    bool law_valid_ = false;
};

} // namespace idt
