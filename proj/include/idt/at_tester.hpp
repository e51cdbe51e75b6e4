#pragma once

#include "idt/model.hpp"
#include "idt/oracle.hpp"
#include "idt/testers.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace idt {

struct at_parameters {
    double C = 1;
    double eta = 0.5;
    double eps = 1;
    std::size_t n = 1;
    double budget_scale = 1;
};

struct schedule_level {
    double eps = 0;      // eps_l = 2^{l-1} eps'
    std::uint64_t T = 0; // ceil(budget_scale * 2^{l+2} (L+1))
};

struct schedule {
    double eps_prime = 0;
    std::size_t L = 0;
    double delta = 0; // 2^{-2L-6}
    std::vector<schedule_level> levels;
};

// L = ceil(log2(M/eps)); throws invalid_range when M < eps.
std::size_t reverse_markov_levels(double eps, double M);

schedule make_schedule(const at_parameters& p);

// Failure target of each amplified sub-test: 1/n^3, but never above 1/27.
double subtest_delta(std::size_t n) noexcept;

// C ln(1/eta) (n/eps) log2^3(n/eps) with log2 floored at 1.
double theorem_query_form(const at_parameters& p);

struct at_result {
    verdict v = verdict::equal;
    query_counts queries;
    std::size_t levels_visited = 0;
    std::uint64_t pairs = 0;
    bool support_violation = false;
};

// Runs the level loop: for each level, T_l pairs; `pair_test(eps_l)` draws a
// fresh pair and returns far to reject. Stops at the first rejection.
at_result run_levels(const schedule& s, const std::function<verdict(double)>& pair_test);

// Algorithm 1 with Coordinate + General access. `rng` drives the tester's
// own coins (uniform i, flattening copies, Poisson counts).
at_result identity_test_coordinate(const model_spec& mu, const at_parameters& p, oracle& o, splitmix64& rng);

// Two-stage TV tester. `p.eps` is the TV distance; stage 2 runs at eps^2/2.
at_result identity_test_tv(const model_spec& mu, const at_parameters& p, oracle& o, splitmix64& rng);

// ceil(2 ln 3 / eps_tv) times the frozen margin.
std::uint64_t tv_stage1_samples(double eps_tv);

} // namespace idt
