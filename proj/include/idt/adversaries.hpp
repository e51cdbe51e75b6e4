#pragma once

#include "idt/configuration.hpp"
#include "idt/model.hpp"
#include "idt/rng.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace idt {

// pi_{A,sigma} over {0,1}^n.
struct subcube_bad_spec {
    std::size_t n = 0;
    std::vector<std::size_t> A; // sorted, 1 <= |A| < n
    configuration sigma;

    std::size_t t() const noexcept { return A.size(); }
    model_spec model() const;
};

// t = ceil(log2(n/eps)) - 3; invalid_range unless t >= 1 (n/eps > 8).
std::size_t subcube_bad_t(std::size_t n, double eps);

// Validates |A| in [1, n-1], distinct coordinates, binary sigma.
subcube_bad_spec make_subcube_bad(std::size_t n, std::vector<std::size_t> A, configuration sigma);
// A uniform among t-subsets, sigma uniform.
subcube_bad_spec make_subcube_bad(std::size_t n, double eps, splitmix64& rng);
// Same with |A| = t given directly.
subcube_bad_spec random_subcube_bad(std::size_t n, std::size_t t, splitmix64& rng);

configuration sample_subcube_bad(const subcube_bad_spec& s, splitmix64& rng);

// ln2 (n-t) / 2^t and (1 - 2^{-(n-t)}) 2^{-t}.
double subcube_bad_kl(const subcube_bad_spec& s) noexcept;
double subcube_bad_tv(const subcube_bad_spec& s) noexcept;

enum class subcube_case { case1, case2, case3 };

struct subcube_conditional {
    subcube_case which = subcube_case::case1;
    std::size_t ell = 0; // |Lambda|
    std::size_t j = 0;   // |A cap Lambda|
    std::vector<std::size_t> free; // increasing
    std::vector<double> mass;      // lexicographic over the free coordinates
};

// Which of the three cases a pinning falls in, with (ell, j).
subcube_conditional classify_pinning(const subcube_bad_spec& s, const pinning& pin);

// pi_{A,sigma}(.|pin) from the case formulas. Case 2 with j = t has no mass
// and throws infeasible_pinning.
subcube_conditional conditional_subcube_bad(const subcube_bad_spec& s, const pinning& pin);

// TV(u(.|tau), pi(.|tau)) per case: 0; 2^{-(t-j)}; 2^l/(2^t+2^l-2^j) - 2^{-(n-l)}.
// The infeasible Case 2 (j = t) counts as 1, as the case formula gives.
double conditional_tv_case(std::size_t n, std::size_t t, std::size_t ell, std::size_t j, subcube_case c);

// E_sigma of the conditional TV for a fixed A with |A cap Lambda| = j.
double expected_conditional_tv_given_j(std::size_t n, std::size_t t, std::size_t ell, std::size_t j);

// E_{A,sigma} for |Lambda| = ell: j is hypergeometric.
double expected_conditional_tv(std::size_t n, double eps, std::size_t ell);

// pi_M: an Ising model on a perfect matching (one uniform coordinate left
// over when n is odd).
struct matched_ising_spec {
    std::size_t n = 0;
    std::vector<std::pair<std::size_t, std::size_t>> matching;
    double beta = 0;

    model_spec model() const;
};

// beta = rho eps / sqrt(n).
double matched_beta(std::size_t n, double eps, double rho) noexcept;

// Calibrated rho for (n, eps) from the frozen table, if present.
std::optional<double> calibrated_rho(std::size_t n, double eps);

matched_ising_spec make_matched_ising(std::size_t n, std::vector<std::pair<std::size_t, std::size_t>> matching,
                                      double beta);
// Uniformly random matching, beta from rho (or the calibrated rho).
matched_ising_spec make_matched_ising(std::size_t n, double eps, splitmix64& rng, std::optional<double> rho = {});

configuration sample_matched_ising(const matched_ising_spec& s, splitmix64& rng);

// Law of coordinate i given the rest: agrees with its partner with
// probability (1 + tanh beta)/2; uniform when unmatched.
std::vector<double> matched_coordinate_law(const matched_ising_spec& s, std::size_t i, std::span<const symbol> x);

// Exact TV to uniform: 1/2 sum_a C(m,a) 2^{-m} |(1+th)^a (1-th)^{m-a} - 1|,
// m pairs, th = tanh beta.
double tv_matched_ising_to_uniform(const matched_ising_spec& s);

} // namespace idt
