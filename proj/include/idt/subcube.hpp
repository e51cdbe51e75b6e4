#pragma once

#include "idt/at_tester.hpp"
#include "idt/model.hpp"
#include "idt/oracle.hpp"
#include "idt/testers.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace idt {

// Conditional marginals of mu along a coordinate ordering: position j of the
// ordering is coordinate order[j], conditioned on the values of order[0..j-1]
// (listed in ordering position). The answer at accuracy `acc` satisfies
// e^{-acc} <= q-hat/q <= e^{acc} with probability >= 1 - delta; acc = 0
// requests the exact law. Throws zero_probability_pinning for an infeasible
// prefix and may throw provider_failure.
class prefix_provider {
public:
    using function = std::function<small_distribution(std::size_t j, std::span<const symbol> prefix, double acc,
                                                      double delta)>;

    prefix_provider(std::vector<std::size_t> order, function f);

    const std::vector<std::size_t>& order() const noexcept { return order_; }
    std::size_t n() const noexcept { return order_.size(); }

    small_distribution exact(std::size_t j, std::span<const symbol> prefix) const { return f_(j, prefix, 0, 0); }
    small_distribution operator()(std::size_t j, std::span<const symbol> prefix, double acc, double delta) const {
        return f_(j, prefix, acc, delta);
    }
    // The (j, prefix) slice as an approx_target (copies the prefix).
    approx_target target(std::size_t j, std::span<const symbol> prefix) const;

private:
    std::vector<std::size_t> order_;
    function f_;
};

// Exact prefix marginals computed from mu. An empty order means 0..n-1.
prefix_provider exact_prefix_provider(const model_spec& mu, std::vector<std::size_t> order = {});

// Scales each exact mass by e^{u acc/2} with u in [-1, 1] fixed by a hash of
// (seed, j, prefix, symbol), then renormalizes, so every ratio stays within
// e^{+-acc}. Zero masses stay zero.
prefix_provider perturbed_prefix_provider(const model_spec& mu, std::uint64_t seed,
                                          std::vector<std::size_t> order = {});

// Ordering positions of the prefix, pinned on the underlying coordinates.
pinning prefix_pinning(std::span<const std::size_t> order, std::span<const symbol> x, std::size_t len);

// An entropy estimator with its sample-size rule for |H-hat - H| <= eps at
// failure delta. Estimates are clamped to [0, ln k].
struct entropy_estimator {
    std::string name;
    std::function<double(std::span<const symbol> samples, std::size_t k)> estimate;
    std::function<std::uint64_t(std::size_t k, double eps, double delta)> samples;
};

// H_plug + (K-1)/(2m) with K the observed support size, clamped.
double miller_madow_entropy(std::span<const symbol> samples, std::size_t k);

// Calibration-table lookup: the row with the smallest k_row >= k, then the
// largest eps_row <= eps and delta_row <= delta. Falls back to a bound
// from the bias and McDiarmid concentration when no row applies.
std::uint64_t miller_madow_samples(std::size_t k, double eps, double delta);
std::uint64_t miller_madow_bound(std::size_t k, double eps, double delta);

entropy_estimator miller_madow();

// m = ceil(8 ln^2(1/b) / eps^2), at least 1. b is capped at 1/2.
std::uint64_t estimate_g_samples(double b, double eps);

// G-hat = mean of ln(1/q-hat(a_j)); q-hat is requested at accuracy eps/2,
// confidence 9/10. Throws unsupported_symbol on a draw with q-hat = 0.
double estimate_g(const approx_target& q, sample_stream& p, double eps, double b, double sample_scale = 1);
double estimate_g(const small_distribution& q, sample_stream& p, double eps, double sample_scale = 1);

double estimate_entropy(sample_stream& p, std::size_t k, double eps, double delta,
                        const entropy_estimator& est = miller_madow(), double sample_scale = 1);

struct kl_estimate_options {
    entropy_estimator entropy = miller_madow();
    // Multiplies every inner sample count and the number of median repetitions
    // (each floored at 1). 1 runs the estimators at their stated sizes.
    double sample_scale = 1;
};

// R-hat = G-hat(eps/2) - H-hat(eps/2, 1/10).
double estimate_kl_small(const approx_target& q, std::size_t k, sample_stream& p, double eps, double b,
                         const kl_estimate_options& opt = {});
double estimate_kl_small(const small_distribution& q, sample_stream& p, double eps,
                         const kl_estimate_options& opt = {});

// Median of amplify_reps(delta) (odd, scaled) independent R-hat runs.
double estimate_kl_small_median(const approx_target& q, std::size_t k, sample_stream& p, double eps, double b,
                                double delta, const kl_estimate_options& opt = {});

// L = ceil(8 n^2 ln^2(1/b) / eps^2).
std::uint64_t kl_global_rounds(std::size_t n, double b, double eps);

struct kl_global_result {
    double estimate = 0; // S-hat; meaningless when support_violation
    bool support_violation = false;
    std::uint64_t rounds = 0;
    double r_mean = 0;
    double r_sd = 0;
    double r_min = 0;
    double r_max = 0;
    query_counts queries;
};

// S-hat = (n/L) sum R-hat_l over L pairs (i_l, x_l) from General draws.
// A General draw outside supp(mu), an infeasible prefix under mu, or a
// p-sample with q-hat = 0 sets support_violation (pi is not << mu).
kl_global_result estimate_kl_global(const model_spec& mu, const prefix_provider& provider, double b, oracle& o,
                                    double eps, splitmix64& rng, const kl_estimate_options& opt = {});

// Tolerant corollary: far when S-hat >= s + eps/2.
verdict tolerant_kl_verdict(const kl_global_result& r, double s, double eps) noexcept;

// Algorithm 1's schedule with C = 1 and eta = b.
schedule subcube_schedule(double b, double eps, std::size_t n, double budget_scale = 1);

enum class subcube_target { exact, approximate };

// Factorization tester over the Subcube oracle. Pairs: x from the empty
// pinning, j uniform over ordering positions, q from the provider at the
// prefix of x, p-samples from the prefix pinning restricted to order[j].
// approximate runs the robust small-domain tester against provider answers.
at_result identity_test_subcube(const model_spec& mu, const prefix_provider& provider, double b, double eps,
                                oracle& o, splitmix64& rng, subcube_target target = subcube_target::exact,
                                double budget_scale = 1);

} // namespace idt
