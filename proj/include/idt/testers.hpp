#pragma once

#include "idt/configuration.hpp"
#include "idt/rng.hpp"

#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

namespace idt {

// equal: the null side (Equal / CloseHalf). far: the alternative
// (FarKL / Far / Inflated / FarTV).
enum class verdict { equal, far };

std::string_view to_string(verdict v) noexcept;

// Masses over {0..k-1}; eta_min is the smallest nonzero mass.
struct small_distribution {
    std::vector<double> masses;
    double eta_min = 0;

    small_distribution() = default;
    explicit small_distribution(std::vector<double> m); // validates, computes eta_min

    std::size_t k() const noexcept { return masses.size(); }
    std::size_t support_size() const noexcept;
    double l2_norm() const noexcept;
};

// Pull-based symbol source with an exact consumed count.
class sample_stream {
public:
    using source = std::function<symbol()>;

    explicit sample_stream(source s) : src_(std::move(s)) {}

    symbol next() {
        ++consumed_;
        return src_();
    }
    std::uint64_t consumed() const noexcept { return consumed_; }

private:
    source src_;
    std::uint64_t consumed_ = 0;
};

// Stream of i.i.d. draws from a fixed distribution (fixtures and tests).
sample_stream iid_stream(std::vector<double> masses, splitmix64& rng);

// A domain split: symbol a becomes copies offset[a] .. offset[a]+copies[a]-1.
struct flattening {
    small_distribution q;           // the flattened target
    std::vector<std::size_t> copies; // k_a; 0 for symbols outside supp(q)
    std::vector<std::size_t> offset;

    // Uniform copy of a; throws unsupported_symbol when q(a) = 0.
    symbol map(symbol a, splitmix64& rng) const;
    // p' = flattened p (exact table, for checks).
    std::vector<double> apply(std::span<const double> p) const;
    // Wraps p: every pulled sample is mapped, consumption is counted on p.
    sample_stream wrap(sample_stream& p, splitmix64& rng) const;
};

// k_a = floor(q(a)/eta) + 1.
flattening flatten_eta(const small_distribution& q, double eta);
// k_a = floor(s q(a)) + 1 with s the support size of q.
flattening flatten_k(const small_distribution& q);

struct l2_plan {
    std::uint64_t m = 0;   // Poisson mean
    std::uint64_t cap = 0; // at most this many samples are pulled
};
l2_plan l2_identity_plan(const small_distribution& q, double eps2);

// Distinguishes ||p-q||_2 <= eps2/2 from ||p-q||_2 >= eps2.
verdict l2_identity_test(const small_distribution& q, sample_stream& p, double eps2, splitmix64& rng);

// Which of the two Lemma-4.2 routes kl_identity_test takes.
enum class kl_strategy { single_support, flatten_eta, flatten_k };

struct kl_plan {
    kl_strategy strategy = kl_strategy::single_support;
    double eta = 0;
    std::uint64_t max_samples = 0;
    double reference = 0; // min{1/(eps sqrt eta), sqrt(k) ln(1/eta)/eps^2}
};
kl_plan kl_identity_plan(const small_distribution& q, double eps);

// Equal when p = q, FarKL when KL(p||q) >= eps, failure <= 1/3.
verdict kl_identity_test(const small_distribution& q, sample_stream& p, double eps, splitmix64& rng);

// m = ceil(max(c, 8 ln(1/delta)) (1+gamma) / (gamma^2 q)) with c = 10.
std::uint64_t bernoulli_mean_samples(double q, double gamma, double delta = 1.0 / 3.0);
// far means Inflated: p-hat > (1 + gamma/2) q.
verdict bernoulli_mean_test(double q, sample_stream& p, double gamma, double delta = 1.0 / 3.0);

enum class bernoulli_case { case1, case2, case3, vacuous };
// Case after flipping so that q <= 1/2.
bernoulli_case bernoulli_kl_case(double q, double eps) noexcept;
std::uint64_t bernoulli_kl_samples(double q, double eps);
verdict bernoulli_kl_test(double q, sample_stream& p, double eps);

std::uint64_t amplify_reps(double delta);
// Majority over amplify_reps(delta) runs; stops once the majority is settled.
// unsupported_symbol from a run yields far at once.
verdict amplify(const std::function<verdict()>& test, double delta);

// Supplies q-hat with e^{-acc} <= q-hat/q <= e^{acc} w.p. >= 1 - delta.
// May throw provider_failure.
using approx_target = std::function<small_distribution(double acc, double delta)>;

// The small-domain KL tester used by the product-structure algorithms:
// bernoulli_kl_test when k = 2 with full support, kl_identity_test otherwise.
verdict small_domain_kl_test(const small_distribution& q, sample_stream& p, double eps, splitmix64& rng);
std::uint64_t small_domain_kl_samples(const small_distribution& q, double eps);

// Largest sample count of the amplified base tester at (eps/2, failure 1/10).
std::uint64_t robust_base_budget(const small_distribution& q, double eps);
// xi = min{eps, 1/m}/8 with m = robust_base_budget.
double robust_accuracy(const small_distribution& q, double eps);

// Robust tester against an approximate target. A first coarse request sizes
// the budget, the second fetches q-hat at accuracy xi; each at confidence
// 1 - 1/20. A provider_failure is reported as far (an error of the test).
verdict robust_kl_test(const approx_target& provider, sample_stream& p, double eps, splitmix64& rng);

} // namespace idt
