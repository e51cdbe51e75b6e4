#include "idt/analysis.hpp"
#include "idt/constants.hpp"
#include "idt/errors.hpp"
#include "idt/numeric.hpp"
#include "idt/subcube.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

using namespace idt;

namespace {

double fraction(int trials, const std::function<bool(std::uint64_t)>& ok) {
    int hits = 0;
    for (int t = 0; t < trials; ++t) hits += ok(std::uint64_t(t));
    return double(hits) / trials;
}

model_spec ising_path6() {
    std::vector<ising_edge> e;
    for (std::size_t i = 0; i + 1 < 6; ++i) e.push_back({i, i + 1, 0.4});
    return model_spec::ising(6, e, std::vector<double>(6, 0.0));
}

double entropy(const std::vector<double>& p) {
    double h = 0;
    for (double v: p)
        if (v > 0) h -= v * std::log(v);
    return h;
}

int subcube_far_count(const model_spec& mu, const model_spec& pi, const prefix_provider& prov, double b, double eps,
                      int trials, subcube_target target = subcube_target::exact) {
    int far = 0;
    for (int t = 0; t < trials; ++t) {
        oracle o(pi, oracle_mode::subcube, backend::exact(), derive_seed(31, std::uint64_t(t)));
        splitmix64 rng(derive_seed(32, std::uint64_t(t)));
        auto r = identity_test_subcube(mu, prov, b, eps, o, rng, target);
        EXPECT_EQ(r.queries, o.counts());
        far += r.v == verdict::far;
    }
    return far;
}

} // namespace

TEST(PrefixProvider, ExactMatchesPrefixMarginals) {
    auto mu = ising_path6();
    auto prov = exact_prefix_provider(mu);
    for (std::size_t j = 0; j < 6; ++j) {
        auto head = prefix_marginal(mu, j);
        auto next = prefix_marginal(mu, j + 1);
        for (std::uint64_t idx = 0; idx < head.size(); ++idx) {
            auto x = decode(idx, j, 2);
            auto q = prov.exact(j, x);
            for (symbol a = 0; a < 2; ++a) {
                auto y = x;
                y.push_back(a);
                EXPECT_NEAR(q.masses[std::size_t(a)], next[encode(y, 2)] / head[idx], 1e-12);
            }
        }
    }
}

TEST(PrefixProvider, CustomOrderFollowsThePermutation) {
    auto mu = model_spec::product({{0.9, 0.1}, {0.5, 0.5}, {0.2, 0.8}});
    auto prov = exact_prefix_provider(mu, {2, 0, 1});
    EXPECT_NEAR(prov.exact(0, {}).masses[0], 0.2, 1e-15);
    EXPECT_NEAR(prov.exact(1, configuration{1}).masses[0], 0.9, 1e-15);
    EXPECT_THROW(exact_prefix_provider(mu, {0, 0, 1}), invalid_range);
    EXPECT_THROW(exact_prefix_provider(mu, {0, 1}), dimension_mismatch);
    EXPECT_THROW(prov.exact(1, {}), dimension_mismatch);
}

TEST(PrefixProvider, PerturbedStaysWithinFactor) {
    auto mu = model_spec::product({{0.6, 0.3, 0.1}, {0.0, 0.5, 0.5}});
    auto prov = perturbed_prefix_provider(mu, 99);
    auto exact = exact_prefix_provider(mu);
    for (double acc: {0.01, 0.1, 0.5})
        for (symbol a = 0; a < 3; ++a) {
            configuration x{a};
            auto q = exact.exact(1, x);
            auto qh = prov(1, x, acc, 0.1);
            EXPECT_EQ(qh.masses[0], 0.0);
            for (std::size_t s = 1; s < 3; ++s) {
                EXPECT_LE(std::fabs(std::log(qh.masses[s] / q.masses[s])), acc + 1e-12);
            }
            // Deterministic answers per (j, prefix).
            EXPECT_EQ(qh.masses, prov(1, x, acc, 0.1).masses);
        }
    EXPECT_EQ(prov(0, {}, 0, 0).masses, exact.exact(0, {}).masses);
}

TEST(EstimateG, SampleSize) {
    EXPECT_EQ(estimate_g_samples(0.25, 0.2), 385u);
    EXPECT_EQ(estimate_g_samples(0.5, 1.0), 4u);
    EXPECT_THROW(estimate_g_samples(0.0, 0.2), invalid_range);
}

TEST(EstimateG, ConstantSummandIsExact) {
    splitmix64 rng(1);
    small_distribution q({0.25, 0.25, 0.25, 0.25});
    auto s = iid_stream(q.masses, rng);
    EXPECT_NEAR(estimate_g(q, s, 0.1), std::log(4.0), 1e-12);
    EXPECT_EQ(s.consumed(), estimate_g_samples(0.25, 0.1));
}

TEST(EstimateG, RateAndHoeffdingEnvelope) {
    small_distribution q({0.5, 0.25, 0.25});
    const double target = 0.5 * std::log(2.0) + 0.5 * std::log(4.0);
    EXPECT_NEAR(target, 1.0397, 1e-4);
    const double eps = 0.1;
    EXPECT_GE(fraction(500,
                       [&](std::uint64_t t) {
                           splitmix64 rng(derive_seed(3, t));
                           auto s = iid_stream(q.masses, rng);
                           return std::fabs(estimate_g(q, s, eps) - target) <= eps;
                       }),
              0.8);
    // The summand ln(1/q(a)) lies in [0, ln(1/b)], so its variance is at
    // most ln^2(1/b).
    const double lb = std::log(1 / q.eta_min);
    double m1 = 0, m2 = 0;
    for (std::size_t a = 0; a < 3; ++a) {
        m1 += q.masses[a] * -std::log(q.masses[a]);
        m2 += q.masses[a] * std::log(q.masses[a]) * std::log(q.masses[a]);
    }
    EXPECT_LE(m2 - m1 * m1, lb * lb);
    // Empirical spread of G-hat against the Hoeffding envelope at eps/2.
    const auto m = estimate_g_samples(q.eta_min, eps);
    int outside = 0;
    for (std::uint64_t t = 0; t < 2000; ++t) {
        splitmix64 rng(derive_seed(4, t));
        auto s = iid_stream(q.masses, rng);
        outside += std::fabs(estimate_g(q, s, eps) - target) >= eps / 2;
    }
    EXPECT_LE(double(outside) / 2000, 2 * std::exp(-eps * eps * double(m) / (8 * lb * lb)) + 0.01);
}

TEST(EstimateG, UnsupportedSymbolThrows) {
    splitmix64 rng(2);
    small_distribution q({0.5, 0.5, 0.0});
    auto s = iid_stream({0.0, 0.0, 1.0}, rng);
    EXPECT_THROW(estimate_g(q, s, 0.5), unsupported_symbol);
}

TEST(Entropy, MillerMadowValues) {
    std::vector<symbol> xs{0, 0, 1, 1};
    EXPECT_NEAR(miller_madow_entropy(xs, 2), std::log(2.0), 1e-15); // clamped at ln 2
    std::vector<symbol> point(10, 3);
    EXPECT_EQ(miller_madow_entropy(point, 4), 0.0);
    std::vector<symbol> ys{0, 0, 0, 1};
    const double plug = -(0.75 * std::log(0.75) + 0.25 * std::log(0.25));
    EXPECT_NEAR(miller_madow_entropy(ys, 2), plug + 1.0 / 8, 1e-15);
    EXPECT_THROW(miller_madow_entropy(ys, 1), invalid_range);
}

TEST(Entropy, TableLookupAndFallback) {
    const auto& table = constants().entropy_table;
    ASSERT_FALSE(table.empty());
    const auto& r = table.front();
    EXPECT_EQ(miller_madow_samples(r.k, r.eps, r.delta), r.m);
    // An alphabet beyond every row uses the analytic bound.
    EXPECT_EQ(miller_madow_samples(1000, 0.1, 0.1), miller_madow_bound(1000, 0.1, 0.1));
    EXPECT_GE(miller_madow_bound(2, 0.1, 0.1), r.m);
}

TEST(Entropy, AccuracyOnFixtures) {
    const double eps = 0.1;
    struct fx {
        std::vector<double> p;
    };
    std::vector<fx> fixtures{{{0.25, 0.75}}, {std::vector<double>(8, 0.125)}, {{1.0, 0.0, 0.0}}};
    EXPECT_NEAR(entropy(fixtures[0].p), 0.56234, 1e-5);
    for (const auto& f: fixtures) {
        const double h = entropy(f.p);
        EXPECT_GE(fraction(300,
                           [&](std::uint64_t t) {
                               splitmix64 rng(derive_seed(5, t));
                               auto s = iid_stream(f.p, rng);
                               const double est = estimate_entropy(s, f.p.size(), eps, 0.1);
                               EXPECT_GE(est, 0.0);
                               EXPECT_LE(est, std::log(double(f.p.size())));
                               return std::fabs(est - h) <= eps;
                           }),
                  0.9 - 0.05);
    }
}

TEST(Entropy, UniformBiasAtCalibratedSize) {
    for (std::size_t k: {2, 4, 16}) {
        const double eps = 0.1;
        kahan_sum s;
        const int runs = 10000;
        std::vector<double> p(k, 1.0 / double(k));
        for (int t = 0; t < runs; ++t) {
            splitmix64 rng(derive_seed(6, std::uint64_t(t)));
            auto st = iid_stream(p, rng);
            s.add(estimate_entropy(st, k, eps, 0.1));
        }
        EXPECT_LE(std::fabs(s.value() / runs - std::log(double(k))), eps / 2) << "k=" << k;
    }
}

TEST(EstimateKLSmall, NullAndFar) {
    small_distribution half({0.5, 0.5});
    EXPECT_NEAR(bernoulli_kl(0.9, 0.5), 0.36806, 1e-5);
    EXPECT_GE(fraction(300,
                       [&](std::uint64_t t) {
                           splitmix64 rng(derive_seed(7, t));
                           auto s = iid_stream(half.masses, rng);
                           return std::fabs(estimate_kl_small(half, s, 0.1)) <= 0.1;
                       }),
              2.0 / 3);
    EXPECT_GE(fraction(300,
                       [&](std::uint64_t t) {
                           splitmix64 rng(derive_seed(8, t));
                           auto s = iid_stream({0.1, 0.9}, rng);
                           return std::fabs(estimate_kl_small(half, s, 0.1) - bernoulli_kl(0.9, 0.5)) <= 0.1;
                       }),
              2.0 / 3);
    small_distribution u4({0.25, 0.25, 0.25, 0.25});
    std::vector<double> p{0.7, 0.1, 0.1, 0.1};
    const double kl = 0.7 * std::log(2.8) + 0.3 * std::log(0.4);
    EXPECT_NEAR(kl, std::log(4.0) - entropy(p), 1e-15);
    EXPECT_GE(fraction(300,
                       [&](std::uint64_t t) {
                           splitmix64 rng(derive_seed(9, t));
                           auto s = iid_stream(p, rng);
                           return std::fabs(estimate_kl_small(u4, s, 0.15) - kl) <= 0.15;
                       }),
              2.0 / 3);
}

TEST(EstimateKLSmall, MedianUsesAnOddRepetitionCount) {
    small_distribution half({0.5, 0.5});
    approx_target q = [&](double, double) { return half; };
    splitmix64 rng(10);
    std::uint64_t pulls = 0;
    sample_stream s([&] {
        ++pulls;
        return symbol(rng.below(2));
    });
    estimate_kl_small_median(q, 2, s, 0.5, 0.5, 0.1);
    auto reps = amplify_reps(0.1);
    if (reps % 2 == 0) ++reps;
    EXPECT_EQ(pulls, reps * (estimate_g_samples(0.5, 0.25) + miller_madow_samples(2, 0.25, 0.1)));
}

TEST(EstimateKLGlobal, Rounds) {
    EXPECT_EQ(kl_global_rounds(6, 0.5, 0.3), std::uint64_t(std::ceil(8 * 36 * std::log(2.0) * std::log(2.0) / 0.09)));
    EXPECT_EQ(kl_global_rounds(6, 0.5, 0.3), 1538u);
}

TEST(EstimateKLGlobal, EnumerableFixtures) {
    auto mu = model_spec::uniform(6, 2);
    auto prov = exact_prefix_provider(mu);
    const double eps = 0.3;
    const double scale = constants().kl_estimate_sample_scale;
    std::vector<model_spec> fixtures{mu, model_spec::subcube_bad(6, {1, 4}, {0, 1, 1, 0, 0, 1}),
                                     model_spec::product(std::vector<std::vector<double>>(6, {0.6, 0.4}))};
    for (const auto& pi: fixtures) {
        const double kl = kl_divergence(pi, mu);
        const double ok = fraction(6, [&](std::uint64_t t) {
            oracle o(pi, oracle_mode::subcube, backend::exact(), derive_seed(40, t));
            splitmix64 rng(derive_seed(41, t));
            auto r = estimate_kl_global(mu, prov, 0.5, o, eps, rng, {miller_madow(), scale});
            EXPECT_FALSE(r.support_violation);
            EXPECT_EQ(r.rounds, 1538u);
            EXPECT_EQ(r.queries, o.counts());
            EXPECT_LE(r.r_min, r.r_mean);
            EXPECT_LE(r.r_mean, r.r_max);
            return std::fabs(r.estimate - kl) <= eps;
        });
        EXPECT_GE(ok, 2.0 / 3) << "KL=" << kl;
    }
}

TEST(EstimateKLGlobal, ProductPairAtFineAccuracy) {
    // Ber(0.6)^4 against Ber(0.5)^4 at eps = 0.05. A fixed small entropy
    // sample size keeps the run short; G-hat carries the accuracy here.
    auto mu = model_spec::uniform(4, 2);
    auto pi = model_spec::product(std::vector<std::vector<double>>(4, {0.4, 0.6}));
    const double kl = 4 * bernoulli_kl(0.6, 0.5);
    EXPECT_NEAR(kl, 0.0807, 2e-4);
    kl_estimate_options opt;
    opt.sample_scale = 0.002;
    opt.entropy.samples = [](std::size_t, double, double) -> std::uint64_t { return 100000; };
    auto prov = exact_prefix_provider(mu);
    const double ok = fraction(3, [&](std::uint64_t t) {
        oracle o(pi, oracle_mode::subcube, backend::exact(), derive_seed(42, t));
        splitmix64 rng(derive_seed(43, t));
        return std::fabs(estimate_kl_global(mu, prov, 0.5, o, 0.05, rng, opt).estimate - kl) <= 0.05;
    });
    EXPECT_GE(ok, 2.0 / 3);
}

TEST(EstimateKLGlobal, SupportViolationFlag) {
    auto mu = model_spec::product({{0.5, 0.5}, {1.0, 0.0}, {0.5, 0.5}});
    auto pi = model_spec::uniform(3, 2);
    oracle o(pi, oracle_mode::subcube, backend::exact(), 1);
    splitmix64 rng(2);
    auto r = estimate_kl_global(mu, exact_prefix_provider(mu), 0.5, o, 1.0, rng);
    EXPECT_TRUE(r.support_violation);
    EXPECT_EQ(tolerant_kl_verdict(r, 10.0, 1.0), verdict::far);
}

TEST(EstimateKLGlobal, TolerantThreshold) {
    kl_global_result r;
    r.estimate = 0.74;
    EXPECT_EQ(tolerant_kl_verdict(r, 0.5, 0.5), verdict::equal);
    r.estimate = 0.75;
    EXPECT_EQ(tolerant_kl_verdict(r, 0.5, 0.5), verdict::far);
}

TEST(EstimateKLGlobal, NeedsSubcubeAccess) {
    auto mu = model_spec::uniform(3, 2);
    oracle o(mu, oracle_mode::coordinate, backend::exact(), 1);
    splitmix64 rng(2);
    EXPECT_THROW(estimate_kl_global(mu, exact_prefix_provider(mu), 0.5, o, 1.0, rng), mode_unsupported);
}

TEST(SubcubeTester, ScheduleIsAlgorithmOnesWithConstantOne) {
    for (double b: {0.5, 0.3, 0.05})
        for (double eps: {0.25, 1.0})
            for (std::size_t n: {4, 8, 20}) {
                at_parameters p;
                p.C = 1;
                p.eta = b;
                p.eps = eps;
                p.n = n;
                auto a = make_schedule(p);
                auto s = subcube_schedule(b, eps, n);
                EXPECT_EQ(a.L, s.L);
                EXPECT_EQ(a.delta, s.delta);
                EXPECT_EQ(a.eps_prime, s.eps_prime);
                ASSERT_EQ(a.levels.size(), s.levels.size());
                for (std::size_t l = 0; l < a.levels.size(); ++l) {
                    EXPECT_EQ(a.levels[l].T, s.levels[l].T);
                    EXPECT_EQ(a.levels[l].eps, s.levels[l].eps);
                }
            }
}

TEST(SubcubeTester, IsingPathNull) {
    auto mu = ising_path6();
    auto prof = balance_profile(mu, true);
    ASSERT_TRUE(prof.b);
    EXPECT_LE(subcube_far_count(mu, mu, exact_prefix_provider(mu), *prof.b, 1.0, 15), 5);
}

TEST(SubcubeTester, SubcubeBadRejected) {
    auto mu = model_spec::uniform(8, 2);
    auto pi = model_spec::subcube_bad(8, {3}, {1, 0, 0, 1, 1, 0, 1, 0});
    EXPECT_NEAR(kl_divergence(pi, mu), std::log(2.0) / 2 * 7, 1e-12);
    EXPECT_GE(subcube_far_count(mu, pi, exact_prefix_provider(mu), 0.5, 1.0, 15), 10);
}

TEST(SubcubeTester, MixtureComponentRejected) {
    std::vector<std::vector<double>> c1(6, {0.9, 0.1}), c2(6, {0.1, 0.9});
    std::vector<double> w{0.5, 0.5};
    std::vector<std::vector<std::vector<double>>> comps{c1, c2};
    auto mu = mixture_of_products(w, comps);
    auto pi = model_spec::product(c1);
    const double eps = 0.5;
    ASSERT_GE(kl_divergence(pi, mu), eps);
    auto prof = balance_profile(mu, true);
    EXPECT_GE(subcube_far_count(mu, pi, exact_prefix_provider(mu), *prof.b, eps, 9), 6);
    EXPECT_LE(subcube_far_count(mu, mu, exact_prefix_provider(mu), *prof.b, eps, 9), 3);
}

TEST(SubcubeTester, ApproximateProvider) {
    auto mu = model_spec::uniform(4, 2);
    auto prov = perturbed_prefix_provider(mu, 5);
    EXPECT_LE(subcube_far_count(mu, mu, prov, 0.5, 1.0, 6, subcube_target::approximate), 2);
    auto pi = model_spec::subcube_bad(4, {2}, {0, 0, 1, 1});
    ASSERT_GE(kl_divergence(pi, mu), 1.0);
    EXPECT_GE(subcube_far_count(mu, pi, prov, 0.5, 1.0, 6, subcube_target::approximate), 4);
}

TEST(SubcubeTester, ReversedOrderNull) {
    auto mu = ising_path6();
    auto prov = exact_prefix_provider(mu, {5, 4, 3, 2, 1, 0});
    auto prof = balance_profile(mu);
    EXPECT_LE(subcube_far_count(mu, mu, prov, *prof.b, 1.0, 9), 3);
}

TEST(SubcubeTester, Errors) {
    auto mu = model_spec::uniform(4, 2);
    splitmix64 rng(1);
    oracle coord(mu, oracle_mode::coordinate, backend::exact(), 1);
    EXPECT_THROW(identity_test_subcube(mu, exact_prefix_provider(mu), 0.5, 1.0, coord, rng), mode_unsupported);
    oracle other(model_spec::uniform(5, 2), oracle_mode::subcube, backend::exact(), 1);
    EXPECT_THROW(identity_test_subcube(mu, exact_prefix_provider(mu), 0.5, 1.0, other, rng), dimension_mismatch);
}
