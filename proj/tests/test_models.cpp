#include "idt/analysis.hpp"
#include "idt/errors.hpp"
#include "idt/kernels.hpp"
#include "idt/model.hpp"
#include "idt/model_io.hpp"
#include "idt/numeric.hpp"
#include "idt/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace idt;

namespace {

model_spec random_table(std::size_t n, std::size_t k, splitmix64& rng, double zero_prob = 0.0) {
    auto count = state_count(n, k);
    std::vector<double> m(count);
    double s = 0;
    for (auto& v: m) {
        v = rng.uniform01() < zero_prob ? 0.0 : rng.uniform01() + 1e-3;
        s += v;
    }
    if (s == 0) {
        m[0] = 1;
        s = 1;
    }
    for (auto& v: m) v /= s;
    double t = 0;
    for (std::size_t i = 0; i + 1 < m.size(); ++i) t += m[i];
    m.back() = std::max(0.0, 1.0 - t);
    return model_spec::explicit_table(n, k, m);
}

model_spec single_edge(double beta) { return model_spec::ising(2, {{0, 1, beta}}, {}); }

} // namespace

TEST(Mass, UniformIsOneOverKToN) {
    auto u = model_spec::uniform(3, 2);
    EXPECT_DOUBLE_EQ(u.mass(configuration{0, 1, 0}), 1.0 / 8);
}

TEST(Mass, ProductRule) {
    auto p = model_spec::product({{0.7, 0.3}, {0.7, 0.3}, {0.7, 0.3}});
    EXPECT_NEAR(p.mass(configuration{0, 0, 1}), 0.147, 1e-15);
}

TEST(Mass, IsingSingleEdgeByHand) {
    const double expected = std::exp(0.5) / (2 * std::exp(0.5) + 2 * std::exp(-0.5));
    EXPECT_NEAR(expected, 0.3655, 1e-4);
    EXPECT_NEAR(single_edge(0.5).mass(configuration{0, 0}), expected, 1e-14);
}

TEST(Mass, NormalizationAcrossVariants) {
    splitmix64 rng(3);
    std::vector<model_spec> models = {
        model_spec::uniform(5, 3),
        model_spec::product({{0.2, 0.5, 0.3}, {0.9, 0.05, 0.05}}),
        model_spec::ising(5, {{0, 1, 0.4}, {1, 2, -0.7}, {2, 3, 1.0}, {3, 4, 0.2}, {4, 0, -0.3}}, {0.1, 0, -0.2, 0.3, 0}),
        random_table(4, 3, rng, 0.3),
        model_spec::subcube_bad(9, {1, 4, 7}, {1, 0, 1, 1, 0, 0, 1, 0, 1}),
        model_spec::matched_ising(7, {{0, 3}, {1, 2}, {4, 6}}, 0.8),
    };
    for (const auto& m: models) EXPECT_NEAR(compensated_sum(m.table()), 1.0, 1e-10) << to_string(m.kind());
}

TEST(Mass, DimensionMismatch) {
    auto u = model_spec::uniform(3, 2);
    EXPECT_THROW(u.mass(configuration{0, 1}), dimension_mismatch);
    EXPECT_THROW(u.mass(configuration{0, 1, 2}), dimension_mismatch);
}

TEST(Mass, IsingNormalizerGuard) {
    auto big = model_spec::ising(30, {{0, 1, 0.1}}, {});
    EXPECT_THROW(big.mass(configuration(30, 0)), scale_guard_exceeded);
    // Local conditionals need no normalizer.
    auto pin = pinning::all_but(configuration(30, 0), 1);
    auto c = big.conditional_marginal(1, pin);
    EXPECT_NEAR(c[0], (1 + std::tanh(0.1)) / 2, 1e-14);
}

TEST(Validation, RejectsBadModels) {
    EXPECT_THROW(model_spec::product({{0.6, 0.3}}), invalid_model);
    EXPECT_THROW(model_spec::ising(3, {{0, 0, 1.0}}, {}), invalid_model);
    EXPECT_THROW(model_spec::ising(3, {{0, 1, 1.0}, {1, 0, 0.5}}, {}), invalid_model);
    EXPECT_THROW(model_spec::ising(3, {{0, 1, INFINITY}}, {}), invalid_model);
    EXPECT_THROW(model_spec::explicit_table(2, 2, {0.5, 0.5}), invalid_model);
    EXPECT_THROW(model_spec::explicit_table(23, 2, {}), scale_guard_exceeded);
    EXPECT_THROW(model_spec::subcube_bad(4, {0, 1, 2, 3}, {0, 0, 0, 0}), invalid_model);
    EXPECT_THROW(model_spec::matched_ising(4, {{0, 1}, {1, 2}}, 0.3), invalid_model);
}

TEST(ConditionalMarginal, IsingIsolatedVertexIsFair) {
    auto m = model_spec::ising(3, {{0, 1, 0.9}}, {});
    auto c = m.conditional_marginal(2, pinning::all_but(configuration{1, 0, 0}, 2));
    EXPECT_DOUBLE_EQ(c[0], 0.5);
}

TEST(ConditionalMarginal, IsingNeighbourPinnedPlus) {
    for (double beta: {0.3, 1.0, -0.8}) {
        auto c = single_edge(beta).conditional_marginal(1, pinning::all_but(configuration{0, 0}, 1));
        EXPECT_NEAR(c[0], (1 + std::tanh(beta)) / 2, 1e-14);
    }
}

TEST(ConditionalMarginal, UniformAnyPinning) {
    auto u = model_spec::uniform(4, 2);
    pinning pin(4);
    pin.set(0, 1);
    auto c = u.conditional_marginal(2, pin);
    EXPECT_EQ(c, (std::vector<double>{0.5, 0.5}));
}

TEST(ConditionalMarginal, AgreesWithEnumerationOnAllPinnings) {
    splitmix64 rng(11);
    std::vector<model_spec> models = {
        random_table(3, 3, rng, 0.25),
        model_spec::ising(4, {{0, 1, 0.5}, {1, 2, -1.0}, {2, 3, 0.7}}, {0.2, -0.1, 0, 0.4}),
        model_spec::subcube_bad(5, {0, 3}, {1, 0, 0, 1, 1}),
        model_spec::matched_ising(5, {{0, 4}, {1, 3}}, 0.6),
        model_spec::product({{0.3, 0.7}, {0.0, 1.0}, {0.5, 0.5}}),
    };
    for (const auto& m: models) {
        const auto n = m.n(), k = m.k();
        const auto& t = m.table();
        // every pinning: each coordinate free, or pinned to a symbol
        auto pin_count = state_count(n, k + 1);
        for (std::uint64_t code = 0; code < pin_count; ++code) {
            auto digits = decode(code, n, k + 1);
            pinning pin(n);
            for (std::size_t j = 0; j < n; ++j)
                if (digits[j] < symbol(k)) pin.set(j, digits[j]);
            for (std::size_t i = 0; i < n; ++i) {
                if (pin.pinned(i)) continue;
                std::vector<double> w(k, 0.0);
                double total = 0;
                for (std::uint64_t idx = 0; idx < t.size(); ++idx) {
                    auto x = decode(idx, n, k);
                    if (!pin.agrees(x)) continue;
                    w[std::size_t(x[i])] += t[idx];
                    total += t[idx];
                }
                if (total <= 0) {
                    EXPECT_THROW(m.conditional_marginal(i, pin), zero_probability_pinning);
                    continue;
                }
                auto c = m.conditional_marginal(i, pin);
                for (std::size_t a = 0; a < k; ++a) ASSERT_NEAR(c[a], w[a] / total, 1e-12) << to_string(m.kind());
            }
        }
    }
}

TEST(Divergence, KlSelfIsZero) {
    auto m = model_spec::ising(4, {{0, 1, 0.5}, {2, 3, 0.5}}, {});
    EXPECT_NEAR(kl_divergence(m, m), 0.0, 1e-15);
    EXPECT_NEAR(tv_distance(m, m), 0.0, 1e-15);
}

TEST(Divergence, BernoulliKlByFormula) {
    auto p = model_spec::explicit_table(1, 2, {0.9, 0.1});
    auto q = model_spec::explicit_table(1, 2, {0.5, 0.5});
    EXPECT_NEAR(kl_divergence(p, q), 0.9 * std::log(1.8) + 0.1 * std::log(0.2), 1e-15);
    EXPECT_NEAR(kl_divergence(p, q), 0.36806, 1e-5);
}

TEST(Divergence, SubcubeBadKlClosedForm) {
    EXPECT_NEAR(std::log(2.0) / 8 * (64 - 3), 5.2853, 1e-4);
    for (std::size_t n = 4; n <= 12; ++n)
        for (std::size_t t = 1; t < n; t += 2) {
            std::vector<std::size_t> A;
            for (std::size_t c = 0; c < t; ++c) A.push_back((c * 5 + 1) % n);
            std::sort(A.begin(), A.end());
            A.erase(std::unique(A.begin(), A.end()), A.end());
            if (A.size() != t) continue;
            configuration sigma(n);
            for (std::size_t c = 0; c < n; ++c) sigma[c] = symbol(c % 3 == 0);
            auto bad = model_spec::subcube_bad(n, A, sigma);
            auto u = model_spec::uniform(n, 2);
            EXPECT_NEAR(kl_divergence(bad, u), std::log(2.0) * double(n - t) / std::ldexp(1.0, int(t)), 1e-12);
        }
}

TEST(Divergence, KlInfiniteOffSupport) {
    auto p = model_spec::explicit_table(1, 2, {0.5, 0.5});
    auto q = model_spec::explicit_table(1, 2, {1.0, 0.0});
    EXPECT_TRUE(std::isinf(kl_divergence(p, q)));
}

TEST(Divergence, SubcubeBadTvByEnumeration) {
    auto bad = model_spec::subcube_bad(10, {2, 5, 8}, configuration(10, 1));
    auto u = model_spec::uniform(10, 2);
    EXPECT_NEAR(tv_distance(bad, u), (1 - std::ldexp(1.0, -7)) * 0.125, 1e-15);
}

TEST(Divergence, MatchedPairTv) {
    for (double beta: {0.2, 0.9, -0.5}) {
        auto m = model_spec::matched_ising(2, {{0, 1}}, beta);
        EXPECT_NEAR(tv_distance(m, model_spec::uniform(2, 2)), 0.5 * std::fabs(std::tanh(beta)), 1e-15);
    }
}

TEST(Divergence, PinskerOnRandomPairs) {
    splitmix64 rng(5);
    for (int r = 0; r < 200; ++r) {
        auto p = random_table(3, 2, rng);
        auto q = random_table(3, 2, rng);
        double tv = tv_distance(p, q);
        EXPECT_GE(kl_divergence(p, q), 2 * tv * tv - 1e-10);
    }
}

TEST(Balance, Uniform) {
    auto b = balance_profile(model_spec::uniform(4, 2));
    EXPECT_DOUBLE_EQ(b.eta, 0.5);
    ASSERT_TRUE(b.b);
    EXPECT_DOUBLE_EQ(*b.b, 0.5);
}

TEST(Balance, ProductMinCoordinateMass) {
    auto p = model_spec::product(std::vector<std::vector<double>>(4, {0.7, 0.3}));
    auto b = balance_profile(p);
    EXPECT_NEAR(b.eta, 0.3, 1e-14);
    EXPECT_NEAR(*b.b, 0.3, 1e-14);
}

TEST(Balance, IsingSingleEdge) {
    auto b = balance_profile(single_edge(1.0));
    EXPECT_NEAR(b.eta, std::exp(-1.0) / (std::exp(1.0) + std::exp(-1.0)), 1e-14);
    EXPECT_NEAR(b.eta, 0.1192, 1e-4);
    // Marginals under the empty pinning are 1/2, so b equals eta here.
    EXPECT_NEAR(*b.b, b.eta, 1e-14);
}

TEST(Balance, PrefixOnlyIsNoSmallerThanFull) {
    auto m = model_spec::ising(4, {{0, 1, 0.8}, {1, 2, 0.8}, {2, 3, -0.5}}, {0.3, 0, 0, 0});
    auto full = balance_profile(m);
    auto prefix = balance_profile(m, true);
    EXPECT_TRUE(prefix.prefix_only);
    EXPECT_GE(*prefix.b + 1e-15, *full.b);
    EXPECT_LE(*prefix.b, prefix.eta);
}

TEST(Tensorization, ProductHoldsWithConstantOne) {
    splitmix64 rng(17);
    for (int r = 0; r < 200; ++r) {
        std::size_t n = 1 + rng.below(4), k = 2 + rng.below(2);
        std::vector<std::vector<double>> coords(n);
        for (auto& c: coords) {
            double s = 0;
            c.resize(k);
            for (auto& v: c) s += v = rng.uniform01() + 0.05;
            for (auto& v: c) v /= s;
            double t = 0;
            for (std::size_t a = 0; a + 1 < k; ++a) t += c[a];
            c.back() = 1 - t;
        }
        auto mu = model_spec::product(coords);
        auto pi = random_table(n, k, rng, 0.2);
        auto res = verify_tensorization(mu, pi, 1.0);
        EXPECT_TRUE(res.holds) << res.lhs << " " << res.rhs;
    }
}

TEST(Tensorization, IdenticalGivesZero) {
    auto m = single_edge(0.7);
    auto res = verify_tensorization(m, m, 1.0);
    EXPECT_NEAR(res.lhs, 0, 1e-15);
    EXPECT_NEAR(res.rhs, 0, 1e-15);
    EXPECT_TRUE(res.holds);
}

TEST(Tensorization, SupportViolationThrows) {
    auto mu = model_spec::explicit_table(1, 2, {1.0, 0.0});
    auto pi = model_spec::explicit_table(1, 2, {0.5, 0.5});
    EXPECT_THROW(verify_tensorization(mu, pi, 1.0), support_violation);
    EXPECT_THROW(chain_rule_decomposition(mu, pi), support_violation);
}

TEST(ChainRule, SumsToKl) {
    splitmix64 rng(23);
    for (int r = 0; r < 100; ++r) {
        std::size_t n = 1 + rng.below(3), k = 2 + rng.below(2);
        auto mu = random_table(n, k, rng);
        auto pi = random_table(n, k, rng, 0.3);
        auto terms = chain_rule_decomposition(mu, pi);
        double s = 0;
        for (double v: terms) s += v;
        EXPECT_NEAR(s, kl_divergence(pi, mu), 1e-10);
    }
}

TEST(ChainRule, IdenticalAllZero) {
    auto m = model_spec::product({{0.2, 0.8}, {0.6, 0.4}});
    for (double v: chain_rule_decomposition(m, m)) EXPECT_NEAR(v, 0, 1e-15);
}

TEST(ChainRule, SubcubeBadAgainstUniform) {
    auto pi = model_spec::subcube_bad(8, {3}, {0, 1, 0, 1, 1, 0, 0, 1});
    auto terms = chain_rule_decomposition(model_spec::uniform(8, 2), pi);
    double s = 0;
    for (double v: terms) s += v;
    EXPECT_NEAR(s, std::log(2.0) / 2 * 7, 1e-12);
}

TEST(Dobrushin, ProductHasNoInfluence) {
    auto a = dobrushin_influence(model_spec::product({{0.2, 0.8}, {0.6, 0.4}, {0.5, 0.5}}));
    for (const auto& row: a)
        for (double v: row) EXPECT_NEAR(v, 0, 1e-15);
    EXPECT_NEAR(spectral_norm(a), 0, 1e-15);
}

TEST(Dobrushin, IsingPathInfluenceIsTanh) {
    // For a tree with no fields, a_uv = tanh|beta_uv| on edges.
    const double beta = 0.3;
    auto m = model_spec::ising(3, {{0, 1, beta}, {1, 2, beta}}, {});
    auto a = dobrushin_influence(m);
    EXPECT_NEAR(a[0][1], std::tanh(beta), 1e-12);
    EXPECT_NEAR(a[0][2], 0, 1e-12);
    // ||A||_2 for the path adjacency scaled by tanh(beta) is sqrt(2) tanh(beta).
    EXPECT_NEAR(spectral_norm(a), std::sqrt(2.0) * std::tanh(beta), 1e-9);
    EXPECT_DOUBLE_EQ(dobrushin_constant(0.25, 0.5), 16.0);
}

TEST(ModelIo, RoundTripsEveryVariant) {
    std::vector<model_spec> models = {
        model_spec::uniform(3, 4),
        model_spec::product({{0.25, 0.75}, {0.5, 0.5}}),
        model_spec::ising(3, {{0, 1, 0.25}, {1, 2, -0.5}}, {0.1, 0.0, 0.2}),
        model_spec::explicit_table(1, 3, {0.2, 0.3, 0.5}),
        model_spec::subcube_bad(5, {1, 3}, {0, 1, 1, 0, 0}),
        model_spec::matched_ising(4, {{0, 2}, {1, 3}}, 0.4),
    };
    for (const auto& m: models) {
        certificate cert{1.0, 0.3, std::nullopt};
        auto back = model_from_json(model_to_json(m, cert));
        EXPECT_EQ(back.model.kind(), m.kind());
        EXPECT_EQ(back.model.table(), m.table());
        EXPECT_EQ(back.cert.C, 1.0);
        EXPECT_FALSE(back.cert.b);
    }
}

TEST(ModelIo, ErrorsNameTheField) {
    auto field_of = [](const char* text) {
        try {
            model_from_json(nlohmann::json::parse(text));
        } catch (const config_error& e) {
            return e.field();
        }
        return std::string("<none>");
    };
    EXPECT_EQ(field_of(R"({"n":2,"k":2})"), "variant");
    EXPECT_EQ(field_of(R"({"variant":"explicit_table","n":1,"k":2,"masses":[0.5,0.6]})"), "masses");
    EXPECT_EQ(field_of(R"({"variant":"explicit_table","n":1,"k":2})"), "masses");
    EXPECT_EQ(field_of(R"({"variant":"ising","n":2,"edges":[[0,1]]})"), "edges");
    EXPECT_EQ(field_of(R"({"variant":"product","coords":"x"})"), "coords");
    EXPECT_EQ(field_of(R"({"variant":"matched_ising","n":4,"matching":[[0,1],[2,3]]})"), "beta");
    EXPECT_EQ(field_of(R"({"variant":"subcube_bad","n":4,"A":[0,1],"t":3,"sigma":[0,0,0,0]})"), "t");
    EXPECT_EQ(field_of(R"({"variant":"blob","n":4})"), "variant");
}

TEST(Kernels, ParallelMatchesSerial) {
    splitmix64 rng(29);
    std::vector<double> p(1 << 16), q(1 << 16);
    double sp = 0, sq = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        sp += p[i] = rng.uniform01();
        sq += q[i] = rng.uniform01() + 0.01;
    }
    for (auto& v: p) v /= sp;
    for (auto& v: q) v /= sq;
    EXPECT_NEAR(kernels::kl_serial(p, q), kernels::kl_parallel(p, q), 1e-13);
    EXPECT_NEAR(kernels::tv_serial(p, q), kernels::tv_parallel(p, q), 1e-13);
    EXPECT_NEAR(kernels::log_sum_exp_serial(p), kernels::log_sum_exp_parallel(p), 1e-12);
    auto m = model_spec::ising(14, {{0, 1, 0.3}, {5, 9, -0.2}, {12, 13, 0.8}}, {});
    std::vector<double> a(1 << 14), b(1 << 14);
    auto f = [&](std::span<const symbol> x) { return m.log_weight(x); };
    kernels::tabulate_serial(14, 2, f, a);
    kernels::tabulate_parallel(14, 2, f, b);
    EXPECT_EQ(a, b);
}
