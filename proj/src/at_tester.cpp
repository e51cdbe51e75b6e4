#include "idt/at_tester.hpp"

#include "idt/constants.hpp"
#include "idt/errors.hpp"

#include <cmath>

namespace idt {

std::size_t reverse_markov_levels(double eps, double M) {
    if (!(eps > 0) || !(M > 0)) throw invalid_range("reverse Markov needs eps, M > 0");
    if (M < eps) throw invalid_range("reverse Markov needs M >= eps");
    return std::size_t(std::ceil(std::log2(M / eps) - 1e-12));
}

schedule make_schedule(const at_parameters& p) {
    if (!(p.C >= 1)) throw invalid_range("tensorization constant C must be >= 1");
    if (!(p.eta > 0 && p.eta <= 0.5)) throw invalid_range("eta must lie in (0, 1/2]");
    if (!(p.eps > 0)) throw invalid_range("eps must be positive");
    if (p.n == 0) throw invalid_range("n must be positive");
    if (!(p.budget_scale > 0)) throw invalid_range("budget_scale must be positive");
    schedule s;
    s.eps_prime = p.eps / (p.C * double(p.n));
    const double M = std::log(1.0 / p.eta);
    s.L = M >= s.eps_prime ? reverse_markov_levels(s.eps_prime, M) : 0;
    s.delta = std::ldexp(1.0, -int(2 * s.L + 6));
    for (std::size_t l = 0; l <= s.L; ++l) {
        schedule_level lv;
        lv.eps = std::ldexp(s.eps_prime, int(l) - 1);
        lv.T = std::uint64_t(std::ceil(p.budget_scale * std::ldexp(double(s.L + 1), int(l) + 2) - 1e-9));
        lv.T = std::max<std::uint64_t>(lv.T, 1);
        s.levels.push_back(lv);
    }
    return s;
}

double subtest_delta(std::size_t n) noexcept {
    const double d = 1.0 / (double(n) * double(n) * double(n));
    return std::min(d, 1.0 / 27.0);
}

double theorem_query_form(const at_parameters& p) {
    const double r = double(p.n) / p.eps;
    const double lg = std::max(1.0, std::log2(r));
    return p.C * std::log(1.0 / p.eta) * r * lg * lg * lg;
}

at_result run_levels(const schedule& s, const std::function<verdict(double)>& pair_test) {
    at_result r;
    for (const auto& lv: s.levels) {
        ++r.levels_visited;
        for (std::uint64_t t = 0; t < lv.T; ++t) {
            ++r.pairs;
            if (pair_test(lv.eps) == verdict::far) {
                r.v = verdict::far;
                return r;
            }
        }
    }
    return r;
}

namespace {

void require_coordinate(const model_spec& mu, const oracle& o) {
    if (!permits(o.mode(), oracle_mode::coordinate)) throw mode_unsupported("the coordinate tester needs Coordinate access");
    if (o.model().n() != mu.n() || o.model().k() != mu.k()) throw dimension_mismatch("visible and hidden models differ in shape");
}

} // namespace

at_result identity_test_coordinate(const model_spec& mu, const at_parameters& p, oracle& o, splitmix64& rng) {
    require_coordinate(mu, o);
    const auto s = make_schedule(p);
    const double delta = subtest_delta(mu.n());
    const auto n = mu.n();
    bool violation = false;
    auto r = run_levels(s, [&](double eps_l) {
        auto x = o.draw_general();
        const auto i = std::size_t(rng.below(n));
        // x outside supp(mu) certifies pi != mu.
        if (!std::isfinite(mu.log_weight(x))) {
            violation = true;
            return verdict::far;
        }
        auto pin = pinning::all_but(x, i);
        small_distribution q(mu.conditional_marginal(i, pin));
        sample_stream ps([&] { return o.draw_coordinate(i, pin); });
        return amplify([&] { return small_domain_kl_test(q, ps, eps_l, rng); }, delta);
    });
    r.support_violation = violation;
    r.queries = o.counts();
    return r;
}

std::uint64_t tv_stage1_samples(double eps_tv) {
    if (!(eps_tv > 0 && eps_tv <= 1)) throw invalid_range("eps_tv must lie in (0, 1]");
    return std::uint64_t(std::ceil(2.0 * std::log(3.0) / eps_tv - 1e-12)) * std::uint64_t(constants().tv_stage1_margin);
}

at_result identity_test_tv(const model_spec& mu, const at_parameters& p, oracle& o, splitmix64& rng) {
    require_coordinate(mu, o);
    const auto m1 = tv_stage1_samples(p.eps);
    for (std::uint64_t j = 0; j < m1; ++j) {
        if (!std::isfinite(mu.log_weight(o.draw_general()))) {
            at_result r;
            r.v = verdict::far;
            r.support_violation = true;
            r.queries = o.counts();
            return r;
        }
    }
    auto kl_params = p;
    kl_params.eps = p.eps * p.eps / 2;
    return identity_test_coordinate(mu, kl_params, o, rng);
}

} // namespace idt
