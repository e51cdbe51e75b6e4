#include "idt/subcube.hpp"

#include "idt/constants.hpp"
#include "idt/errors.hpp"
#include "idt/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace idt {

prefix_provider::prefix_provider(std::vector<std::size_t> order, function f) : order_(std::move(order)), f_(std::move(f)) {
    std::vector<bool> seen(order_.size(), false);
    for (auto c: order_) {
        if (c >= order_.size() || seen[c]) throw invalid_range("prefix provider order is not a permutation");
        seen[c] = true;
    }
}

approx_target prefix_provider::target(std::size_t j, std::span<const symbol> prefix) const {
    return [f = f_, j, pre = configuration(prefix.begin(), prefix.end())](double acc, double delta) {
        return f(j, pre, acc, delta);
    };
}

pinning prefix_pinning(std::span<const std::size_t> order, std::span<const symbol> x, std::size_t len) {
    pinning pin(order.size());
    for (std::size_t j = 0; j < len; ++j) pin.set(order[j], x[j]);
    return pin;
}

namespace {

std::vector<std::size_t> resolve_order(const model_spec& mu, std::vector<std::size_t> order) {
    if (order.empty()) {
        order.resize(mu.n());
        std::iota(order.begin(), order.end(), std::size_t(0));
    }
    if (order.size() != mu.n()) throw dimension_mismatch("ordering length differs from n");
    return order;
}

std::vector<double> exact_prefix_marginal(const model_spec& mu, const std::vector<std::size_t>& order, std::size_t j,
                                          std::span<const symbol> prefix) {
    if (j >= order.size() || prefix.size() != j) throw dimension_mismatch("prefix length must equal the position");
    return mu.conditional_marginal(order[j], prefix_pinning(order, prefix, j));
}

// Renormalize and push the rounding residue onto the largest mass so the
// sum check in small_distribution passes.
small_distribution normalized(std::vector<double> m) {
    double s = compensated_sum(m);
    for (auto& v: m) v /= s;
    auto big = std::size_t(std::max_element(m.begin(), m.end()) - m.begin());
    kahan_sum rest;
    for (std::size_t a = 0; a < m.size(); ++a)
        if (a != big) rest.add(m[a]);
    m[big] = 1 - rest.value();
    return small_distribution(std::move(m));
}

} // namespace

prefix_provider exact_prefix_provider(const model_spec& mu, std::vector<std::size_t> order) {
    order = resolve_order(mu, std::move(order));
    return prefix_provider(order, [mu, order](std::size_t j, std::span<const symbol> prefix, double, double) {
        return normalized(exact_prefix_marginal(mu, order, j, prefix));
    });
}

prefix_provider perturbed_prefix_provider(const model_spec& mu, std::uint64_t seed, std::vector<std::size_t> order) {
    order = resolve_order(mu, std::move(order));
    return prefix_provider(order, [mu, order, seed](std::size_t j, std::span<const symbol> prefix, double acc, double) {
        auto q = exact_prefix_marginal(mu, order, j, prefix);
        if (acc <= 0) return normalized(std::move(q));
        std::uint64_t h = splitmix64::mix(seed ^ (j + 1));
        for (auto a: prefix) h = splitmix64::mix(h ^ std::uint64_t(a + 7));
        for (std::size_t a = 0; a < q.size(); ++a) {
            const double u = double(splitmix64::mix(h + a) >> 11) * 0x1.0p-53 * 2 - 1;
            q[a] *= std::exp(u * acc / 2);
        }
        return normalized(std::move(q));
    });
}

double miller_madow_entropy(std::span<const symbol> samples, std::size_t k) {
    if (k < 2) throw invalid_range("entropy estimation needs k >= 2");
    if (samples.empty()) return 0;
    std::vector<std::uint64_t> counts(k, 0);
    for (auto a: samples) {
        if (a < 0 || std::size_t(a) >= k) throw invalid_range("sample outside the alphabet");
        ++counts[std::size_t(a)];
    }
    const double m = double(samples.size());
    kahan_sum h;
    std::size_t seen = 0;
    for (auto c: counts) {
        if (c == 0) continue;
        ++seen;
        const double f = double(c) / m;
        h.add(-f * std::log(f));
    }
    const double est = h.value() + double(seen - 1) / (2 * m);
    return std::clamp(est, 0.0, std::log(double(k)));
}

std::uint64_t miller_madow_bound(std::size_t k, double eps, double delta) {
    if (!(eps > 0) || !(delta > 0 && delta < 1)) throw invalid_range("entropy accuracy needs eps > 0, delta in (0,1)");
    // Bias: |E H-hat - H| <= (k-1)/m. Fluctuation: one sample moves the
    // estimate by at most (2 ln m + 1)/m, so McDiarmid at eps/2 needs
    // m >= 2 (2 ln m + 1)^2 ln(2/delta) / eps^2.
    const double bias = 2.0 * double(k - 1) / eps;
    double m = std::max(bias, 16.0);
    for (int it = 0; it < 60; ++it) {
        const double c = 2 * std::log(m) + 1;
        const double need = std::max(bias, 2 * c * c * std::log(2 / delta) / (eps * eps));
        if (std::fabs(need - m) < 0.5) break;
        m = need;
    }
    return std::uint64_t(std::ceil(m));
}

std::uint64_t miller_madow_samples(std::size_t k, double eps, double delta) {
    const entropy_row* best = nullptr;
    for (const auto& r: constants().entropy_table) {
        if (r.k < k || r.eps > eps * (1 + 1e-9) || r.delta > delta * (1 + 1e-9)) continue;
        if (!best || r.k < best->k || (r.k == best->k && (r.eps > best->eps || (r.eps == best->eps && r.delta > best->delta))))
            best = &r;
    }
    if (best) return best->m;
    return miller_madow_bound(k, eps, delta);
}

entropy_estimator miller_madow() {
    return {"miller-madow", miller_madow_entropy, miller_madow_samples};
}

namespace {

std::uint64_t scaled(std::uint64_t m, double scale) {
    if (!(scale > 0)) throw invalid_range("sample_scale must be positive");
    return std::max<std::uint64_t>(1, std::uint64_t(std::ceil(double(m) * scale - 1e-9)));
}

double capped_b(double b) {
    if (!(b > 0)) throw invalid_range("b must be positive");
    return std::min(b, 0.5);
}

} // namespace

std::uint64_t estimate_g_samples(double b, double eps) {
    if (!(eps > 0)) throw invalid_range("eps must be positive");
    const double l = std::log(1 / capped_b(b));
    return std::max<std::uint64_t>(1, std::uint64_t(std::ceil(8 * l * l / (eps * eps) - 1e-9)));
}

double estimate_g(const approx_target& q, sample_stream& p, double eps, double b, double sample_scale) {
    const auto m = scaled(estimate_g_samples(b, eps), sample_scale);
    const auto q_hat = q(eps / 2, 0.1);
    kahan_sum s;
    for (std::uint64_t t = 0; t < m; ++t) {
        const auto a = p.next();
        if (a < 0 || std::size_t(a) >= q_hat.k() || q_hat.masses[std::size_t(a)] <= 0)
            throw unsupported_symbol("sample outside the support of q");
        s.add(-std::log(q_hat.masses[std::size_t(a)]));
    }
    return s.value() / double(m);
}

double estimate_g(const small_distribution& q, sample_stream& p, double eps, double sample_scale) {
    return estimate_g([&](double, double) { return q; }, p, eps, q.eta_min, sample_scale);
}

double estimate_entropy(sample_stream& p, std::size_t k, double eps, double delta, const entropy_estimator& est,
                        double sample_scale) {
    const auto m = scaled(est.samples(k, eps, delta), sample_scale);
    std::vector<symbol> xs(m);
    for (auto& a: xs) a = p.next();
    return std::clamp(est.estimate(xs, k), 0.0, std::log(double(k)));
}

double estimate_kl_small(const approx_target& q, std::size_t k, sample_stream& p, double eps, double b,
                         const kl_estimate_options& opt) {
    if (k < 2) {
        // A one-symbol alphabet: both terms vanish, only the support matters.
        estimate_g(q, p, eps / 2, b, opt.sample_scale);
        return 0;
    }
    const double g = estimate_g(q, p, eps / 2, b, opt.sample_scale);
    const double h = estimate_entropy(p, k, eps / 2, 0.1, opt.entropy, opt.sample_scale);
    return g - h;
}

double estimate_kl_small(const small_distribution& q, sample_stream& p, double eps, const kl_estimate_options& opt) {
    return estimate_kl_small([&](double, double) { return q; }, q.k(), p, eps, q.eta_min, opt);
}

double estimate_kl_small_median(const approx_target& q, std::size_t k, sample_stream& p, double eps, double b,
                                double delta, const kl_estimate_options& opt) {
    auto reps = scaled(amplify_reps(delta), opt.sample_scale);
    if (reps % 2 == 0) ++reps;
    std::vector<double> r(reps);
    for (auto& v: r) v = estimate_kl_small(q, k, p, eps, b, opt);
    std::nth_element(r.begin(), r.begin() + std::ptrdiff_t(reps / 2), r.end());
    return r[reps / 2];
}

std::uint64_t kl_global_rounds(std::size_t n, double b, double eps) {
    if (!(eps > 0) || n == 0) throw invalid_range("kl_global_rounds needs n >= 1 and eps > 0");
    const double l = std::log(1 / capped_b(b));
    const double nn = double(n);
    return std::max<std::uint64_t>(1, std::uint64_t(std::ceil(8 * nn * nn * l * l / (eps * eps) - 1e-9)));
}

namespace {

void require_subcube(const model_spec& mu, const prefix_provider& provider, const oracle& o) {
    if (!permits(o.mode(), oracle_mode::subcube)) throw mode_unsupported("this procedure needs Subcube access");
    if (o.model().n() != mu.n() || o.model().k() != mu.k()) throw dimension_mismatch("visible and hidden models differ in shape");
    if (provider.n() != mu.n()) throw dimension_mismatch("provider ordering length differs from n");
}

// One pair (j, x_{order[0..j-1]}): the prefix values in ordering position and
// the stream of order[j]-values under the prefix pinning.
struct prefix_pair {
    std::size_t j = 0;
    configuration prefix;
    pinning pin;
    std::size_t slot = 0; // index of order[j] among the free coordinates
};

prefix_pair make_pair(const prefix_provider& provider, std::span<const symbol> x, std::size_t j) {
    const auto& order = provider.order();
    prefix_pair r;
    r.j = j;
    r.prefix.resize(j);
    for (std::size_t t = 0; t < j; ++t) r.prefix[t] = x[order[t]];
    r.pin = prefix_pinning(order, r.prefix, j);
    for (std::size_t c = 0; c < order[j]; ++c)
        if (!r.pin.pinned(c)) ++r.slot;
    return r;
}

sample_stream pair_stream(oracle& o, const prefix_pair& pr) {
    return sample_stream([&o, &pr] { return o.draw_subcube(pr.pin)[pr.slot]; });
}

} // namespace

kl_global_result estimate_kl_global(const model_spec& mu, const prefix_provider& provider, double b, oracle& o,
                                    double eps, splitmix64& rng, const kl_estimate_options& opt) {
    require_subcube(mu, provider, o);
    const auto n = mu.n();
    kl_global_result res;
    res.rounds = kl_global_rounds(n, b, eps);
    const double acc = eps / (2 * double(n));
    const double delta = 1.0 / (10.0 * double(res.rounds));
    kahan_sum sum, sq;
    res.r_min = INFINITY;
    res.r_max = -INFINITY;
    for (std::uint64_t l = 0; l < res.rounds; ++l) {
        const auto x = o.draw_general();
        if (!std::isfinite(mu.log_weight(x))) {
            res.support_violation = true;
            break;
        }
        const auto pr = make_pair(provider, x, std::size_t(rng.below(n)));
        auto ps = pair_stream(o, pr);
        double r = 0;
        try {
            r = estimate_kl_small_median(provider.target(pr.j, pr.prefix), mu.k(), ps, acc, b, delta, opt);
        } catch (const zero_probability_pinning&) {
            res.support_violation = true;
            break;
        } catch (const unsupported_symbol&) {
            res.support_violation = true;
            break;
        }
        sum.add(r);
        sq.add(r * r);
        res.r_min = std::min(res.r_min, r);
        res.r_max = std::max(res.r_max, r);
    }
    res.queries = o.counts();
    if (res.support_violation) {
        res.estimate = INFINITY;
        return res;
    }
    const double L = double(res.rounds);
    res.r_mean = sum.value() / L;
    res.r_sd = std::sqrt(std::max(0.0, sq.value() / L - res.r_mean * res.r_mean));
    res.estimate = double(n) * res.r_mean;
    return res;
}

verdict tolerant_kl_verdict(const kl_global_result& r, double s, double eps) noexcept {
    if (r.support_violation) return verdict::far;
    return r.estimate >= s + eps / 2 ? verdict::far : verdict::equal;
}

schedule subcube_schedule(double b, double eps, std::size_t n, double budget_scale) {
    at_parameters p;
    p.C = 1;
    p.eta = capped_b(b);
    p.eps = eps;
    p.n = n;
    p.budget_scale = budget_scale;
    return make_schedule(p);
}

at_result identity_test_subcube(const model_spec& mu, const prefix_provider& provider, double b, double eps,
                                oracle& o, splitmix64& rng, subcube_target target, double budget_scale) {
    require_subcube(mu, provider, o);
    const auto s = subcube_schedule(b, eps, mu.n(), budget_scale);
    const double delta = subtest_delta(mu.n());
    const auto n = mu.n();
    bool violation = false;
    auto r = run_levels(s, [&](double eps_l) {
        const auto x = o.draw_subcube(pinning(n));
        if (!std::isfinite(mu.log_weight(x))) {
            violation = true;
            return verdict::far;
        }
        const auto pr = make_pair(provider, x, std::size_t(rng.below(n)));
        auto ps = pair_stream(o, pr);
        try {
            if (target == subcube_target::approximate) {
                auto t = provider.target(pr.j, pr.prefix);
                return amplify([&] { return robust_kl_test(t, ps, eps_l, rng); }, delta);
            }
            const auto q = provider.exact(pr.j, pr.prefix);
            return amplify([&] { return small_domain_kl_test(q, ps, eps_l, rng); }, delta);
        } catch (const zero_probability_pinning&) {
            violation = true;
            return verdict::far;
        }
    });
    r.support_violation = violation;
    r.queries = o.counts();
    return r;
}

} // namespace idt
