#include "idt/testers.hpp"

#include "idt/constants.hpp"
#include "idt/errors.hpp"
#include "idt/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace idt {

std::string_view to_string(verdict v) noexcept { return v == verdict::equal ? "equal" : "far"; }

small_distribution::small_distribution(std::vector<double> m) : masses(std::move(m)) {
    if (masses.empty()) throw invalid_range("distribution over an empty alphabet");
    kahan_sum s;
    double lo = INFINITY;
    for (double v: masses) {
        if (!(v >= 0) || !std::isfinite(v)) throw invalid_range("negative or non-finite mass");
        s.add(v);
        if (v > 0) lo = std::min(lo, v);
    }
    if (std::fabs(s.value() - 1.0) > 1e-12) throw invalid_range("masses sum to " + std::to_string(s.value()));
    eta_min = lo;
}

std::size_t small_distribution::support_size() const noexcept {
    return std::size_t(std::count_if(masses.begin(), masses.end(), [](double v) { return v > 0; }));
}

double small_distribution::l2_norm() const noexcept {
    kahan_sum s;
    for (double v: masses) s.add(v * v);
    return std::sqrt(s.value());
}

sample_stream iid_stream(std::vector<double> masses, splitmix64& rng) {
    std::vector<double> cum(masses.size());
    double acc = 0;
    for (std::size_t a = 0; a < masses.size(); ++a) cum[a] = acc += masses[a];
    return sample_stream([cum = std::move(cum), masses = std::move(masses), &rng] {
        const double u = rng.uniform01() * cum.back();
        std::size_t a = std::size_t(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
        if (a >= cum.size()) a = cum.size() - 1;
        while (a > 0 && masses[a] <= 0) --a;
        return symbol(a);
    });
}

// ---- flattening

symbol flattening::map(symbol a, splitmix64& rng) const {
    if (a < 0 || std::size_t(a) >= copies.size() || copies[std::size_t(a)] == 0)
        throw unsupported_symbol("sample " + std::to_string(a) + " outside the support of q");
    return symbol(offset[std::size_t(a)] + rng.below(copies[std::size_t(a)]));
}

std::vector<double> flattening::apply(std::span<const double> p) const {
    std::vector<double> out(q.k(), 0.0);
    for (std::size_t a = 0; a < copies.size(); ++a) {
        if (copies[a] == 0) {
            if (p[a] > 0) throw unsupported_symbol("p has mass outside the support of q");
            continue;
        }
        for (std::size_t c = 0; c < copies[a]; ++c) out[offset[a] + c] = p[a] / double(copies[a]);
    }
    return out;
}

sample_stream flattening::wrap(sample_stream& p, splitmix64& rng) const {
    return sample_stream([this, &p, &rng] { return map(p.next(), rng); });
}

namespace {

flattening split(const small_distribution& q, const std::vector<std::size_t>& copies) {
    flattening f;
    f.copies = copies;
    f.offset.resize(copies.size());
    std::size_t total = 0;
    for (std::size_t a = 0; a < copies.size(); ++a) {
        f.offset[a] = total;
        total += copies[a];
    }
    std::vector<double> m(total);
    for (std::size_t a = 0; a < copies.size(); ++a)
        for (std::size_t c = 0; c < copies[a]; ++c) m[f.offset[a] + c] = q.masses[a] / double(copies[a]);
    f.q.masses = std::move(m);
    f.q.eta_min = *std::min_element(f.q.masses.begin(), f.q.masses.end());
    return f;
}

} // namespace

flattening flatten_eta(const small_distribution& q, double eta) {
    if (!(eta > 0)) throw invalid_range("flatten_eta needs eta > 0");
    if (q.eta_min < eta * (1 - 1e-12)) throw invalid_range("flatten_eta needs every nonzero mass >= eta");
    std::vector<std::size_t> copies(q.k(), 0);
    for (std::size_t a = 0; a < q.k(); ++a)
        if (q.masses[a] > 0) copies[a] = std::size_t(std::floor(q.masses[a] / eta)) + 1;
    return split(q, copies);
}

flattening flatten_k(const small_distribution& q) {
    const double s = double(q.support_size());
    std::vector<std::size_t> copies(q.k(), 0);
    for (std::size_t a = 0; a < q.k(); ++a)
        if (q.masses[a] > 0) copies[a] = std::size_t(std::floor(s * q.masses[a])) + 1;
    return split(q, copies);
}

// ---- l2 tester

l2_plan l2_identity_plan(const small_distribution& q, double eps2) {
    if (!(eps2 > 0)) throw invalid_range("l2 tester needs eps2 > 0");
    const double c0 = constants().l2_c0;
    l2_plan p;
    p.m = std::uint64_t(std::ceil(c0 * std::max(q.l2_norm() / (eps2 * eps2), 1.0 / eps2)));
    p.cap = 2 * p.m + 10;
    return p;
}

verdict l2_identity_test(const small_distribution& q, sample_stream& p, double eps2, splitmix64& rng) {
    const auto plan = l2_identity_plan(q, eps2);
    const std::uint64_t draws = std::min(poisson(rng, double(plan.m)), plan.cap);
    std::vector<std::uint64_t> counts(q.k(), 0);
    for (std::uint64_t j = 0; j < draws; ++j) {
        auto a = p.next();
        if (a < 0 || std::size_t(a) >= q.k()) throw unsupported_symbol("sample outside the alphabet");
        ++counts[std::size_t(a)];
    }
    const double m = double(plan.m);
    kahan_sum z;
    for (std::size_t a = 0; a < q.k(); ++a) {
        const double d = double(counts[a]) - m * q.masses[a];
        z.add(d * d - double(counts[a]));
    }
    return z.value() >= 0.625 * m * m * eps2 * eps2 ? verdict::far : verdict::equal;
}

// ---- Bernoulli testers

std::uint64_t bernoulli_mean_samples(double q, double gamma, double delta) {
    if (!(q > 0) || !(gamma > 0)) throw invalid_range("mean test needs q > 0 and gamma > 0");
    if (q > 1.0 / (1.0 + gamma) * (1 + 1e-12)) throw invalid_range("mean test needs q <= 1/(1+gamma)");
    const double c = std::max(constants().bernoulli_mean_c, 8.0 * std::log(1.0 / delta));
    return std::uint64_t(std::ceil(c * (1 + gamma) / (gamma * gamma * q) - 1e-9));
}

verdict bernoulli_mean_test(double q, sample_stream& p, double gamma, double delta) {
    const auto m = bernoulli_mean_samples(q, gamma, delta);
    std::uint64_t ones = 0;
    for (std::uint64_t j = 0; j < m; ++j) {
        auto a = p.next();
        if (a != 0 && a != 1) throw unsupported_symbol("mean test sample outside {0,1}");
        ones += std::uint64_t(a);
    }
    return double(ones) / double(m) > (1 + gamma / 2) * q ? verdict::far : verdict::equal;
}

bernoulli_case bernoulli_kl_case(double q, double eps) noexcept {
    if (q > 0.5) q = 1 - q;
    if (eps <= 2 * q) return bernoulli_case::case1;
    const double l = std::log(1.0 / q);
    if (eps <= 2 * q * l) return bernoulli_case::case2;
    if (eps > l) return bernoulli_case::vacuous;
    return bernoulli_case::case3;
}

std::uint64_t bernoulli_kl_samples(double q, double eps) {
    if (!(q > 0 && q < 1) || !(eps > 0)) throw invalid_range("bernoulli_kl_test needs 0 < q < 1 and eps > 0");
    const double qq = std::min(q, 1 - q);
    switch (bernoulli_kl_case(qq, eps)) {
    case bernoulli_case::case1: return std::uint64_t(std::ceil(constants().bernoulli_case1_c / eps));
    case bernoulli_case::case2: return bernoulli_mean_samples(qq, 1.0);
    case bernoulli_case::case3: return bernoulli_mean_samples(qq, eps / (qq * std::log(1.0 / qq)) - 1);
    case bernoulli_case::vacuous: return 0;
    }
    return 0;
}

verdict bernoulli_kl_test(double q, sample_stream& p, double eps) {
    if (!(q > 0 && q < 1) || !(eps > 0)) throw invalid_range("bernoulli_kl_test needs 0 < q < 1 and eps > 0");
    const bool flip = q > 0.5;
    const double qq = flip ? 1 - q : q;
    sample_stream flipped([&p, flip] {
        auto a = p.next();
        if (a != 0 && a != 1) throw unsupported_symbol("bernoulli sample outside {0,1}");
        return flip ? 1 - a : a;
    });
    switch (bernoulli_kl_case(qq, eps)) {
    case bernoulli_case::case1: {
        const auto m = std::uint64_t(std::ceil(constants().bernoulli_case1_c / eps));
        std::uint64_t ones = 0;
        for (std::uint64_t j = 0; j < m; ++j) ones += std::uint64_t(flipped.next());
        const double mean = double(ones) / double(m);
        return std::fabs(mean - qq) <= std::sqrt(eps * qq / 8) ? verdict::equal : verdict::far;
    }
    case bernoulli_case::case2: return bernoulli_mean_test(qq, flipped, 1.0);
    case bernoulli_case::case3:
        return bernoulli_mean_test(qq, flipped, eps / (qq * std::log(1.0 / qq)) - 1);
    case bernoulli_case::vacuous: return verdict::equal;
    }
    return verdict::equal;
}

// ---- general-k KL tester

namespace {

struct reduced {
    small_distribution q;
    std::vector<int> index; // original symbol -> support position, -1 outside
};

reduced reduce_to_support(const small_distribution& q) {
    reduced r;
    r.index.assign(q.k(), -1);
    std::vector<double> m;
    for (std::size_t a = 0; a < q.k(); ++a)
        if (q.masses[a] > 0) {
            r.index[a] = int(m.size());
            m.push_back(q.masses[a]);
        }
    r.q.masses = std::move(m);
    r.q.eta_min = q.eta_min;
    return r;
}

struct strategy2_layout {
    flattening f;
    double zeta = 0;
    std::vector<bool> small; // membership in Q2
    double q_small = 0;
    bool run_mean = false;
    double gamma = 0;
    double eps2 = 0;
};

strategy2_layout layout_strategy2(const small_distribution& q, double eps) {
    strategy2_layout s;
    s.f = flatten_k(q);
    const double eta = q.eta_min;
    const double log_term = std::log(2.0 / eta);
    const double kp = double(s.f.q.k());
    s.zeta = eps / (10.0 * kp * log_term);
    s.small.resize(s.f.q.k());
    kahan_sum qs;
    for (std::size_t a = 0; a < s.f.q.k(); ++a) {
        s.small[a] = s.f.q.masses[a] < s.zeta;
        if (s.small[a]) qs.add(s.f.q.masses[a]);
    }
    s.q_small = qs.value();
    // p(Q2) >= eps/(5 ln(2/eta)) is impossible when that bound exceeds 1.
    s.run_mean = s.q_small > 0 && eps / (5.0 * log_term) <= 1.0;
    if (s.run_mean) s.gamma = eps / (5.0 * s.q_small * log_term) - 1.0;
    s.eps2 = std::sqrt(4.0 * eps * s.zeta / 5.0);
    return s;
}

} // namespace

kl_plan kl_identity_plan(const small_distribution& q, double eps) {
    if (!(eps > 0)) throw invalid_range("kl_identity_test needs eps > 0");
    kl_plan plan;
    auto r = reduce_to_support(q);
    if (r.q.k() == 1) return plan;
    const double eta = r.q.eta_min;
    const double s = double(r.q.k());
    const double cost1 = 1.0 / (eps * std::sqrt(eta));
    const double cost2 = std::sqrt(s) * std::log(1.0 / eta) / (eps * eps);
    plan.eta = eta;
    plan.reference = std::min(cost1, cost2);
    if (cost1 <= cost2) {
        plan.strategy = kl_strategy::flatten_eta;
        auto f = flatten_eta(r.q, eta);
        plan.max_samples = l2_identity_plan(f.q, std::sqrt(eps * eta / 2)).cap;
    } else {
        plan.strategy = kl_strategy::flatten_k;
        auto s2 = layout_strategy2(r.q, eps);
        if (s2.run_mean) plan.max_samples += bernoulli_mean_samples(s2.q_small, s2.gamma, 1.0 / 6.0);
        plan.max_samples += l2_identity_plan(s2.f.q, s2.eps2).cap;
    }
    return plan;
}

verdict kl_identity_test(const small_distribution& q, sample_stream& p, double eps, splitmix64& rng) {
    const auto plan = kl_identity_plan(q, eps);
    auto r = reduce_to_support(q);
    sample_stream inner([&] {
        auto a = p.next();
        if (a < 0 || std::size_t(a) >= r.index.size() || r.index[std::size_t(a)] < 0)
            throw unsupported_symbol("sample outside the support of q");
        return symbol(r.index[std::size_t(a)]);
    });
    try {
        switch (plan.strategy) {
        case kl_strategy::single_support: return verdict::equal;
        case kl_strategy::flatten_eta: {
            auto f = flatten_eta(r.q, plan.eta);
            auto pf = f.wrap(inner, rng);
            return l2_identity_test(f.q, pf, std::sqrt(eps * plan.eta / 2), rng);
        }
        case kl_strategy::flatten_k: {
            auto s2 = layout_strategy2(r.q, eps);
            auto pf = s2.f.wrap(inner, rng);
            if (s2.run_mean) {
                sample_stream indicator([&] { return symbol(s2.small[std::size_t(pf.next())] ? 1 : 0); });
                if (bernoulli_mean_test(s2.q_small, indicator, s2.gamma, 1.0 / 6.0) == verdict::far)
                    return verdict::far;
            }
            return l2_identity_test(s2.f.q, pf, s2.eps2, rng);
        }
        }
    } catch (const unsupported_symbol&) {
        return verdict::far;
    }
    return verdict::equal;
}

// ---- amplification and dispatch

std::uint64_t amplify_reps(double delta) {
    if (!(delta > 0 && delta < 1)) throw invalid_range("amplify needs delta in (0,1)");
    return std::max<std::uint64_t>(1, std::uint64_t(std::ceil(constants().amplify_factor * std::log(1.0 / delta))));
}

verdict amplify(const std::function<verdict()>& test, double delta) {
    const auto reps = amplify_reps(delta);
    std::uint64_t far = 0, equal = 0;
    while (2 * far <= reps && 2 * equal < reps) {
        verdict v;
        try {
            v = test();
        } catch (const unsupported_symbol&) {
            return verdict::far;
        }
        (v == verdict::far ? far : equal) += 1;
    }
    return 2 * far > reps ? verdict::far : verdict::equal;
}

namespace {

bool bernoulli_form(const small_distribution& q) {
    return q.k() == 2 && q.masses[0] > 0 && q.masses[1] > 0;
}

} // namespace

verdict small_domain_kl_test(const small_distribution& q, sample_stream& p, double eps, splitmix64& rng) {
    if (bernoulli_form(q)) {
        try {
            return bernoulli_kl_test(q.masses[1], p, eps);
        } catch (const unsupported_symbol&) {
            return verdict::far;
        }
    }
    return kl_identity_test(q, p, eps, rng);
}

std::uint64_t small_domain_kl_samples(const small_distribution& q, double eps) {
    if (bernoulli_form(q)) return bernoulli_kl_samples(q.masses[1], eps);
    return kl_identity_plan(q, eps).max_samples;
}

std::uint64_t robust_base_budget(const small_distribution& q, double eps) {
    return amplify_reps(0.1) * small_domain_kl_samples(q, eps / 2);
}

double robust_accuracy(const small_distribution& q, double eps) {
    const double m = double(std::max<std::uint64_t>(1, robust_base_budget(q, eps)));
    return std::min(eps, 1.0 / m) / 8.0;
}

verdict robust_kl_test(const approx_target& provider, sample_stream& p, double eps, splitmix64& rng) {
    small_distribution q_hat;
    try {
        auto coarse = provider(eps / 8.0, 1.0 / 20.0);
        q_hat = provider(robust_accuracy(coarse, eps), 1.0 / 20.0);
    } catch (const provider_failure&) {
        return verdict::far;
    }
    return amplify([&] { return small_domain_kl_test(q_hat, p, eps / 2, rng); }, 0.1);
}

} // namespace idt
