#include "idt/adversaries.hpp"

#include "idt/constants.hpp"
#include "idt/errors.hpp"
#include "idt/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace idt {

model_spec subcube_bad_spec::model() const { return model_spec::subcube_bad(n, A, sigma); }

std::size_t subcube_bad_t(std::size_t n, double eps) {
    if (!(eps > 0)) throw invalid_range("eps must be positive");
    const double r = double(n) / eps;
    // t >= 1 exactly when n/eps > 8.
    if (r <= 8) throw invalid_range("SubcubeBad needs n/eps > 8 so that t >= 1");
    return std::size_t(std::ceil(std::log2(r) - 1e-12)) - 3;
}

subcube_bad_spec make_subcube_bad(std::size_t n, std::vector<std::size_t> A, configuration sigma) {
    std::sort(A.begin(), A.end());
    if (A.empty() || A.size() >= n) throw invalid_range("SubcubeBad needs 1 <= |A| < n");
    if (std::adjacent_find(A.begin(), A.end()) != A.end() || A.back() >= n) throw invalid_range("A must list distinct coordinates below n");
    if (sigma.size() != n) throw dimension_mismatch("sigma must have length n");
    for (auto a: sigma)
        if (a != 0 && a != 1) throw invalid_range("sigma must be binary");
    return {n, std::move(A), std::move(sigma)};
}

subcube_bad_spec make_subcube_bad(std::size_t n, double eps, splitmix64& rng) {
    return random_subcube_bad(n, subcube_bad_t(n, eps), rng);
}

subcube_bad_spec random_subcube_bad(std::size_t n, std::size_t t, splitmix64& rng) {
    if (t < 1 || t >= n) throw invalid_range("SubcubeBad needs 1 <= t < n");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t(0));
    for (std::size_t a = 0; a < t; ++a) std::swap(idx[a], idx[a + rng.below(n - a)]);
    std::vector<std::size_t> A(idx.begin(), idx.begin() + std::ptrdiff_t(t));
    configuration sigma(n);
    for (auto& v: sigma) v = symbol(rng.below(2));
    return make_subcube_bad(n, std::move(A), std::move(sigma));
}

configuration sample_subcube_bad(const subcube_bad_spec& s, splitmix64& rng) {
    configuration x(s.n);
    bool hit = true;
    for (auto a: s.A) {
        x[a] = symbol(rng.below(2));
        hit = hit && x[a] == s.sigma[a];
    }
    if (hit) return s.sigma;
    std::vector<bool> inA(s.n, false);
    for (auto a: s.A) inA[a] = true;
    for (std::size_t i = 0; i < s.n; ++i)
        if (!inA[i]) x[i] = symbol(rng.below(2));
    return x;
}

double subcube_bad_kl(const subcube_bad_spec& s) noexcept {
    return std::log(2.0) * double(s.n - s.t()) * std::ldexp(1.0, -int(s.t()));
}

double subcube_bad_tv(const subcube_bad_spec& s) noexcept {
    return (1 - std::ldexp(1.0, -int(s.n - s.t()))) * std::ldexp(1.0, -int(s.t()));
}

subcube_conditional classify_pinning(const subcube_bad_spec& s, const pinning& pin) {
    if (pin.size() != s.n) throw dimension_mismatch("pinning length differs from n");
    subcube_conditional c;
    c.free = pin.free_coordinates();
    c.ell = s.n - c.free.size();
    std::vector<bool> inA(s.n, false);
    for (auto a: s.A) inA[a] = true;
    bool a_agree = true, rest_agree = true;
    for (std::size_t i = 0; i < s.n; ++i) {
        if (!pin.pinned(i)) continue;
        if (inA[i]) {
            ++c.j;
            a_agree = a_agree && pin[i] == s.sigma[i];
        } else {
            rest_agree = rest_agree && pin[i] == s.sigma[i];
        }
    }
    c.which = !a_agree ? subcube_case::case1 : (!rest_agree ? subcube_case::case2 : subcube_case::case3);
    return c;
}

subcube_conditional conditional_subcube_bad(const subcube_bad_spec& s, const pinning& pin) {
    auto c = classify_pinning(s, pin);
    const std::size_t f = c.free.size();
    const auto count = checked_state_count(f, 2);
    const std::size_t n = s.n, t = s.t(), ell = c.ell, j = c.j;
    if (c.which == subcube_case::case2 && j == t) throw infeasible_pinning("pinning has probability zero under pi_{A,sigma}");
    std::vector<bool> inA(n, false);
    for (auto a: s.A) inA[a] = true;
    c.mass.assign(count, 0.0);
    const double uniform = std::ldexp(1.0, -int(f));
    // Normalizer of Case 3: 2^{-t} + 2^{-l} - 2^{-(t+l-j)}.
    const double z3 = std::ldexp(1.0, -int(t)) + std::ldexp(1.0, -int(ell)) - std::ldexp(1.0, -int(t + ell - j));
    configuration y(f);
    for (std::uint64_t idx = 0; idx < count; ++idx) {
        decode_into(idx, 2, y);
        bool free_a_agree = true, free_rest_agree = true;
        for (std::size_t r = 0; r < f; ++r) {
            const auto i = c.free[r];
            if (y[r] == s.sigma[i]) continue;
            if (inA[i])
                free_a_agree = false;
            else
                free_rest_agree = false;
        }
        switch (c.which) {
        case subcube_case::case1: c.mass[idx] = uniform; break;
        case subcube_case::case2:
            c.mass[idx] = free_a_agree ? 0.0 : 1.0 / (std::ldexp(1.0, int(n - ell)) - std::ldexp(1.0, int(n - ell - t + j)));
            break;
        case subcube_case::case3:
            if (!free_a_agree)
                c.mass[idx] = std::ldexp(1.0, -int(n)) / z3;
            else if (!free_rest_agree)
                c.mass[idx] = 0;
            else
                c.mass[idx] = std::ldexp(1.0, -int(t)) / z3;
            break;
        }
    }
    return c;
}

double conditional_tv_case(std::size_t n, std::size_t t, std::size_t ell, std::size_t j, subcube_case c) {
    switch (c) {
    case subcube_case::case1: return 0;
    case subcube_case::case2: return std::ldexp(1.0, -int(t - j));
    case subcube_case::case3:
        return std::ldexp(1.0, int(ell)) / (std::ldexp(1.0, int(t)) + std::ldexp(1.0, int(ell)) - std::ldexp(1.0, int(j))) -
               std::ldexp(1.0, -int(n - ell));
    }
    return 0;
}

double expected_conditional_tv_given_j(std::size_t n, std::size_t t, std::size_t ell, std::size_t j) {
    if (t == 0 || t >= n || ell > n || j > std::min(t, ell) || t - j > n - ell)
        throw invalid_range("inconsistent (n, t, |Lambda|, j)");
    const double p2 = std::ldexp(1.0, -int(j)) - std::ldexp(1.0, -int(ell));
    const double p3 = std::ldexp(1.0, -int(ell));
    return p2 * conditional_tv_case(n, t, ell, j, subcube_case::case2) +
           p3 * conditional_tv_case(n, t, ell, j, subcube_case::case3);
}

double expected_conditional_tv(std::size_t n, double eps, std::size_t ell) {
    const auto t = subcube_bad_t(n, eps);
    if (t >= n) throw invalid_range("SubcubeBad needs t < n");
    if (ell > n) throw invalid_range("|Lambda| exceeds n");
    auto lchoose = [](double a, double b) { return std::lgamma(a + 1) - std::lgamma(b + 1) - std::lgamma(a - b + 1); };
    kahan_sum s;
    for (std::size_t j = 0; j <= std::min(t, ell); ++j) {
        if (t - j > n - ell) continue;
        const double w = std::exp(lchoose(double(ell), double(j)) + lchoose(double(n - ell), double(t - j)) -
                                  lchoose(double(n), double(t)));
        s.add(w * expected_conditional_tv_given_j(n, t, ell, j));
    }
    return s.value();
}

model_spec matched_ising_spec::model() const { return model_spec::matched_ising(n, matching, beta); }

double matched_beta(std::size_t n, double eps, double rho) noexcept { return rho * eps / std::sqrt(double(n)); }

std::optional<double> calibrated_rho(std::size_t n, double eps) {
    for (const auto& r: constants().rho_table)
        if (r.n == n && std::fabs(r.eps - eps) < 1e-12) return r.rho;
    return std::nullopt;
}

matched_ising_spec make_matched_ising(std::size_t n, std::vector<std::pair<std::size_t, std::size_t>> matching,
                                      double beta) {
    if (n == 0) throw invalid_range("n must be positive");
    if (matching.size() != n / 2) throw invalid_range("matching must have floor(n/2) pairs");
    // Validation of coverage happens in the model constructor.
    matched_ising_spec s{n, std::move(matching), beta};
    (void)s.model();
    return s;
}

matched_ising_spec make_matched_ising(std::size_t n, double eps, splitmix64& rng, std::optional<double> rho) {
    if (!rho) rho = calibrated_rho(n, eps);
    if (!rho) throw config_error("rho", "no calibrated rho for this (n, eps); pass one explicitly");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t(0));
    for (std::size_t a = 0; a + 1 < n; ++a) std::swap(idx[a], idx[a + rng.below(n - a)]);
    std::vector<std::pair<std::size_t, std::size_t>> m;
    for (std::size_t a = 0; a + 1 < n; a += 2) m.emplace_back(std::min(idx[a], idx[a + 1]), std::max(idx[a], idx[a + 1]));
    std::sort(m.begin(), m.end());
    return make_matched_ising(n, std::move(m), matched_beta(n, eps, *rho));
}

configuration sample_matched_ising(const matched_ising_spec& s, splitmix64& rng) {
    configuration x(s.n);
    for (auto& v: x) v = symbol(rng.below(2));
    const double agree = (1 + std::tanh(s.beta)) / 2;
    for (auto [u, v]: s.matching) x[v] = rng.bernoulli(agree) ? x[u] : 1 - x[u];
    return x;
}

std::vector<double> matched_coordinate_law(const matched_ising_spec& s, std::size_t i, std::span<const symbol> x) {
    if (i >= s.n || x.size() != s.n) throw dimension_mismatch("coordinate or configuration out of shape");
    for (auto [u, v]: s.matching) {
        if (u != i && v != i) continue;
        const auto partner = u == i ? v : u;
        const double agree = (1 + std::tanh(s.beta)) / 2;
        std::vector<double> q(2);
        q[std::size_t(x[partner])] = agree;
        q[std::size_t(1 - x[partner])] = 1 - agree;
        return q;
    }
    return {0.5, 0.5};
}

double tv_matched_ising_to_uniform(const matched_ising_spec& s) {
    const std::size_t m = s.matching.size();
    const double th = std::tanh(s.beta);
    kahan_sum acc;
    for (std::size_t a = 0; a <= m; ++a) {
        const double lc = std::lgamma(double(m) + 1) - std::lgamma(double(a) + 1) - std::lgamma(double(m - a) + 1);
        const double ratio = std::exp(double(a) * std::log1p(th) + double(m - a) * std::log1p(-th));
        acc.add(std::exp(lc - double(m) * std::log(2.0)) * std::fabs(ratio - 1));
    }
    return acc.value() / 2;
}

} // namespace idt
