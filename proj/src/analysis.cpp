#include "idt/analysis.hpp"

#include "idt/errors.hpp"
#include "idt/kernels.hpp"
#include "idt/numeric.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace idt {

namespace {

void same_shape(const model_spec& p, const model_spec& q) {
    if (p.n() != q.n() || p.k() != q.k()) throw dimension_mismatch("models differ in n or k");
}

std::uint64_t ipow(std::size_t k, std::size_t e) {
    std::uint64_t r = 1;
    while (e--) r *= k;
    return r;
}

// Conditional of coordinate i given the rest, read from a full table.
// Returns the group mass; fills cond when the group mass is positive.
double coordinate_group(const std::vector<double>& t, std::uint64_t base, std::uint64_t stride, std::size_t k,
                        std::vector<double>& cond) {
    kahan_sum s;
    for (std::size_t a = 0; a < k; ++a) s.add(t[base + a * stride]);
    double total = s.value();
    if (total > 0)
        for (std::size_t a = 0; a < k; ++a) cond[a] = t[base + a * stride] / total;
    return total;
}

double small_kl(std::span<const double> p, std::span<const double> q) {
    kahan_sum s;
    for (std::size_t a = 0; a < p.size(); ++a) s.add(kl_term(p[a], q[a]));
    return s.value();
}

void require_abs_continuity(const std::vector<double>& pi, const std::vector<double>& mu) {
    for (std::size_t x = 0; x < pi.size(); ++x)
        if (pi[x] > 0 && mu[x] <= 0) throw support_violation("pi puts mass outside the support of mu");
}

} // namespace

double kl_divergence(const model_spec& p, const model_spec& q) {
    same_shape(p, q);
    return kernels::kl(p.table(), q.table());
}

double tv_distance(const model_spec& p, const model_spec& q) {
    same_shape(p, q);
    return kernels::tv(p.table(), q.table());
}

std::vector<double> prefix_marginal(const model_spec& mu, std::size_t len) {
    const auto& t = mu.table();
    const auto n = mu.n();
    if (len > n) throw invalid_range("prefix longer than n");
    const std::uint64_t block = ipow(mu.k(), n - len);
    std::vector<double> out(ipow(mu.k(), len));
    for (std::uint64_t j = 0; j < out.size(); ++j) {
        kahan_sum s;
        for (std::uint64_t r = 0; r < block; ++r) s.add(t[j * block + r]);
        out[j] = s.value();
    }
    return out;
}

balance_profile_t balance_profile(const model_spec& mu, bool prefix_only) {
    const auto& t = mu.table();
    const auto n = mu.n();
    const auto k = mu.k();
    const auto count = t.size();
    balance_profile_t out;
    out.prefix_only = prefix_only;

    double eta = std::numeric_limits<double>::infinity();
    std::vector<double> cond(k);
    std::vector<symbol> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t stride = ipow(k, n - 1 - i);
        for (std::uint64_t idx = 0; idx < count; ++idx) {
            if ((idx / stride) % k != 0) continue;
            if (coordinate_group(t, idx, stride, k, cond) <= 0) continue;
            for (double c: cond)
                if (c > 0) eta = std::min(eta, c);
        }
    }

    std::optional<double> b;
    if (prefix_only) {
        double bb = std::numeric_limits<double>::infinity();
        auto prev = prefix_marginal(mu, 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto next = prefix_marginal(mu, i + 1);
            for (std::uint64_t j = 0; j < prev.size(); ++j) {
                if (prev[j] <= 0) continue;
                for (std::size_t a = 0; a < k; ++a) {
                    double c = next[j * k + a] / prev[j];
                    if (c > 0) bb = std::min(bb, c);
                }
            }
            prev = std::move(next);
        }
        b = bb;
    } else if (state_count(n, k + 1) <= desk_scale_limit && (std::uint64_t(1) << n) * count * n <= (1u << 26)) {
        // Every pinning: marginals on each coordinate subset.
        const std::size_t subsets = std::size_t(1) << n;
        std::vector<std::vector<double>> marg(subsets);
        for (std::size_t mask = 0; mask < subsets; ++mask)
            marg[mask].assign(ipow(k, std::size_t(std::popcount(mask))), 0.0);
        auto sub_index = [&](std::size_t mask) {
            std::uint64_t r = 0;
            for (std::size_t c = 0; c < n; ++c)
                if (mask >> c & 1) r = r * k + std::uint64_t(x[c]);
            return r;
        };
        for (std::uint64_t idx = 0; idx < count; ++idx) {
            if (t[idx] == 0) continue;
            decode_into(idx, k, x);
            for (std::size_t mask = 0; mask < subsets; ++mask) marg[mask][sub_index(mask)] += t[idx];
        }
        double bb = std::numeric_limits<double>::infinity();
        for (std::size_t mask = 0; mask < subsets; ++mask) {
            for (std::size_t i = 0; i < n; ++i) {
                if (mask >> i & 1) continue;
                const auto with_i = mask | (std::size_t(1) << i);
                for (std::uint64_t idx = 0; idx < count; ++idx) {
                    decode_into(idx, k, x);
                    double den = marg[mask][sub_index(mask)];
                    if (den <= 0) continue;
                    double c = marg[with_i][sub_index(with_i)] / den;
                    if (c > 1e-300) bb = std::min(bb, c);
                }
            }
        }
        b = bb;
    }

    const double cap = 1.0 / double(k);
    out.eta = std::min(eta, cap);
    if (b) out.b = std::min({*b, out.eta});
    return out;
}

tensorization_check verify_tensorization(const model_spec& mu, const model_spec& pi, double C) {
    same_shape(mu, pi);
    const auto& tm = mu.table();
    const auto& tp = pi.table();
    require_abs_continuity(tp, tm);
    const auto n = mu.n();
    const auto k = mu.k();
    tensorization_check out;
    out.lhs = kernels::kl(tp, tm);
    kahan_sum rhs;
    std::vector<double> cp(k), cm(k);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t stride = ipow(k, n - 1 - i);
        for (std::uint64_t idx = 0; idx < tp.size(); ++idx) {
            if ((idx / stride) % k != 0) continue;
            double w = coordinate_group(tp, idx, stride, k, cp);
            if (w <= 0) continue;
            coordinate_group(tm, idx, stride, k, cm);
            rhs.add(w * small_kl(cp, cm));
        }
    }
    out.rhs = C * rhs.value();
    out.holds = out.lhs <= out.rhs + 1e-9;
    return out;
}

std::vector<double> chain_rule_decomposition(const model_spec& mu, const model_spec& pi) {
    same_shape(mu, pi);
    require_abs_continuity(pi.table(), mu.table());
    const auto n = mu.n();
    const auto k = mu.k();
    std::vector<double> terms(n);
    auto p_prev = prefix_marginal(pi, 0);
    auto m_prev = prefix_marginal(mu, 0);
    for (std::size_t i = 0; i < n; ++i) {
        auto p_next = prefix_marginal(pi, i + 1);
        auto m_next = prefix_marginal(mu, i + 1);
        kahan_sum s;
        for (std::uint64_t j = 0; j < p_prev.size(); ++j) {
            if (p_prev[j] <= 0) continue;
            for (std::size_t a = 0; a < k; ++a) {
                double pc = p_next[j * k + a] / p_prev[j];
                double mc = m_next[j * k + a] / m_prev[j];
                s.add(p_prev[j] * kl_term(pc, mc));
            }
        }
        terms[i] = s.value();
        p_prev = std::move(p_next);
        m_prev = std::move(m_next);
    }
    return terms;
}

std::vector<std::vector<double>> dobrushin_influence(const model_spec& mu) {
    const auto n = mu.n();
    const auto k = mu.k();
    if (n > 10) throw scale_guard_exceeded("influence matrix enumeration is limited to n <= 10");
    const auto& t = mu.table();
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    std::vector<double> c1(k), c2(k);
    for (std::size_t u = 0; u < n; ++u) {
        const std::uint64_t su = ipow(k, n - 1 - u);
        for (std::size_t v = 0; v < n; ++v) {
            if (v == u) continue;
            const std::uint64_t sv = ipow(k, n - 1 - v);
            double worst = 0;
            for (std::uint64_t idx = 0; idx < t.size(); ++idx) {
                if ((idx / su) % k != 0 || (idx / sv) % k != 0) continue;
                for (std::size_t c = 0; c < k; ++c) {
                    if (coordinate_group(t, idx + c * sv, su, k, c1) <= 0) continue;
                    for (std::size_t d = c + 1; d < k; ++d) {
                        if (coordinate_group(t, idx + d * sv, su, k, c2) <= 0) continue;
                        double tv = 0;
                        for (std::size_t s = 0; s < k; ++s) tv += std::fabs(c1[s] - c2[s]);
                        worst = std::max(worst, tv / 2);
                    }
                }
            }
            a[u][v] = worst;
        }
    }
    return a;
}

double spectral_norm(const std::vector<std::vector<double>>& a) {
    const auto n = a.size();
    if (n == 0) return 0;
    std::vector<double> v(n, 1.0 / std::sqrt(double(n))), w(n), z(n);
    double lambda = 0;
    for (int it = 0; it < 10000; ++it) {
        for (std::size_t r = 0; r < n; ++r) {
            w[r] = 0;
            for (std::size_t c = 0; c < n; ++c) w[r] += a[r][c] * v[c];
        }
        for (std::size_t c = 0; c < n; ++c) {
            z[c] = 0;
            for (std::size_t r = 0; r < n; ++r) z[c] += a[r][c] * w[r];
        }
        double norm = 0;
        for (double e: z) norm += e * e;
        norm = std::sqrt(norm);
        if (norm == 0) return 0;
        for (std::size_t c = 0; c < n; ++c) v[c] = z[c] / norm;
        if (std::fabs(norm - lambda) <= 1e-14 * norm) {
            lambda = norm;
            break;
        }
        lambda = norm;
    }
    return std::sqrt(lambda);
}

double dobrushin_constant(double b, double delta) {
    if (!(b > 0) || !(delta > 0) || delta > 1) throw invalid_range("dobrushin constant needs b > 0 and delta in (0,1]");
    return 1.0 / (b * delta * delta);
}

} // namespace idt
