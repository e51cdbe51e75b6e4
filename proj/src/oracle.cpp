#include "idt/oracle.hpp"

#include "idt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace idt {

std::string_view to_string(oracle_mode m) noexcept {
    switch (m) {
    case oracle_mode::general: return "general";
    case oracle_mode::coordinate: return "coordinate";
    case oracle_mode::subcube: return "subcube";
    case oracle_mode::pairwise: return "pairwise";
    }
    return "unknown";
}

oracle_mode oracle_mode_from_string(std::string_view s) {
    if (s == "general") return oracle_mode::general;
    if (s == "coordinate") return oracle_mode::coordinate;
    if (s == "subcube") return oracle_mode::subcube;
    if (s == "pairwise") return oracle_mode::pairwise;
    throw config_error("oracle", "unknown oracle mode '" + std::string(s) + "'");
}

bool permits(oracle_mode have, oracle_mode need) noexcept {
    if (need == oracle_mode::general) return true;
    if (need == oracle_mode::pairwise) return have == oracle_mode::pairwise;
    if (need == oracle_mode::coordinate) return have == oracle_mode::coordinate || have == oracle_mode::subcube;
    return have == oracle_mode::subcube;
}

std::size_t default_glauber_steps(std::size_t n) noexcept {
    return std::size_t(std::ceil(10.0 * double(n) * std::log(double(n) + 1.0)));
}

query_counts& query_counts::operator+=(const query_counts& o) noexcept {
    general += o.general;
    coordinate += o.coordinate;
    subcube += o.subcube;
    pairwise += o.pairwise;
    return *this;
}

oracle::oracle(model_spec pi, oracle_mode mode, backend be, std::uint64_t seed)
    : pi_(std::move(pi)), mode_(mode), be_(be), rng_(seed) {
    if (be_.kind == backend_kind::exact) {
        use_table_ = pi_.enumerable();
        if (!use_table_ && pi_.kind() == model_kind::ising)
            throw scale_guard_exceeded("exact backend for an Ising model needs k^n <= 2^22; use glauber");
        if (!use_table_ && pi_.kind() == model_kind::explicit_table)
            throw scale_guard_exceeded("explicit table beyond the guard");
        if (use_table_) pi_.cumulative();
    } else if (pi_.kind() != model_kind::ising) {
        throw invalid_model("the glauber backend is implemented for Ising models only");
    }
}

void oracle::require(oracle_mode need, const char* what) const {
    if (!permits(mode_, need))
        throw mode_unsupported(std::string(what) + " query on a " + std::string(to_string(mode_)) + " oracle");
}

std::uint64_t oracle::draw_index(std::span<const double> cum, std::span<const double> mass) {
    const double u = rng_.uniform01() * cum.back();
    auto idx = std::uint64_t(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
    if (idx >= cum.size()) idx = cum.size() - 1;
    while (idx > 0 && mass[idx] <= 0) --idx;
    return idx;
}

configuration oracle::direct_sample() {
    const auto n = pi_.n();
    const auto k = pi_.k();
    configuration x(n);
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, uniform_model>) {
                for (auto& a: x) a = symbol(rng_.below(k));
            } else if constexpr (std::is_same_v<T, product_model>) {
                for (std::size_t i = 0; i < n; ++i) {
                    double u = rng_.uniform01();
                    std::size_t a = 0;
                    while (a + 1 < k && u >= m.coords[i][a]) u -= m.coords[i][a++];
                    x[i] = symbol(a);
                }
            } else if constexpr (std::is_same_v<T, subcube_bad_model>) {
                bool hit = true;
                for (auto c: m.A) {
                    x[c] = symbol(rng_.below(2));
                    hit = hit && x[c] == m.sigma[c];
                }
                if (hit) {
                    x = m.sigma;
                } else {
                    std::size_t a = 0;
                    for (std::size_t c = 0; c < n; ++c) {
                        if (a < m.A.size() && m.A[a] == c) {
                            ++a;
                            continue;
                        }
                        x[c] = symbol(rng_.below(2));
                    }
                }
            } else if constexpr (std::is_same_v<T, matched_ising_model>) {
                const double agree = (1 + std::tanh(m.beta)) / 2;
                for (auto& a: x) a = 0;
                for (auto [u, v]: m.matching) {
                    x[u] = symbol(rng_.below(2));
                    x[v] = rng_.bernoulli(agree) ? x[u] : 1 - x[u];
                }
                for (std::size_t c = 0; c < n; ++c)
                    if (m.partner[c] < 0) x[c] = symbol(rng_.below(2));
            } else {
                throw scale_guard_exceeded("no direct sampler for this model beyond the guard");
            }
        },
        pi_.payload());
    return x;
}

configuration oracle::glauber_sample() {
    const auto& m = pi_.as<ising_model>();
    const auto n = pi_.n();
    std::vector<int> s(n);
    for (auto& v: s) v = rng_.below(2) ? -1 : 1;
    const std::size_t steps = be_.steps ? be_.steps : default_glauber_steps(n);
    for (std::size_t t = 0; t < steps; ++t) {
        auto i = std::size_t(rng_.below(n));
        double f = m.fields[i];
        for (auto [j, beta]: m.adjacency[i]) f += beta * s[j];
        s[i] = rng_.uniform01() < 1.0 / (1.0 + std::exp(-2.0 * f)) ? 1 : -1;
    }
    configuration x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = s[i] == 1 ? 0 : 1;
    return x;
}

configuration oracle::sample_unconditioned() {
    if (be_.kind == backend_kind::glauber) return glauber_sample();
    if (!use_table_) return direct_sample();
    const auto& cum = pi_.cumulative();
    return decode(draw_index(cum, pi_.table()), pi_.n(), pi_.k());
}

configuration oracle::draw_general() {
    require(oracle_mode::general, "general");
    ++counts_.general;
    return sample_unconditioned();
}

symbol oracle::draw_coordinate(std::size_t i, const pinning& pin) {
    require(oracle_mode::coordinate, "coordinate");
    if (pin.size() != pi_.n() || i >= pi_.n()) throw dimension_mismatch("coordinate query shape");
    if (pin.pinned(i) || pin.pinned_count() + 1 != pi_.n())
        throw dimension_mismatch("coordinate query must pin every coordinate except i");
    ++counts_.coordinate;
    if (i != coord_i_ || !(pin == coord_pin_)) {
        coord_i_ = i;
        coord_pin_ = pin;
        try {
            auto w = pi_.conditional_marginal(i, pin);
            coord_cdf_.resize(w.size());
            double acc = 0;
            for (std::size_t a = 0; a < w.size(); ++a) coord_cdf_[a] = acc += w[a];
            coord_feasible_ = true;
        } catch (const zero_probability_pinning&) {
            coord_feasible_ = false;
        }
    }
    if (!coord_feasible_) return 0;
    const double u = rng_.uniform01() * coord_cdf_.back();
    std::size_t a = 0;
    while (a + 1 < coord_cdf_.size() && u >= coord_cdf_[a]) ++a;
    // Skip zero-mass symbols reached through rounding.
    while (a > 0 && coord_cdf_[a] == coord_cdf_[a - 1]) --a;
    return symbol(a);
}

const oracle::conditional_law& oracle::law_for(const pinning& pin) {
    if (law_valid_ && law_.pin == pin) return law_;
    const auto n = pi_.n();
    const auto k = pi_.k();
    law_ = {};
    law_.pin = pin;
    law_.free = pin.free_coordinates();
    const auto count = checked_state_count(law_.free.size(), k);
    configuration x(n, 0);
    for (std::size_t j = 0; j < n; ++j)
        if (pin.pinned(j)) x[j] = pin[j];
    std::vector<symbol> digits(law_.free.size());
    law_.mass.resize(count);
    if (use_table_) {
        const auto& t = pi_.table();
        for (std::uint64_t idx = 0; idx < count; ++idx) {
            decode_into(idx, k, digits);
            for (std::size_t f = 0; f < digits.size(); ++f) x[law_.free[f]] = digits[f];
            law_.mass[idx] = t[encode(x, k)];
        }
    } else {
        for (std::uint64_t idx = 0; idx < count; ++idx) {
            decode_into(idx, k, digits);
            for (std::size_t f = 0; f < digits.size(); ++f) x[law_.free[f]] = digits[f];
            law_.mass[idx] = pi_.log_weight(x);
        }
        double top = *std::max_element(law_.mass.begin(), law_.mass.end());
        for (double& w: law_.mass) w = std::isfinite(top) ? std::exp(w - top) : 0.0;
    }
    law_.cum.resize(count);
    double acc = 0;
    for (std::uint64_t idx = 0; idx < count; ++idx) law_.cum[idx] = acc += law_.mass[idx];
    law_.feasible = acc > 0;
    law_valid_ = true;
    return law_;
}

configuration oracle::draw_subcube(const pinning& pin) {
    require(oracle_mode::subcube, "subcube");
    if (pin.size() != pi_.n()) throw dimension_mismatch("subcube pinning length differs from n");
    for (std::size_t j = 0; j < pin.size(); ++j)
        if (pin.pinned(j) && (pin[j] < 0 || std::size_t(pin[j]) >= pi_.k()))
            throw dimension_mismatch("pinned symbol outside the alphabet");
    ++counts_.subcube;
    if (pin.pinned_count() == 0) return sample_unconditioned();
    const auto& law = law_for(pin);
    configuration out(law.free.size(), 0);
    if (!law.feasible) return out;
    decode_into(draw_index(law.cum, law.mass), pi_.k(), out);
    return out;
}

const configuration& oracle::draw_pairwise(const configuration& x, const configuration& y) {
    require(oracle_mode::pairwise, "pairwise");
    ++counts_.pairwise;
    if (x == y) return x;
    const double lx = pi_.log_weight(x);
    const double ly = pi_.log_weight(y);
    if (!std::isfinite(lx) && !std::isfinite(ly)) return x;
    // pi(x)/(pi(x)+pi(y)) = 1/(1+exp(ly-lx))
    const double px = 1.0 / (1.0 + std::exp(ly - lx));
    return rng_.uniform01() < px ? x : y;
}

symbol oracle::simulate_coordinate_via_pairwise(std::size_t i, const pinning& pin, std::size_t chain_steps,
                                                std::optional<symbol> initial) {
    require(oracle_mode::pairwise, "pairwise");
    const auto n = pi_.n();
    const auto k = pi_.k();
    if (k > 16) throw invalid_range("pairwise chain simulation is limited to k <= 16");
    if (pin.size() != n || i >= n || pin.pinned(i) || pin.pinned_count() + 1 != n)
        throw dimension_mismatch("coordinate query must pin every coordinate except i");
    if (initial && (*initial < 0 || std::size_t(*initial) >= k))
        throw dimension_mismatch("initial symbol outside the alphabet");
    configuration current(pin.raw().begin(), pin.raw().end());
    current[i] = initial ? *initial : symbol(rng_.below(k));
    configuration proposal = current;
    for (std::size_t t = 0; t < chain_steps; ++t) {
        proposal[i] = symbol(rng_.below(k));
        current[i] = draw_pairwise(proposal, current)[i];
    }
    return current[i];
}

} // namespace idt
