#include "idt/model.hpp"

#include "idt/errors.hpp"
#include "idt/kernels.hpp"
#include "idt/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <set>
#include <string>

namespace idt {

namespace {

constexpr double mass_tolerance = 1e-12;

void check_mass_vector(std::span<const double> m, const std::string& field) {
    kahan_sum s;
    for (double v: m) {
        if (!(v >= 0) || !std::isfinite(v)) throw invalid_model(field + ": negative or non-finite mass");
        s.add(v);
    }
    if (std::fabs(s.value() - 1.0) > mass_tolerance)
        throw invalid_model(field + ": masses sum to " + std::to_string(s.value()) + ", not 1");
}

double ising_energy(const ising_model& m, std::span<const symbol> x) {
    kahan_sum e;
    for (const auto& edge: m.edges) e.add(edge.beta * spin(x[edge.u]) * spin(x[edge.v]));
    for (std::size_t v = 0; v < m.fields.size(); ++v) e.add(m.fields[v] * spin(x[v]));
    return e.value();
}

// Local field h_i + sum_j beta_ij s_j seen by coordinate i.
double ising_local_field(const ising_model& m, std::size_t i, const pinning& pin) {
    double f = m.fields[i];
    for (auto [j, beta]: m.adjacency[i]) f += beta * spin(pin[j]);
    return f;
}

bool subcube_bad_hits_sigma_on_A(const subcube_bad_model& m, std::span<const symbol> x) {
    for (auto a: m.A)
        if (x[a] != m.sigma[a]) return false;
    return true;
}

} // namespace

std::string_view to_string(model_kind kind) noexcept {
    switch (kind) {
    case model_kind::uniform: return "uniform";
    case model_kind::product: return "product";
    case model_kind::ising: return "ising";
    case model_kind::explicit_table: return "explicit_table";
    case model_kind::subcube_bad: return "subcube_bad";
    case model_kind::matched_ising: return "matched_ising";
    }
    return "unknown";
}

struct model_spec::state {
    std::size_t n = 0;
    std::size_t k = 0;
    payload_type payload;

    mutable std::once_flag partition_once;
    mutable double log_z = 0;
    mutable std::once_flag table_once;
    mutable std::vector<double> table;
    mutable std::vector<double> cumulative;
};

model_spec model_spec::uniform(std::size_t n, std::size_t k) {
    if (n == 0 || k < 2) throw invalid_model("uniform: need n >= 1 and k >= 2");
    auto s = std::make_shared<state>();
    s->n = n;
    s->k = k;
    s->payload = uniform_model{};
    return model_spec(std::move(s));
}

model_spec model_spec::product(std::vector<std::vector<double>> coords) {
    if (coords.empty()) throw invalid_model("coords: need at least one coordinate");
    const std::size_t k = coords.front().size();
    if (k < 2) throw invalid_model("coords: need k >= 2");
    for (std::size_t i = 0; i < coords.size(); ++i) {
        if (coords[i].size() != k) throw invalid_model("coords[" + std::to_string(i) + "]: length differs from k");
        check_mass_vector(coords[i], "coords[" + std::to_string(i) + "]");
    }
    auto s = std::make_shared<state>();
    s->n = coords.size();
    s->k = k;
    s->payload = product_model{std::move(coords)};
    return model_spec(std::move(s));
}

model_spec model_spec::ising(std::size_t n, std::vector<ising_edge> edges, std::vector<double> fields) {
    if (n == 0) throw invalid_model("n: must be positive");
    if (fields.empty()) fields.assign(n, 0.0);
    if (fields.size() != n) throw invalid_model("fields: length must equal n");
    for (double h: fields)
        if (!std::isfinite(h)) throw invalid_model("fields: non-finite entry");
    ising_model m;
    m.adjacency.resize(n);
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& e: edges) {
        if (e.u >= n || e.v >= n) throw invalid_model("edges: vertex out of range");
        if (e.u == e.v) throw invalid_model("edges: self-loop");
        if (!std::isfinite(e.beta)) throw invalid_model("edges: non-finite beta");
        auto key = std::minmax(e.u, e.v);
        if (!seen.insert({key.first, key.second}).second) throw invalid_model("edges: duplicate edge");
        m.adjacency[e.u].emplace_back(e.v, e.beta);
        m.adjacency[e.v].emplace_back(e.u, e.beta);
    }
    m.edges = std::move(edges);
    m.fields = std::move(fields);
    auto s = std::make_shared<state>();
    s->n = n;
    s->k = 2;
    s->payload = std::move(m);
    return model_spec(std::move(s));
}

model_spec model_spec::explicit_table(std::size_t n, std::size_t k, std::vector<double> masses) {
    if (n == 0 || k < 2) throw invalid_model("explicit_table: need n >= 1 and k >= 2");
    auto count = checked_state_count(n, k);
    if (masses.size() != count) throw invalid_model("masses: length must equal k^n");
    check_mass_vector(masses, "masses");
    auto s = std::make_shared<state>();
    s->n = n;
    s->k = k;
    s->payload = table_model{std::move(masses)};
    return model_spec(std::move(s));
}

model_spec model_spec::subcube_bad(std::size_t n, std::vector<std::size_t> A, configuration sigma) {
    std::sort(A.begin(), A.end());
    if (A.empty()) throw invalid_model("A: must be non-empty (t >= 1)");
    if (std::adjacent_find(A.begin(), A.end()) != A.end()) throw invalid_model("A: duplicate coordinate");
    if (A.back() >= n) throw invalid_model("A: coordinate out of range");
    if (A.size() >= n) throw invalid_model("A: |A| = n is degenerate");
    if (sigma.size() != n) throw invalid_model("sigma: length must equal n");
    for (auto v: sigma)
        if (v != 0 && v != 1) throw invalid_model("sigma: symbols must be 0 or 1");
    auto s = std::make_shared<state>();
    s->n = n;
    s->k = 2;
    s->payload = subcube_bad_model{std::move(A), std::move(sigma)};
    return model_spec(std::move(s));
}

model_spec model_spec::matched_ising(std::size_t n, std::vector<std::pair<std::size_t, std::size_t>> matching,
                                     double beta) {
    if (n == 0) throw invalid_model("n: must be positive");
    if (!std::isfinite(beta)) throw invalid_model("beta: non-finite");
    if (matching.size() != n / 2) throw invalid_model("matching: must contain floor(n/2) pairs");
    matched_ising_model m;
    m.partner.assign(n, -1);
    for (auto [u, v]: matching) {
        if (u >= n || v >= n || u == v) throw invalid_model("matching: invalid pair");
        if (m.partner[u] != -1 || m.partner[v] != -1) throw invalid_model("matching: coordinate matched twice");
        m.partner[u] = std::ptrdiff_t(v);
        m.partner[v] = std::ptrdiff_t(u);
    }
    m.matching = std::move(matching);
    m.beta = beta;
    auto s = std::make_shared<state>();
    s->n = n;
    s->k = 2;
    s->payload = std::move(m);
    return model_spec(std::move(s));
}

std::size_t model_spec::n() const noexcept { return s_->n; }
std::size_t model_spec::k() const noexcept { return s_->k; }
model_kind model_spec::kind() const noexcept { return model_kind(s_->payload.index()); }
const model_spec::payload_type& model_spec::payload() const noexcept { return s_->payload; }

bool model_spec::enumerable() const noexcept { return state_count(s_->n, s_->k) <= desk_scale_limit; }

void model_spec::check(std::span<const symbol> x) const {
    if (x.size() != s_->n)
        throw dimension_mismatch("configuration has length " + std::to_string(x.size()) + ", model has n = " +
                                 std::to_string(s_->n));
    for (auto a: x)
        if (a < 0 || std::size_t(a) >= s_->k) throw dimension_mismatch("symbol outside the alphabet");
}

double model_spec::log_partition() const {
    const auto* m = std::get_if<ising_model>(&s_->payload);
    if (!m) return 0.0;
    std::call_once(s_->partition_once, [&] {
        auto count = checked_state_count(s_->n, 2);
        std::vector<double> w(count);
        kernels::tabulate(s_->n, 2, [&](std::span<const symbol> x) { return ising_energy(*m, x); }, w);
        s_->log_z = kernels::log_sum_exp(w);
    });
    return s_->log_z;
}

double model_spec::log_weight(std::span<const symbol> x) const {
    check(x);
    const auto n = s_->n;
    return std::visit(
        [&](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, uniform_model>) {
                return 0.0;
            } else if constexpr (std::is_same_v<T, ising_model>) {
                return ising_energy(m, x);
            } else if constexpr (std::is_same_v<T, matched_ising_model>) {
                double w = 0;
                for (auto [u, v]: m.matching) w += m.beta * spin(x[u]) * spin(x[v]);
                return w;
            } else {
                (void)n;
                double p = mass(x);
                return p > 0 ? std::log(p) : -INFINITY;
            }
        },
        s_->payload);
}

double model_spec::mass(std::span<const symbol> x) const {
    check(x);
    const auto n = s_->n;
    const auto k = s_->k;
    return std::visit(
        [&](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, uniform_model>) {
                return std::pow(double(k), -double(n));
            } else if constexpr (std::is_same_v<T, product_model>) {
                double p = 1;
                for (std::size_t i = 0; i < n; ++i) p *= m.coords[i][std::size_t(x[i])];
                return p;
            } else if constexpr (std::is_same_v<T, ising_model>) {
                return std::exp(ising_energy(m, x) - log_partition());
            } else if constexpr (std::is_same_v<T, table_model>) {
                return m.masses[encode(x, k)];
            } else if constexpr (std::is_same_v<T, subcube_bad_model>) {
                if (!subcube_bad_hits_sigma_on_A(m, x)) return std::ldexp(1.0, -int(n));
                return std::equal(x.begin(), x.end(), m.sigma.begin()) ? std::ldexp(1.0, -int(m.A.size())) : 0.0;
            } else {
                const double tau = std::tanh(m.beta);
                double p = 1;
                for (auto [u, v]: m.matching) p *= (x[u] == x[v] ? (1 + tau) : (1 - tau)) / 4;
                if (n % 2 == 1) p *= 0.5;
                return p;
            }
        },
        s_->payload);
}

std::vector<double> model_spec::conditional_marginal(std::size_t i, const pinning& pin) const {
    const auto n = s_->n;
    const auto k = s_->k;
    if (pin.size() != n) throw dimension_mismatch("pinning length differs from n");
    if (i >= n) throw dimension_mismatch("coordinate out of range");
    if (pin.pinned(i)) throw dimension_mismatch("queried coordinate is pinned");
    for (std::size_t j = 0; j < n; ++j)
        if (pin.pinned(j) && (pin[j] < 0 || std::size_t(pin[j]) >= k))
            throw dimension_mismatch("pinned symbol outside the alphabet");
    const bool coordinate_form = pin.pinned_count() + 1 == n;

    auto normalized = [&](std::vector<double> w) {
        kahan_sum s;
        for (double v: w) s.add(v);
        double total = s.value();
        if (!(total > 0)) throw zero_probability_pinning("pinning has zero probability");
        for (double& v: w) v /= total;
        return w;
    };

    // Enumerates the free coordinates with unnormalized weights.
    auto by_enumeration = [&]() {
        auto free = pin.free_coordinates();
        auto count = checked_state_count(free.size(), k);
        configuration x(n, 0);
        for (std::size_t j = 0; j < n; ++j)
            if (pin.pinned(j)) x[j] = pin[j];
        std::vector<double> logw(count);
        std::vector<symbol> digits(free.size());
        for (std::uint64_t idx = 0; idx < count; ++idx) {
            decode_into(idx, k, digits);
            for (std::size_t f = 0; f < free.size(); ++f) x[free[f]] = digits[f];
            logw[idx] = log_weight(x);
        }
        double top = *std::max_element(logw.begin(), logw.end());
        if (!std::isfinite(top)) throw zero_probability_pinning("pinning has zero probability");
        std::vector<kahan_sum> acc(k);
        const auto pos = std::size_t(std::find(free.begin(), free.end(), i) - free.begin());
        for (std::uint64_t idx = 0; idx < count; ++idx) {
            decode_into(idx, k, digits);
            acc[std::size_t(digits[pos])].add(std::exp(logw[idx] - top));
        }
        std::vector<double> w(k);
        for (std::size_t a = 0; a < k; ++a) w[a] = acc[a].value();
        return normalized(std::move(w));
    };

    return std::visit(
        [&](const auto& m) -> std::vector<double> {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, uniform_model>) {
                return std::vector<double>(k, 1.0 / double(k));
            } else if constexpr (std::is_same_v<T, product_model>) {
                for (std::size_t j = 0; j < n; ++j)
                    if (pin.pinned(j) && m.coords[j][std::size_t(pin[j])] == 0)
                        throw zero_probability_pinning("pinned symbol has zero mass");
                return m.coords[i];
            } else if constexpr (std::is_same_v<T, ising_model>) {
                if (!coordinate_form) return by_enumeration();
                // P(s_i = +1) = 1 / (1 + exp(-2 f)).
                double f = ising_local_field(m, i, pin);
                double plus = 1.0 / (1.0 + std::exp(-2.0 * f));
                return {plus, 1.0 - plus};
            } else if constexpr (std::is_same_v<T, matched_ising_model>) {
                auto j = m.partner[i];
                if (j < 0 || !pin.pinned(std::size_t(j))) return {0.5, 0.5};
                double agree = (1 + std::tanh(m.beta)) / 2;
                return pin[std::size_t(j)] == 0 ? std::vector<double>{agree, 1 - agree}
                                                : std::vector<double>{1 - agree, agree};
            } else {
                if (!coordinate_form) return by_enumeration();
                configuration x(n);
                for (std::size_t j = 0; j < n; ++j) x[j] = pin.pinned(j) ? pin[j] : 0;
                std::vector<double> w(k);
                for (std::size_t a = 0; a < k; ++a) {
                    x[i] = symbol(a);
                    w[a] = mass(x);
                }
                return normalized(std::move(w));
            }
        },
        s_->payload);
}

const std::vector<double>& model_spec::table() const {
    std::call_once(s_->table_once, [&] {
        auto count = checked_state_count(s_->n, s_->k);
        std::vector<double> t(count);
        if (const auto* tm = std::get_if<table_model>(&s_->payload)) {
            t = tm->masses;
        } else {
            log_partition();
            kernels::tabulate(s_->n, s_->k, [&](std::span<const symbol> x) { return mass(x); }, t);
        }
        std::vector<double> c(count);
        kahan_sum s;
        for (std::size_t i = 0; i < count; ++i) {
            s.add(t[i]);
            c[i] = s.value();
        }
        s_->table = std::move(t);
        s_->cumulative = std::move(c);
    });
    return s_->table;
}

const std::vector<double>& model_spec::cumulative() const {
    table();
    return s_->cumulative;
}

model_spec mixture_of_products(std::span<const double> weights,
                               std::span<const std::vector<std::vector<double>>> components) {
    if (weights.size() != components.size() || weights.empty())
        throw invalid_model("mixture: weights and components must match");
    const std::size_t n = components.front().size();
    const std::size_t k = components.front().front().size();
    std::vector<model_spec> parts;
    for (const auto& c: components) {
        parts.push_back(model_spec::product(c));
        if (parts.back().n() != n || parts.back().k() != k) throw invalid_model("mixture: shape mismatch");
    }
    auto count = checked_state_count(n, k);
    std::vector<double> masses(count, 0.0);
    configuration x(n);
    for (std::uint64_t idx = 0; idx < count; ++idx) {
        decode_into(idx, k, x);
        kahan_sum s;
        for (std::size_t j = 0; j < parts.size(); ++j) s.add(weights[j] * parts[j].mass(x));
        masses[idx] = s.value();
    }
    return model_spec::explicit_table(n, k, std::move(masses));
}

} // namespace idt
