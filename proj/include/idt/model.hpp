#pragma once

#include "idt/configuration.hpp"

#include <cstddef>
#include <memory>
#include <span>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace idt {

// Variant payloads. All are immutable once wrapped in a model_spec.

struct uniform_model {};

struct product_model {
    std::vector<std::vector<double>> coords; // coords[i][a] = mu_i(a)
};

struct ising_edge {
    std::size_t u = 0;
    std::size_t v = 0;
    double beta = 0;
};

// Gibbs distribution exp(sum beta_uv s_u s_v + sum h_v s_v) / Z over spins.
// Symbol 0 is spin +1 and symbol 1 is spin -1.
struct ising_model {
    std::vector<ising_edge> edges;
    std::vector<double> fields;
    std::vector<std::vector<std::pair<std::size_t, double>>> adjacency;
};

struct table_model {
    std::vector<double> masses; // lexicographic, length k^n
};

// Draw x_A uniformly; if x_A == sigma_A output sigma, else the rest uniform.
struct subcube_bad_model {
    std::vector<std::size_t> A; // sorted
    configuration sigma;
};

// Ising model on a matching with uniform coupling beta and no fields.
// An unmatched coordinate (odd n) is uniform and independent.
struct matched_ising_model {
    std::vector<std::pair<std::size_t, std::size_t>> matching;
    double beta = 0;
    std::vector<std::ptrdiff_t> partner; // -1 when unmatched
};

enum class model_kind { uniform, product, ising, explicit_table, subcube_bad, matched_ising };

std::string_view to_string(model_kind kind) noexcept;

inline constexpr symbol spin(symbol a) noexcept { return a == 0 ? 1 : -1; }

// A visible or hidden distribution over Q^n. Cheap to copy; shares one
// immutable state (including lazily computed normalizers and tables) and is
// safe to use from several threads.
class model_spec {
public:
    using payload_type = std::variant<uniform_model, product_model, ising_model, table_model,
                                      subcube_bad_model, matched_ising_model>;

    static model_spec uniform(std::size_t n, std::size_t k);
    static model_spec product(std::vector<std::vector<double>> coords);
    static model_spec ising(std::size_t n, std::vector<ising_edge> edges, std::vector<double> fields);
    static model_spec explicit_table(std::size_t n, std::size_t k, std::vector<double> masses);
    static model_spec subcube_bad(std::size_t n, std::vector<std::size_t> A, configuration sigma);
    static model_spec matched_ising(std::size_t n, std::vector<std::pair<std::size_t, std::size_t>> matching,
                                    double beta);

    std::size_t n() const noexcept;
    std::size_t k() const noexcept;
    model_kind kind() const noexcept;
    const payload_type& payload() const noexcept;

    template <class T>
    const T& as() const { return std::get<T>(payload()); }

    // k^n within the desk-scale guard.
    bool enumerable() const noexcept;

    // Throws dimension_mismatch unless x has length n and symbols below k.
    void check(std::span<const symbol> x) const;

    // mu(x). Ising models need the enumerated normalizer (guarded).
    double mass(std::span<const symbol> x) const;

    // ln of an unnormalized weight proportional to mu(x); -inf when mu(x) = 0.
    // Never needs the partition function.
    double log_weight(std::span<const symbol> x) const;

    // mu_i(. | pin) for i free in pin. Coordinate form (all of [n]\{i} pinned)
    // uses local closed forms where they exist; general pinnings fall back to
    // enumerating the free coordinates under the guard.
    // Throws zero_probability_pinning when mu(pin) = 0.
    std::vector<double> conditional_marginal(std::size_t i, const pinning& pin) const;

    // Exact mass table in lexicographic order (guarded, computed once).
    const std::vector<double>& table() const;

    // Running sums of table(), for inverse-CDF sampling.
    const std::vector<double>& cumulative() const;

    // ln Z for Ising-type models (guarded, computed once).
    double log_partition() const;

private:
    struct state;
    explicit model_spec(std::shared_ptr<const state> s) : s_(std::move(s)) {}

    std::shared_ptr<const state> s_;
};

// Helpers for fixtures.

// Mixture sum_j w_j * (product component j), as an explicit table.
model_spec mixture_of_products(std::span<const double> weights,
                               std::span<const std::vector<std::vector<double>>> components);

} // namespace idt
