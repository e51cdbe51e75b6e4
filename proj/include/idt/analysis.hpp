#pragma once

#include "idt/model.hpp"

#include <optional>
#include <vector>

namespace idt {

// Exact divergences by enumeration (guarded). kl is +inf when p is not
// absolutely continuous w.r.t. q.
double kl_divergence(const model_spec& p, const model_spec& q);
double tv_distance(const model_spec& p, const model_spec& q);

struct balance_profile_t {
    double eta = 0;
    std::optional<double> b;
    bool prefix_only = false;
};

// eta from all coordinate pinnings. b from every pinning when the subset
// marginals fit in the guard, or only from prefix pinnings when prefix_only.
balance_profile_t balance_profile(const model_spec& mu, bool prefix_only = false);

struct tensorization_check {
    bool holds = false;
    double lhs = 0;
    double rhs = 0;
};

tensorization_check verify_tensorization(const model_spec& mu, const model_spec& pi, double C);

// term_i = E_{x ~ pi_[i-1]} KL(pi_i(.|x) || mu_i(.|x)), natural coordinate order.
std::vector<double> chain_rule_decomposition(const model_spec& mu, const model_spec& pi);

// Marginal table of mu on coordinates 0..len-1 (lexicographic, length k^len).
std::vector<double> prefix_marginal(const model_spec& mu, std::size_t len);

// Dobrushin influence matrix a[u][v] = max TV(mu_u(.|s), mu_u(.|t)) over
// feasible coordinate pinnings s, t that differ only at v. Requires n <= 10.
std::vector<std::vector<double>> dobrushin_influence(const model_spec& mu);

// Spectral norm of a square matrix by power iteration on A^T A.
double spectral_norm(const std::vector<std::vector<double>>& a);

// C = 1 / (b delta^2) for a model with ||A||_2 <= 1 - delta.
double dobrushin_constant(double b, double delta);

} // namespace idt
