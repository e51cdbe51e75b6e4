#pragma once

#include <json.hpp>

#include <cstddef>
#include <string>
#include <vector>

namespace idt {

// Sample size m for the Miller-Madow entropy estimator at (k, eps, delta).
struct entropy_row {
    std::size_t k = 0;
    double eps = 0;
    double delta = 0;
    std::size_t m = 0;
};

// Smallest calibrated rho with TV(matched Ising, uniform) >= eps.
struct rho_row {
    std::size_t n = 0;
    double eps = 0;
    double rho = 0;
};

// Every frozen numeric constant. Compiled defaults mirror config/constants.json;
// the file named by IDTEST_CONSTANTS replaces them at startup.
struct frozen_constants {
    double l2_c0 = 0;
    double amplify_factor = 0;
    double bernoulli_mean_c = 0;
    double bernoulli_case1_c = 0;
    double kl_budget_c = 0;
    double at_query_c = 0;
    double tv_stage1_margin = 0;
    double glauber_burnin = 0;
    double kl_estimate_sample_scale = 0;
    std::vector<entropy_row> entropy_table;
    std::vector<rho_row> rho_table;
};

frozen_constants default_constants();
frozen_constants constants_from_json(const nlohmann::json& j);
nlohmann::json constants_to_json(const frozen_constants& c);
frozen_constants load_constants(const std::string& path);

// Process-wide constants: IDTEST_CONSTANTS if set, compiled defaults otherwise.
const frozen_constants& constants();

// Hex FNV-1a digest of the canonical JSON form.
std::string constants_digest(const frozen_constants& c);

inline constexpr const char* constants_env = "IDTEST_CONSTANTS";

} // namespace idt
