#include "idt/constants.hpp"

#include "idt/errors.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>

namespace idt {

using nlohmann::json;

frozen_constants default_constants() {
    frozen_constants c;
    c.l2_c0 = 48.0;
    c.amplify_factor = 18.0;
    c.bernoulli_mean_c = 10.0;
    c.bernoulli_case1_c = 64.0;
    c.kl_budget_c = 6000.0;
    c.at_query_c = 5e4;
    c.tv_stage1_margin = 2.0;
    c.glauber_burnin = 10.0;
    c.kl_estimate_sample_scale = 0.02;
    c.entropy_table = {
        {2, 0.0125, 0.1, 8192},
        {2, 0.025, 0.1, 2436},
        {2, 0.05, 0.1, 609},
        {2, 0.1, 0.1, 128},
        {2, 0.2, 0.1, 32},
        {2, 0.5, 0.1, 12},
        {3, 0.0125, 0.1, 5793},
        {3, 0.025, 0.1, 1449},
        {3, 0.05, 0.1, 363},
        {3, 0.1, 0.1, 91},
        {3, 0.2, 0.1, 27},
        {3, 0.5, 0.1, 10},
        {4, 0.0125, 0.1, 8192},
        {4, 0.025, 0.1, 2048},
        {4, 0.05, 0.1, 512},
        {4, 0.1, 0.1, 153},
        {4, 0.2, 0.1, 39},
        {4, 0.5, 0.1, 10},
        {8, 0.0125, 0.1, 19484},
        {8, 0.025, 0.1, 4871},
        {8, 0.05, 0.1, 1218},
        {8, 0.1, 0.1, 305},
        {8, 0.2, 0.1, 77},
        {8, 0.5, 0.1, 14},
        {16, 0.0125, 0.1, 23171},
        {16, 0.025, 0.1, 4871},
        {16, 0.05, 0.1, 1218},
        {16, 0.1, 0.1, 305},
        {16, 0.2, 0.1, 91},
        {16, 0.5, 0.1, 23},
        {32, 0.0125, 0.1, 27555},
        {32, 0.025, 0.1, 8192},
        {32, 0.05, 0.1, 2048},
        {32, 0.1, 0.1, 512},
        {32, 0.2, 0.1, 153},
        {32, 0.5, 0.1, 46},
        {64, 0.0125, 0.1, 46341},
        {64, 0.025, 0.1, 13778},
        {64, 0.05, 0.1, 2897},
        {64, 0.1, 0.1, 725},
        {64, 0.2, 0.1, 256},
        {64, 0.5, 0.1, 77},
    };
    c.rho_table = {
        {2, 0.1, 4},
        {2, 0.2, 4},
        {2, 0.3, 4},
        {4, 0.1, 4},
        {4, 0.2, 4},
        {4, 0.3, 4},
        {4, 0.5, 4},
        {6, 0.1, 4},
        {6, 0.2, 4},
        {6, 0.3, 4},
        {6, 0.5, 8},
        {8, 0.1, 4},
        {8, 0.2, 4},
        {8, 0.3, 4},
        {8, 0.5, 4},
        {10, 0.1, 4},
        {10, 0.2, 4},
        {10, 0.3, 4},
        {10, 0.5, 4},
        {12, 0.1, 4},
        {12, 0.2, 4},
        {12, 0.3, 4},
        {12, 0.5, 4},
        {16, 0.1, 4},
        {16, 0.2, 4},
        {16, 0.3, 4},
        {16, 0.5, 8},
    };
    return c;
}

namespace {

double number(const json& j, const char* name) {
    if (!j.contains(name)) throw config_error(name, "missing from constants file");
    if (!j[name].is_number()) throw config_error(name, "must be a number");
    return j[name].get<double>();
}

} // namespace

frozen_constants constants_from_json(const json& j) {
    frozen_constants c;
    c.l2_c0 = number(j, "l2_c0");
    c.amplify_factor = number(j, "amplify_factor");
    c.bernoulli_mean_c = number(j, "bernoulli_mean_c");
    c.bernoulli_case1_c = number(j, "bernoulli_case1_c");
    c.kl_budget_c = number(j, "kl_budget_c");
    c.at_query_c = number(j, "at_query_c");
    c.tv_stage1_margin = number(j, "tv_stage1_margin");
    c.glauber_burnin = number(j, "glauber_burnin");
    c.kl_estimate_sample_scale = number(j, "kl_estimate_sample_scale");
    try {
        for (const auto& r: j.at("entropy_table"))
            c.entropy_table.push_back({r.at("k").get<std::size_t>(), r.at("eps").get<double>(),
                                       r.at("delta").get<double>(), r.at("m").get<std::size_t>()});
    } catch (const json::exception& e) {
        throw config_error("entropy_table", e.what());
    }
    try {
        for (const auto& r: j.at("rho_table"))
            c.rho_table.push_back({r.at("n").get<std::size_t>(), r.at("eps").get<double>(), r.at("rho").get<double>()});
    } catch (const json::exception& e) {
        throw config_error("rho_table", e.what());
    }
    return c;
}

json constants_to_json(const frozen_constants& c) {
    json j;
    j["l2_c0"] = c.l2_c0;
    j["amplify_factor"] = c.amplify_factor;
    j["bernoulli_mean_c"] = c.bernoulli_mean_c;
    j["bernoulli_case1_c"] = c.bernoulli_case1_c;
    j["kl_budget_c"] = c.kl_budget_c;
    j["at_query_c"] = c.at_query_c;
    j["tv_stage1_margin"] = c.tv_stage1_margin;
    j["glauber_burnin"] = c.glauber_burnin;
    j["kl_estimate_sample_scale"] = c.kl_estimate_sample_scale;
    json et = json::array();
    for (const auto& r: c.entropy_table) et.push_back({{"k", r.k}, {"eps", r.eps}, {"delta", r.delta}, {"m", r.m}});
    j["entropy_table"] = et;
    json rt = json::array();
    for (const auto& r: c.rho_table) rt.push_back({{"n", r.n}, {"eps", r.eps}, {"rho", r.rho}});
    j["rho_table"] = rt;
    return j;
}

frozen_constants load_constants(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error(constants_env, "cannot open constants file " + path);
    try {
        return constants_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw config_error(constants_env, std::string("parse error: ") + e.what());
    }
}

const frozen_constants& constants() {
    static const frozen_constants c = [] {
        if (const char* path = std::getenv(constants_env); path && *path) return load_constants(path);
        return default_constants();
    }();
    return c;
}

std::string constants_digest(const frozen_constants& c) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch: constants_to_json(c).dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
    return buf;
}

} // namespace idt
