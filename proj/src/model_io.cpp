#include "idt/model_io.hpp"

#include "idt/errors.hpp"

#include <fstream>

namespace idt {

using nlohmann::json;

namespace {

const json& field(const json& j, const char* name) {
    auto it = j.find(name);
    if (it == j.end()) throw config_error(name, "missing");
    return *it;
}

template <class T>
T read(const json& j, const char* name) {
    try {
        return field(j, name).get<T>();
    } catch (const json::exception& e) {
        throw config_error(name, std::string("wrong type: ") + e.what());
    }
}

template <class T>
std::optional<T> read_optional(const json& j, const char* name) {
    if (!j.contains(name) || j[name].is_null()) return std::nullopt;
    return read<T>(j, name);
}

// Model constructors report invalid_model; rethrow with the field that
// the message starts with when there is one.
template <class F>
model_spec build(const char* fallback_field, F&& f) {
    try {
        return f();
    } catch (const invalid_model& e) {
        std::string what = e.what();
        auto colon = what.find(':');
        std::string name = colon == std::string::npos ? fallback_field : what.substr(0, colon);
        if (name.find(' ') != std::string::npos || name.find('[') == 0) name = fallback_field;
        throw config_error(name, what);
    } catch (const scale_guard_exceeded& e) {
        throw config_error(fallback_field, e.what());
    }
}

} // namespace

model_file model_from_json(const json& j) {
    if (!j.is_object()) throw config_error("variant", "model document must be an object");
    auto variant = read<std::string>(j, "variant");
    certificate cert;
    if (j.contains("certificate")) {
        const auto& c = j["certificate"];
        if (!c.is_object()) throw config_error("certificate", "must be an object");
        cert.C = read_optional<double>(c, "C");
        cert.eta = read_optional<double>(c, "eta");
        cert.b = read_optional<double>(c, "b");
    }
    auto n_opt = read_optional<std::size_t>(j, "n");
    auto k_opt = read_optional<std::size_t>(j, "k");
    auto need_n = [&] {
        if (!n_opt) throw config_error("n", "missing");
        return *n_opt;
    };
    auto check_k = [&](const model_spec& m) {
        if (k_opt && *k_opt != m.k()) throw config_error("k", "does not match the payload");
        if (n_opt && *n_opt != m.n()) throw config_error("n", "does not match the payload");
        return m;
    };

    if (variant == "uniform") {
        auto n = need_n();
        if (!k_opt) throw config_error("k", "missing");
        return {build("n", [&] { return model_spec::uniform(n, *k_opt); }), cert};
    }
    if (variant == "product") {
        auto coords = read<std::vector<std::vector<double>>>(j, "coords");
        return {check_k(build("coords", [&] { return model_spec::product(coords); })), cert};
    }
    if (variant == "ising") {
        auto n = need_n();
        if (k_opt && *k_opt != 2) throw config_error("k", "ising models have k = 2");
        std::vector<ising_edge> edges;
        const auto& e = field(j, "edges");
        if (!e.is_array()) throw config_error("edges", "must be an array of [u, v, beta]");
        for (const auto& item: e) {
            if (!item.is_array() || item.size() != 3) throw config_error("edges", "each edge is [u, v, beta]");
            try {
                edges.push_back({item[0].get<std::size_t>(), item[1].get<std::size_t>(), item[2].get<double>()});
            } catch (const json::exception& ex) {
                throw config_error("edges", ex.what());
            }
        }
        auto fields = read_optional<std::vector<double>>(j, "fields").value_or(std::vector<double>{});
        return {build("edges", [&] { return model_spec::ising(n, edges, fields); }), cert};
    }
    if (variant == "explicit_table") {
        auto n = need_n();
        if (!k_opt) throw config_error("k", "missing");
        auto masses = read<std::vector<double>>(j, "masses");
        return {build("masses", [&] { return model_spec::explicit_table(n, *k_opt, masses); }), cert};
    }
    if (variant == "subcube_bad") {
        auto n = need_n();
        auto A = read<std::vector<std::size_t>>(j, "A");
        auto sigma = read<std::vector<symbol>>(j, "sigma");
        if (auto t = read_optional<std::size_t>(j, "t"); t && *t != A.size())
            throw config_error("t", "must equal |A|");
        return {check_k(build("A", [&] { return model_spec::subcube_bad(n, A, sigma); })), cert};
    }
    if (variant == "matched_ising") {
        auto n = need_n();
        auto matching = read<std::vector<std::pair<std::size_t, std::size_t>>>(j, "matching");
        auto beta = read<double>(j, "beta");
        return {check_k(build("matching", [&] { return model_spec::matched_ising(n, matching, beta); })), cert};
    }
    throw config_error("variant", "unknown variant '" + variant + "'");
}

json model_to_json(const model_spec& m, const certificate& cert) {
    json j;
    j["variant"] = std::string(to_string(m.kind()));
    j["n"] = m.n();
    j["k"] = m.k();
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, product_model>) {
                j["coords"] = p.coords;
            } else if constexpr (std::is_same_v<T, ising_model>) {
                json edges = json::array();
                for (const auto& e: p.edges) edges.push_back(json::array({e.u, e.v, e.beta}));
                j["edges"] = edges;
                j["fields"] = p.fields;
            } else if constexpr (std::is_same_v<T, table_model>) {
                j["masses"] = p.masses;
            } else if constexpr (std::is_same_v<T, subcube_bad_model>) {
                j["A"] = p.A;
                j["t"] = p.A.size();
                j["sigma"] = p.sigma;
            } else if constexpr (std::is_same_v<T, matched_ising_model>) {
                j["matching"] = p.matching;
                j["beta"] = p.beta;
            }
        },
        m.payload());
    if (cert.C || cert.eta || cert.b) {
        json c = json::object();
        if (cert.C) c["C"] = *cert.C;
        if (cert.eta) c["eta"] = *cert.eta;
        if (cert.b) c["b"] = *cert.b;
        j["certificate"] = c;
    }
    return j;
}

model_file load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("path", "cannot open model file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw config_error("path", std::string("parse error in ") + path + ": " + e.what());
    }
    return model_from_json(j);
}

void save_model(const std::string& path, const model_spec& m, const certificate& cert) {
    std::ofstream out(path);
    if (!out) throw config_error("out", "cannot write " + path);
    out << model_to_json(m, cert).dump(2) << '\n';
}

} // namespace idt
