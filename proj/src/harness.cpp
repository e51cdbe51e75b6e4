#include "idt/harness.hpp"

#include "idt/analysis.hpp"
#include "idt/constants.hpp"
#include "idt/errors.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>

#ifndef IDT_VERSION
#define IDT_VERSION "unknown"
#endif

namespace idt {

using nlohmann::json;

namespace {

constexpr std::pair<tester_kind, std::string_view> tester_names[] = {
    {tester_kind::coordinate_kl, "coordinate-kl"},
    {tester_kind::coordinate_tv, "coordinate-tv"},
    {tester_kind::subcube_kl, "subcube-kl"},
    {tester_kind::subcube_approx, "subcube-approx"},
    {tester_kind::kl_estimate, "kl-estimate"},
};

bool is_coordinate(tester_kind t) { return t == tester_kind::coordinate_kl || t == tester_kind::coordinate_tv; }

// Smallest positive coordinate mass of a uniform or product model, which is
// both its balance eta and its marginal bound b.
std::optional<double> closed_form_balance(const model_spec& m) {
    if (m.kind() == model_kind::uniform) return 1.0 / double(m.k());
    if (m.kind() != model_kind::product) return std::nullopt;
    double lo = 1;
    for (const auto& c: m.as<product_model>().coords)
        for (double v: c)
            if (v > 0) lo = std::min(lo, v);
    return lo;
}

double resolve_eta(const model_file& f) {
    if (f.cert.eta) return *f.cert.eta;
    if (auto v = closed_form_balance(f.model)) return *v;
    if (!f.model.enumerable()) throw config_error("certificate.eta", "visible model too large to derive eta; supply it");
    return balance_profile(f.model).eta;
}

std::optional<double> resolve_b(const model_file& f, bool prefix_only) {
    if (f.cert.b) return f.cert.b;
    if (auto v = closed_form_balance(f.model)) return v;
    if (!f.model.enumerable()) return std::nullopt;
    return balance_profile(f.model, prefix_only).b;
}

double resolve_C(const model_file& f) {
    if (f.cert.C) return *f.cert.C;
    const auto kind = f.model.kind();
    if (kind == model_kind::uniform || kind == model_kind::product) return 1;
    // Dobrushin's condition gives a certificate on small models.
    if (f.model.n() <= 10 && f.model.enumerable()) {
        const double norm = spectral_norm(dobrushin_influence(f.model));
        auto b = resolve_b(f, false);
        if (norm < 1 && b && *b > 0) return dobrushin_constant(*b, 1 - norm);
    }
    throw config_error("certificate.C", "no tensorization constant for this visible model; supply it");
}

json counts_json(const query_counts& q) {
    return {{"general", q.general},
            {"coordinate", q.coordinate},
            {"subcube", q.subcube},
            {"pairwise", q.pairwise},
            {"total", q.total()}};
}

json model_summary(const model_spec& m) { return {{"kind", to_string(m.kind())}, {"n", m.n()}, {"k", m.k()}}; }

json optional_number(const std::optional<double>& v) { return v && std::isfinite(*v) ? json(*v) : json(nullptr); }

std::string num(double v) { return json(v).dump(); }

template <class T>
T get_field(const json& j, const char* name) {
    auto it = j.find(name);
    if (it == j.end()) throw config_error(name, "missing in report");
    try {
        return it->get<T>();
    } catch (const json::exception& e) {
        throw config_error(name, e.what());
    }
}

} // namespace

std::string_view to_string(tester_kind t) noexcept {
    for (auto [k, s]: tester_names)
        if (k == t) return s;
    return "?";
}

tester_kind tester_from_string(std::string_view s) {
    for (auto [k, name]: tester_names)
        if (name == s) return k;
    throw config_error("tester", "unknown tester '" + std::string(s) + "'");
}

oracle_mode required_mode(tester_kind t) noexcept {
    return is_coordinate(t) ? oracle_mode::coordinate : oracle_mode::subcube;
}

void check_compatible(tester_kind t, oracle_mode mode) {
    const auto need = required_mode(t);
    // Pairwise answers General queries only, so it never stands in here.
    const bool ok = need == oracle_mode::coordinate ? (mode == oracle_mode::coordinate || mode == oracle_mode::subcube)
                                                    : mode == oracle_mode::subcube;
    if (!ok)
        throw incompatible_mode("tester " + std::string(to_string(t)) + " needs a " + std::string(to_string(need)) +
                                " oracle, got " + std::string(to_string(mode)));
}

void validate(const experiment_config& c) {
    if (c.visible.empty()) throw config_error("visible", "path required");
    if (c.hidden.empty()) throw config_error("hidden", "path required");
    if (!(c.eps > 0) || !std::isfinite(c.eps)) throw config_error("eps", "must be positive");
    if (c.tester == tester_kind::coordinate_tv && c.eps > 1) throw config_error("eps", "TV distance must be at most 1");
    if (c.trials < 1) throw config_error("trials", "must be at least 1");
    if (!(c.budget_scale > 0) || !std::isfinite(c.budget_scale)) throw config_error("budget_scale", "must be positive");
    if (c.threads < 0) throw config_error("threads", "must be non-negative");
    if (c.sample_scale && !(*c.sample_scale > 0)) throw config_error("sample_scale", "must be positive");
    check_compatible(c.tester, c.mode);
}

json config_to_json(const experiment_config& c) {
    json j = {{"visible", c.visible},
              {"hidden", c.hidden},
              {"oracle", to_string(c.mode)},
              {"tester", to_string(c.tester)},
              {"eps", c.eps},
              {"trials", c.trials},
              {"seed", c.seed},
              {"budget_scale", c.budget_scale},
              {"threads", c.threads},
              {"backend", {{"kind", c.be.kind == backend_kind::exact ? "exact" : "glauber"}, {"steps", c.be.steps}}},
              {"out", c.out},
              {"csv", c.csv}};
    j["sample_scale"] = c.sample_scale ? json(*c.sample_scale) : json(nullptr);
    return j;
}

prepared_experiment prepare(const experiment_config& c) {
    validate(c);
    return prepare(c, load_model(c.visible), load_model(c.hidden));
}

prepared_experiment prepare(const experiment_config& c, const model_file& visible, const model_file& hidden) {
    validate(c);
    if (visible.model.n() != hidden.model.n() || visible.model.k() != hidden.model.k())
        throw config_error("hidden", "hidden model must live on the same Q^n as the visible one");
    prepared_experiment e{c, visible.model, hidden.model, 1, 0.5, std::nullopt, 1, std::nullopt};
    const auto& k = constants();
    e.sample_scale = c.sample_scale.value_or(k.kl_estimate_sample_scale);
    at_parameters p;
    p.n = visible.model.n();
    p.eps = c.eps;
    p.budget_scale = c.budget_scale;
    if (is_coordinate(c.tester)) {
        e.C = resolve_C(visible);
        e.eta = resolve_eta(visible);
        p.C = e.C;
        p.eta = e.eta;
        if (c.tester == tester_kind::coordinate_kl) {
            e.query_budget = c.budget_scale * k.at_query_c * theorem_query_form(p);
        } else {
            p.eps = c.eps * c.eps / 2;
            e.query_budget = double(tv_stage1_samples(c.eps)) + c.budget_scale * k.at_query_c * theorem_query_form(p);
        }
        (void)make_schedule(p); // surfaces invalid_range before any trial runs
    } else {
        e.b = resolve_b(visible, true);
        if (!e.b) throw config_error("certificate.b", "visible model too large to derive b; supply it");
        if (!(*e.b > 0 && *e.b <= 0.5)) throw config_error("certificate.b", "b must lie in (0, 1/2]");
        e.C = 1;
        e.eta = *e.b;
        if (c.tester != tester_kind::kl_estimate) {
            p.C = 1;
            p.eta = *e.b;
            e.query_budget = c.budget_scale * k.at_query_c * theorem_query_form(p);
        }
    }
    return e;
}

std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) noexcept { return seed + trial; }

trial_row run_trial(const prepared_experiment& e, std::uint64_t trial) {
    const auto start = std::chrono::steady_clock::now();
    const auto& c = e.config;
    trial_row row;
    row.trial = trial;
    row.seed = trial_seed(c.seed, trial);
    oracle o(e.hidden, c.mode, c.be, derive_seed(row.seed, 0));
    splitmix64 rng(derive_seed(row.seed, 1));

    auto take = [&](const at_result& r) {
        row.v = r.v;
        row.support_violation = r.support_violation;
        row.queries = r.queries;
        row.levels_visited = r.levels_visited;
        row.pairs = r.pairs;
    };
    at_parameters p;
    p.n = e.visible.n();
    p.eps = c.eps;
    p.C = e.C;
    p.eta = e.eta;
    p.budget_scale = c.budget_scale;
    switch (c.tester) {
    case tester_kind::coordinate_kl: take(identity_test_coordinate(e.visible, p, o, rng)); break;
    case tester_kind::coordinate_tv: take(identity_test_tv(e.visible, p, o, rng)); break;
    case tester_kind::subcube_kl:
        take(identity_test_subcube(e.visible, exact_prefix_provider(e.visible), *e.b, c.eps, o, rng,
                                   subcube_target::exact, c.budget_scale));
        break;
    case tester_kind::subcube_approx:
        take(identity_test_subcube(e.visible, perturbed_prefix_provider(e.visible, derive_seed(row.seed, 2)), *e.b,
                                   c.eps, o, rng, subcube_target::approximate, c.budget_scale));
        break;
    case tester_kind::kl_estimate: {
        kl_estimate_options opt;
        opt.sample_scale = e.sample_scale;
        auto r = estimate_kl_global(e.visible, exact_prefix_provider(e.visible), *e.b, o, c.eps, rng, opt);
        row.support_violation = r.support_violation;
        if (!r.support_violation) row.estimate = r.estimate;
        row.queries = r.queries;
        row.rounds = r.rounds;
        row.r_mean = r.r_mean;
        row.r_sd = r.r_sd;
        row.r_min = r.r_min;
        row.r_max = r.r_max;
        break;
    }
    }
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return row;
}

std::vector<trial_row> run_trials_serial(const prepared_experiment& e, const row_sink& sink) {
    std::vector<trial_row> rows;
    rows.reserve(e.config.trials);
    for (std::uint64_t t = 0; t < e.config.trials; ++t) {
        rows.push_back(run_trial(e, t));
        if (sink) sink(rows.back());
    }
    return rows;
}

std::vector<trial_row> run_trials_parallel(const prepared_experiment& e, int threads, const row_sink& sink) {
    const auto total = std::int64_t(e.config.trials);
    if (threads <= 0) threads = omp_get_num_procs();
    std::vector<trial_row> rows(static_cast<std::size_t>(total));
    std::exception_ptr failure;
    std::mutex failure_lock;
#pragma omp parallel for ordered schedule(dynamic, 1) num_threads(threads)
    for (std::int64_t t = 0; t < total; ++t) {
        bool ok = true;
        try {
            rows[std::size_t(t)] = run_trial(e, std::uint64_t(t));
        } catch (...) {
            ok = false;
            std::lock_guard<std::mutex> g(failure_lock);
            if (!failure) failure = std::current_exception();
        }
#pragma omp ordered
        {
            if (ok && sink) {
                try {
                    sink(rows[std::size_t(t)]);
                } catch (...) {
                    std::lock_guard<std::mutex> g(failure_lock);
                    if (!failure) failure = std::current_exception();
                }
            }
        }
    }
    if (failure) std::rethrow_exception(failure);
    return rows;
}

json header_json(const prepared_experiment& e) {
    return {{"type", "header"},
            {"schema", report_schema},
            {"config", config_to_json(e.config)},
            {"resolved",
             {{"C", e.C},
              {"eta", e.eta},
              {"b", optional_number(e.b)},
              {"sample_scale", e.sample_scale},
              {"query_budget", optional_number(e.query_budget)}}},
            {"models", {{"visible", model_summary(e.visible)}, {"hidden", model_summary(e.hidden)}}},
            {"versions", {{"idtest", IDT_VERSION}, {"compiler", __VERSION__}}},
            {"seed_split", "trial seed = seed + trial; oracle derive_seed(., 0); tester derive_seed(., 1)"},
            {"constants_digest", constants_digest(constants())}};
}

json row_to_json(const trial_row& r) {
    json j = {{"type", "row"}, {"trial", r.trial}, {"seed", r.seed}};
    j["verdict"] = r.v ? json(to_string(*r.v)) : json(nullptr);
    j["estimate"] = optional_number(r.estimate);
    j["support_violation"] = r.support_violation;
    j["queries"] = counts_json(r.queries);
    j["levels_visited"] = r.levels_visited;
    j["pairs"] = r.pairs;
    if (r.rounds > 0)
        j["rounds"] = {{"count", r.rounds}, {"mean", r.r_mean}, {"sd", r.r_sd}, {"min", r.r_min}, {"max", r.r_max}};
    j["wall_ms"] = r.wall_ms;
    return j;
}

trial_row row_from_json(const json& j) {
    trial_row r;
    r.trial = get_field<std::uint64_t>(j, "trial");
    r.seed = get_field<std::uint64_t>(j, "seed");
    if (j.contains("verdict") && !j["verdict"].is_null()) {
        auto v = get_field<std::string>(j, "verdict");
        if (v == "equal")
            r.v = verdict::equal;
        else if (v == "far")
            r.v = verdict::far;
        else
            throw config_error("verdict", "unknown verdict '" + v + "'");
    }
    if (j.contains("estimate") && !j["estimate"].is_null()) r.estimate = get_field<double>(j, "estimate");
    r.support_violation = get_field<bool>(j, "support_violation");
    const auto q = get_field<json>(j, "queries");
    r.queries.general = get_field<std::uint64_t>(q, "general");
    r.queries.coordinate = get_field<std::uint64_t>(q, "coordinate");
    r.queries.subcube = get_field<std::uint64_t>(q, "subcube");
    r.queries.pairwise = get_field<std::uint64_t>(q, "pairwise");
    r.levels_visited = get_field<std::size_t>(j, "levels_visited");
    r.pairs = get_field<std::uint64_t>(j, "pairs");
    if (j.contains("rounds")) {
        const auto& s = j["rounds"];
        r.rounds = get_field<std::uint64_t>(s, "count");
        r.r_mean = get_field<double>(s, "mean");
        r.r_sd = get_field<double>(s, "sd");
        r.r_min = get_field<double>(s, "min");
        r.r_max = get_field<double>(s, "max");
    }
    r.wall_ms = get_field<double>(j, "wall_ms");
    return r;
}

json footer_json(const prepared_experiment& e, const std::vector<trial_row>& rows) {
    std::uint64_t far = 0, violations = 0, max_q = 0;
    for (const auto& r: rows) {
        far += r.v == verdict::far;
        violations += r.support_violation;
        max_q = std::max(max_q, r.queries.total());
    }
    json j = {{"type", "footer"}, {"trials", rows.size()}, {"far", far}, {"support_violations", violations},
              {"max_queries", max_q}};
    if (e.config.tester != tester_kind::kl_estimate) {
        j["accept_rate"] = rows.empty() ? 0.0 : double(rows.size() - far) / double(rows.size());
        return j;
    }
    // Ground truth for the estimator when both models enumerate.
    if (e.visible.enumerable() && e.hidden.enumerable()) {
        const double truth = kl_divergence(e.hidden, e.visible);
        j["truth"] = optional_number(truth);
        j["truth_infinite"] = std::isinf(truth);
        if (std::isfinite(truth)) {
            double err = 0;
            std::uint64_t used = 0, within = 0;
            for (const auto& r: rows) {
                if (!r.estimate) continue;
                const double d = std::fabs(*r.estimate - truth);
                err += d;
                within += d <= e.config.eps;
                ++used;
            }
            j["mean_abs_error"] = used ? json(err / double(used)) : json(nullptr);
            j["within_eps_rate"] = used ? json(double(within) / double(rows.size())) : json(nullptr);
        }
    } else {
        j["truth"] = nullptr;
    }
    return j;
}

report run(const experiment_config& c) { return run(prepare(c)); }

report run(const prepared_experiment& e) {
    report r;
    r.header = header_json(e);
    std::ofstream out;
    if (!e.config.out.empty()) {
        out.open(e.config.out);
        if (!out) throw config_error("out", "cannot open '" + e.config.out + "' for writing");
        out << r.header.dump() << '\n';
    }
    auto sink = [&](const trial_row& row) {
        if (out.is_open()) out << row_to_json(row).dump() << '\n';
    };
    r.rows = run_trials_parallel(e, e.config.threads, sink);
    r.footer = footer_json(e, r.rows);
    if (out.is_open()) {
        out << r.footer.dump() << '\n';
        out.close();
        if (!out) throw config_error("out", "write to '" + e.config.out + "' failed");
    }
    if (!e.config.csv.empty()) {
        std::ofstream csv(e.config.csv);
        if (!csv) throw config_error("csv", "cannot open '" + e.config.csv + "' for writing");
        write_csv(csv, r.rows);
    }
    return r;
}

void write_ndjson(std::ostream& os, const report& r) {
    os << r.header.dump() << '\n';
    for (const auto& row: r.rows) os << row_to_json(row).dump() << '\n';
    if (!r.footer.is_null()) os << r.footer.dump() << '\n';
}

std::string csv_header() {
    return "trial,seed,verdict,estimate,support_violation,general,coordinate,subcube,pairwise,total,levels_visited,"
           "pairs,rounds,wall_ms";
}

std::string csv_line(const trial_row& r) {
    std::ostringstream s;
    s << r.trial << ',' << r.seed << ',' << (r.v ? to_string(*r.v) : "") << ',' << (r.estimate ? num(*r.estimate) : "")
      << ',' << (r.support_violation ? 1 : 0) << ',' << r.queries.general << ',' << r.queries.coordinate << ','
      << r.queries.subcube << ',' << r.queries.pairwise << ',' << r.queries.total() << ',' << r.levels_visited << ','
      << r.pairs << ',' << r.rounds << ',' << num(r.wall_ms);
    return s.str();
}

void write_csv(std::ostream& os, const std::vector<trial_row>& rows) {
    os << csv_header() << '\n';
    for (const auto& r: rows) os << csv_line(r) << '\n';
}

report read_report(std::istream& is) {
    report r;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw config_error("line " + std::to_string(lineno), e.what());
        }
        const auto type = j.value("type", std::string());
        if (r.header.is_null()) {
            if (type != "header") throw schema_mismatch("report does not start with a header record");
            const auto schema = j.value("schema", std::string());
            if (schema != report_schema)
                throw schema_mismatch("report schema '" + schema + "' is not " + std::string(report_schema));
            r.header = std::move(j);
        } else if (type == "row") {
            r.rows.push_back(row_from_json(j));
        } else if (type == "footer") {
            r.footer = std::move(j);
        } else {
            throw config_error("type", "unexpected record type '" + type + "' on line " + std::to_string(lineno));
        }
    }
    if (r.header.is_null()) throw schema_mismatch("empty report");
    return r;
}

report read_report_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("report", "cannot open '" + path + "'");
    return read_report(in);
}

wilson_interval wilson(std::uint64_t x, std::uint64_t n, double z) {
    if (n == 0) return {};
    const double nn = double(n), p = double(x) / nn, z2 = z * z;
    const double centre = (p + z2 / (2 * nn)) / (1 + z2 / nn);
    const double half = z * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn)) / (1 + z2 / nn);
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

double quantile(std::vector<double> v, double q) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    const double pos = q * double(v.size() - 1);
    const auto lo = std::size_t(std::floor(pos));
    const auto hi = std::min(v.size() - 1, lo + 1);
    return v[lo] + (pos - double(lo)) * (v[hi] - v[lo]);
}

std::vector<aggregate_row> summarize(const std::vector<report>& reports) {
    struct group {
        aggregate_row row;
        std::vector<double> queries;
        double est_sum = 0, err_sum = 0;
        std::uint64_t est_count = 0, within = 0;
    };
    std::map<std::string, group> groups;
    std::vector<std::string> order;
    for (const auto& r: reports) {
        if (r.header.value("schema", std::string()) != report_schema) throw schema_mismatch("mixed report schemas");
        const auto& c = r.header.at("config");
        json key = c;
        for (const char* drop: {"seed", "trials", "threads", "out", "csv"}) key.erase(drop);
        const auto k = key.dump();
        auto [it, fresh] = groups.try_emplace(k);
        auto& g = it->second;
        if (fresh) {
            order.push_back(k);
            g.row.tester = get_field<std::string>(c, "tester");
            g.row.visible = get_field<std::string>(c, "visible");
            g.row.hidden = get_field<std::string>(c, "hidden");
            g.row.mode = get_field<std::string>(c, "oracle");
            g.row.eps = get_field<double>(c, "eps");
            g.row.budget_scale = get_field<double>(c, "budget_scale");
            const auto& res = r.header.value("resolved", json::object());
            if (res.contains("query_budget") && !res["query_budget"].is_null())
                g.row.budget = res["query_budget"].get<double>();
            if (r.footer.is_object() && r.footer.contains("truth") && !r.footer["truth"].is_null())
                g.row.truth = r.footer["truth"].get<double>();
        }
        ++g.row.reports;
        for (const auto& t: r.rows) {
            ++g.row.trials;
            g.row.accepted += t.v == verdict::equal;
            g.row.violations += t.support_violation;
            g.queries.push_back(double(t.queries.total()));
            if (t.estimate) {
                g.est_sum += *t.estimate;
                ++g.est_count;
                if (g.row.truth) {
                    const double d = std::fabs(*t.estimate - *g.row.truth);
                    g.err_sum += d;
                    g.within += d <= g.row.eps;
                }
            }
        }
    }
    std::vector<aggregate_row> out;
    for (const auto& k: order) {
        auto& g = groups[k];
        auto& a = g.row;
        a.accept_rate = a.trials ? double(a.accepted) / double(a.trials) : 0;
        a.accept_ci = wilson(a.accepted, a.trials);
        a.q50 = quantile(g.queries, 0.5);
        a.q90 = quantile(g.queries, 0.9);
        a.qmax = quantile(g.queries, 1.0);
        if (a.budget && *a.budget > 0) a.max_budget_ratio = a.qmax / *a.budget;
        if (g.est_count) {
            a.mean_estimate = g.est_sum / double(g.est_count);
            if (a.truth) {
                a.mean_abs_error = g.err_sum / double(g.est_count);
                a.within_eps_rate = double(g.within) / double(a.trials);
            }
        }
        out.push_back(a);
    }
    return out;
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? num(*v) : ""; }

} // namespace

void write_summary_text(std::ostream& os, const std::vector<aggregate_row>& rows) {
    for (const auto& a: rows) {
        os << a.tester << "  " << a.visible << " vs " << a.hidden << "  oracle=" << a.mode << " eps=" << a.eps
           << " budget_scale=" << a.budget_scale << '\n';
        os << std::fixed << std::setprecision(4);
        os << "  reports " << a.reports << ", trials " << a.trials << ", support violations " << a.violations << '\n';
        if (a.tester != "kl-estimate")
            os << "  accept rate " << a.accept_rate << "  95% CI [" << a.accept_ci.lo << ", " << a.accept_ci.hi
               << "]\n";
        os << std::setprecision(0) << "  queries p50 " << a.q50 << "  p90 " << a.q90 << "  max " << a.qmax;
        if (a.budget)
            os << std::setprecision(0) << "  budget " << *a.budget << std::setprecision(4) << "  max/budget "
               << *a.max_budget_ratio;
        os << '\n';
        if (a.mean_estimate) {
            os << std::setprecision(4) << "  mean estimate " << *a.mean_estimate;
            if (a.truth) os << "  truth " << *a.truth << "  mean |err| " << *a.mean_abs_error << "  within eps "
                            << *a.within_eps_rate;
            os << '\n';
        }
        os << std::defaultfloat << std::setprecision(6);
    }
}

void write_summary_csv(std::ostream& os, const std::vector<aggregate_row>& rows) {
    os << "tester,visible,hidden,oracle,eps,budget_scale,reports,trials,accepted,support_violations,accept_rate,"
          "ci_lo,ci_hi,queries_p50,queries_p90,queries_max,budget,max_budget_ratio,mean_estimate,truth,"
          "mean_abs_error,within_eps_rate\n";
    for (const auto& a: rows) {
        os << a.tester << ',' << a.visible << ',' << a.hidden << ',' << a.mode << ',' << num(a.eps) << ','
           << num(a.budget_scale) << ',' << a.reports << ',' << a.trials << ',' << a.accepted << ',' << a.violations
           << ',' << num(a.accept_rate) << ',' << num(a.accept_ci.lo) << ',' << num(a.accept_ci.hi) << ','
           << num(a.q50) << ',' << num(a.q90) << ',' << num(a.qmax) << ',' << opt(a.budget) << ','
           << opt(a.max_budget_ratio) << ',' << opt(a.mean_estimate) << ',' << opt(a.truth) << ','
           << opt(a.mean_abs_error) << ',' << opt(a.within_eps_rate) << '\n';
    }
}

} // namespace idt
