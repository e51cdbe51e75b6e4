#include "idt/at_tester.hpp"
#include "idt/constants.hpp"
#include "idt/errors.hpp"
#include "idt/harness.hpp"
#include "idt/model_io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace idt;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
    auto p = fs::temp_directory_path() / "idt_harness_test";
    fs::create_directories(p);
    return p;
}

std::string write_model(const std::string& name, const model_spec& m, const certificate& cert = {}) {
    auto path = (scratch() / name).string();
    save_model(path, m, cert);
    return path;
}

experiment_config base_config(const std::string& vis, const std::string& hid, tester_kind t, oracle_mode m,
                              double eps, std::uint64_t trials, std::uint64_t seed) {
    experiment_config c;
    c.visible = vis;
    c.hidden = hid;
    c.tester = t;
    c.mode = m;
    c.eps = eps;
    c.trials = trials;
    c.seed = seed;
    c.threads = 2;
    return c;
}

std::string rows_without_wall(const std::vector<trial_row>& rows) {
    std::string s;
    for (const auto& r: rows) {
        auto j = row_to_json(r);
        j.erase("wall_ms");
        s += j.dump() + "\n";
    }
    return s;
}

} // namespace

TEST(Harness, TesterNames) {
    for (auto t: {tester_kind::coordinate_kl, tester_kind::coordinate_tv, tester_kind::subcube_kl,
                  tester_kind::subcube_approx, tester_kind::kl_estimate})
        EXPECT_EQ(tester_from_string(to_string(t)), t);
    try {
        tester_from_string("chi-square");
        FAIL();
    } catch (const config_error& e) {
        EXPECT_EQ(e.field(), "tester");
    }
}

TEST(Harness, CapabilityMatrix) {
    using M = oracle_mode;
    using T = tester_kind;
    struct cell {
        T t;
        M m;
        bool ok;
    };
    const cell cells[] = {
        {T::coordinate_kl, M::general, false},   {T::coordinate_kl, M::coordinate, true},
        {T::coordinate_kl, M::subcube, true},    {T::coordinate_kl, M::pairwise, false},
        {T::coordinate_tv, M::general, false},   {T::coordinate_tv, M::coordinate, true},
        {T::coordinate_tv, M::subcube, true},    {T::coordinate_tv, M::pairwise, false},
        {T::subcube_kl, M::coordinate, false},   {T::subcube_kl, M::subcube, true},
        {T::subcube_approx, M::coordinate, false}, {T::subcube_approx, M::subcube, true},
        {T::kl_estimate, M::general, false},     {T::kl_estimate, M::coordinate, false},
        {T::kl_estimate, M::pairwise, false},    {T::kl_estimate, M::subcube, true},
    };
    for (const auto& c: cells) {
        if (c.ok)
            EXPECT_NO_THROW(check_compatible(c.t, c.m));
        else
            EXPECT_THROW(check_compatible(c.t, c.m), incompatible_mode);
    }
}

TEST(Harness, ConfigErrorsNameTheField) {
    auto u = write_model("u4.json", model_spec::uniform(4, 2));
    auto expect_field = [](experiment_config c, const std::string& field) {
        try {
            validate(c);
            ADD_FAILURE() << "no error for " << field;
        } catch (const config_error& e) {
            EXPECT_EQ(e.field(), field);
        }
    };
    auto c = base_config(u, u, tester_kind::coordinate_kl, oracle_mode::coordinate, 1, 10, 0);
    auto bad = c;
    bad.eps = 0;
    expect_field(bad, "eps");
    bad = c;
    bad.trials = 0;
    expect_field(bad, "trials");
    bad = c;
    bad.budget_scale = -1;
    expect_field(bad, "budget_scale");
    bad = c;
    bad.visible.clear();
    expect_field(bad, "visible");
    bad = c;
    bad.tester = tester_kind::coordinate_tv;
    bad.eps = 1.5;
    expect_field(bad, "eps");

    auto sub = c;
    sub.tester = tester_kind::subcube_kl;
    EXPECT_THROW(run(sub), incompatible_mode);

    auto u5 = write_model("u5.json", model_spec::uniform(5, 2));
    auto shape = base_config(u, u5, tester_kind::coordinate_kl, oracle_mode::coordinate, 1, 1, 0);
    try {
        prepare(shape);
        FAIL();
    } catch (const config_error& e) {
        EXPECT_EQ(e.field(), "hidden");
    }
    auto missing = base_config((scratch() / "absent.json").string(), u, tester_kind::coordinate_kl,
                               oracle_mode::coordinate, 1, 1, 0);
    EXPECT_THROW(prepare(missing), error);
}

TEST(Harness, CertificateResolution) {
    auto u = write_model("u8.json", model_spec::uniform(8, 2));
    auto e = prepare(base_config(u, u, tester_kind::coordinate_kl, oracle_mode::coordinate, 1, 1, 0));
    EXPECT_DOUBLE_EQ(e.C, 1);
    EXPECT_DOUBLE_EQ(e.eta, 0.5);
    at_parameters p;
    p.n = 8;
    p.eps = 1;
    ASSERT_TRUE(e.query_budget);
    EXPECT_DOUBLE_EQ(*e.query_budget, constants().at_query_c * theorem_query_form(p));

    auto prod = write_model("prod3.json", model_spec::product({{0.3, 0.7}, {0.5, 0.5}, {0.9, 0.1}}));
    auto ps = prepare(base_config(prod, prod, tester_kind::subcube_kl, oracle_mode::subcube, 0.5, 1, 0));
    ASSERT_TRUE(ps.b);
    EXPECT_DOUBLE_EQ(*ps.b, 0.1);

    // A strongly coupled K4 has no Dobrushin certificate.
    auto hot = model_spec::ising(4, {{0, 1, 2.0}, {0, 2, 2.0}, {0, 3, 2.0}, {1, 2, 2.0}, {1, 3, 2.0}, {2, 3, 2.0}}, {});
    auto hot_path = write_model("hot.json", hot);
    try {
        prepare(base_config(hot_path, hot_path, tester_kind::coordinate_kl, oracle_mode::coordinate, 1, 1, 0));
        FAIL();
    } catch (const config_error& e) {
        EXPECT_EQ(e.field(), "certificate.C");
    }
    certificate cert;
    cert.C = 4;
    auto certified = write_model("hot_cert.json", hot, cert);
    auto ok = prepare(base_config(certified, certified, tester_kind::coordinate_kl, oracle_mode::coordinate, 1, 1, 0));
    EXPECT_DOUBLE_EQ(ok.C, 4);

    // A weakly coupled chain gets one from Dobrushin's condition.
    auto cool = write_model("cool.json", model_spec::ising(3, {{0, 1, 0.1}, {1, 2, 0.1}}, {}));
    auto ce = prepare(base_config(cool, cool, tester_kind::coordinate_kl, oracle_mode::coordinate, 1, 1, 0));
    EXPECT_GE(ce.C, 1);
}

TEST(Harness, NullBatteryAccepts) {
    auto u = write_model("u4.json", model_spec::uniform(4, 2));
    auto r = run(base_config(u, u, tester_kind::coordinate_kl, oracle_mode::coordinate, 1, 100, 42));
    ASSERT_EQ(r.rows.size(), 100u);
    int accepted = 0;
    for (const auto& row: r.rows) accepted += row.v == verdict::equal;
    EXPECT_GE(accepted, 67);
    EXPECT_EQ(r.footer["trials"], 100);
    EXPECT_EQ(r.footer["far"], 100 - accepted);
}

TEST(Harness, FarBatteryRejects) {
    auto u = write_model("u6.json", model_spec::uniform(6, 2));
    auto bad = write_model("bad6.json", model_spec::subcube_bad(6, {3}, {0, 1, 1, 0, 1, 0}));
    auto r = run(base_config(u, bad, tester_kind::coordinate_kl, oracle_mode::coordinate, 1, 100, 9));
    int far = 0;
    for (const auto& row: r.rows) far += row.v == verdict::far;
    EXPECT_GE(far, 67);
}

TEST(Harness, RowsMatchDirectCalls) {
    auto mu = model_spec::uniform(4, 2);
    auto pi = model_spec::subcube_bad(4, {1}, {1, 1, 0, 1});
    auto vis = write_model("u4.json", mu);
    auto hid = write_model("bad4.json", pi);
    auto e = prepare(base_config(vis, hid, tester_kind::coordinate_kl, oracle_mode::coordinate, 1, 5, 300));
    for (std::uint64_t t = 0; t < 5; ++t) {
        auto row = run_trial(e, t);
        EXPECT_EQ(row.seed, 300 + t);
        oracle o(pi, oracle_mode::coordinate, backend::exact(), derive_seed(300 + t, 0));
        splitmix64 rng(derive_seed(300 + t, 1));
        at_parameters p;
        p.n = 4;
        p.eps = 1;
        auto direct = identity_test_coordinate(mu, p, o, rng);
        EXPECT_EQ(row.v, direct.v);
        EXPECT_EQ(row.queries, direct.queries);
        EXPECT_EQ(row.queries, o.counts());
        EXPECT_EQ(row.pairs, direct.pairs);
    }
}

TEST(Harness, SerialAndParallelAgree) {
    auto u = write_model("u4.json", model_spec::uniform(4, 2));
    auto bad = write_model("bad4.json", model_spec::subcube_bad(4, {1}, {1, 1, 0, 1}));
    for (auto [vis, hid, tester, mode]:
         {std::tuple{u, bad, tester_kind::coordinate_kl, oracle_mode::coordinate},
          std::tuple{u, u, tester_kind::coordinate_tv, oracle_mode::subcube},
          std::tuple{u, bad, tester_kind::subcube_kl, oracle_mode::subcube},
          std::tuple{u, u, tester_kind::kl_estimate, oracle_mode::subcube}}) {
        auto e = prepare(base_config(vis, hid, tester, mode, tester == tester_kind::kl_estimate ? 0.5 : 1, 6, 17));
        const auto serial = rows_without_wall(run_trials_serial(e));
        EXPECT_EQ(serial, rows_without_wall(run_trials_parallel(e, 1)));
        EXPECT_EQ(serial, rows_without_wall(run_trials_parallel(e, 3)));
    }
}

TEST(Harness, SinkSeesRowsInOrder) {
    auto u = write_model("u4.json", model_spec::uniform(4, 2));
    auto e = prepare(base_config(u, u, tester_kind::coordinate_kl, oracle_mode::coordinate, 1, 12, 5));
    std::vector<std::uint64_t> seen;
    run_trials_parallel(e, 4, [&](const trial_row& r) { seen.push_back(r.trial); });
    ASSERT_EQ(seen.size(), 12u);
    for (std::uint64_t t = 0; t < 12; ++t) EXPECT_EQ(seen[t], t);
}

TEST(Harness, ReportFileRoundTrip) {
    auto u = write_model("u4.json", model_spec::uniform(4, 2));
    auto bad = write_model("bad4.json", model_spec::subcube_bad(4, {1}, {1, 1, 0, 1}));
    auto c = base_config(u, bad, tester_kind::coordinate_kl, oracle_mode::coordinate, 1, 8, 123456789012345ULL);
    c.out = (scratch() / "rt.ndjson").string();
    c.csv = (scratch() / "rt.csv").string();
    auto r = run(c);
    auto back = read_report_file(c.out);
    EXPECT_EQ(back.header, r.header);
    EXPECT_EQ(back.footer, r.footer);
    EXPECT_EQ(back.header["schema"], report_schema);
    EXPECT_EQ(back.header["config"]["seed"].get<std::uint64_t>(), 123456789012345ULL);
    EXPECT_EQ(back.header["constants_digest"], constants_digest(constants()));
    ASSERT_EQ(back.rows.size(), r.rows.size());
    for (std::size_t i = 0; i < r.rows.size(); ++i) EXPECT_EQ(row_to_json(back.rows[i]), row_to_json(r.rows[i]));

    std::ifstream csv(c.csv);
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, csv_header());
    std::size_t lines = 0;
    while (std::getline(csv, line)) {
        EXPECT_EQ(line, csv_line(r.rows[lines]));
        ++lines;
    }
    EXPECT_EQ(lines, 8u);

    // Rerunning reproduces every row apart from wall time.
    auto again = run(c);
    EXPECT_EQ(rows_without_wall(again.rows), rows_without_wall(r.rows));
}

TEST(Harness, EstimateFooterCarriesGroundTruth) {
    auto mu = write_model("ber05.json", model_spec::product(std::vector<std::vector<double>>(4, {0.5, 0.5})));
    auto pi = write_model("ber06.json", model_spec::product(std::vector<std::vector<double>>(4, {0.4, 0.6})));
    auto r = run(base_config(mu, pi, tester_kind::kl_estimate, oracle_mode::subcube, 0.3, 4, 1));
    const double truth = 4 * (0.6 * std::log(1.2) + 0.4 * std::log(0.8));
    EXPECT_NEAR(r.footer["truth"].get<double>(), truth, 1e-12);
    EXPECT_LE(r.footer["mean_abs_error"].get<double>(), 0.3);
    for (const auto& row: r.rows) {
        EXPECT_TRUE(row.estimate);
        EXPECT_FALSE(row.v);
        EXPECT_GT(row.rounds, 0u);
    }
}

TEST(Summary, WilsonAndQuantiles) {
    auto w = wilson(5, 10);
    EXPECT_NEAR(w.lo, 0.236593, 1e-6);
    EXPECT_NEAR(w.hi, 0.763407, 1e-6);
    const double z2 = 1.959963984540054 * 1.959963984540054;
    EXPECT_NEAR(wilson(0, 20).hi, z2 / (20 + z2), 1e-12);
    EXPECT_NEAR(wilson(40, 40).lo, 40 / (40 + z2), 1e-12);
    EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 1.0), 4);
    EXPECT_DOUBLE_EQ(quantile({7}, 0.9), 7);
}

TEST(Summary, IdentityAndPooling) {
    auto u = write_model("u4.json", model_spec::uniform(4, 2));
    auto c1 = base_config(u, u, tester_kind::coordinate_kl, oracle_mode::coordinate, 1, 10, 1);
    auto c2 = c1;
    c2.seed = 1000;
    c2.trials = 15;
    auto r1 = run(c1), r2 = run(c2);

    auto one = summarize({r1});
    ASSERT_EQ(one.size(), 1u);
    std::uint64_t acc1 = 0;
    std::vector<double> q;
    for (const auto& row: r1.rows) {
        acc1 += row.v == verdict::equal;
        q.push_back(double(row.queries.total()));
    }
    EXPECT_EQ(one[0].trials, 10u);
    EXPECT_EQ(one[0].accepted, acc1);
    EXPECT_DOUBLE_EQ(one[0].q50, quantile(q, 0.5));
    EXPECT_DOUBLE_EQ(one[0].qmax, quantile(q, 1.0));
    EXPECT_DOUBLE_EQ(*one[0].max_budget_ratio, one[0].qmax / *one[0].budget);

    auto pooled = summarize({r1, r2});
    ASSERT_EQ(pooled.size(), 1u);
    std::uint64_t acc2 = 0;
    for (const auto& row: r2.rows) acc2 += row.v == verdict::equal;
    EXPECT_EQ(pooled[0].reports, 2u);
    EXPECT_EQ(pooled[0].trials, 25u);
    EXPECT_EQ(pooled[0].accepted, acc1 + acc2);
    auto w = wilson(acc1 + acc2, 25);
    EXPECT_DOUBLE_EQ(pooled[0].accept_ci.lo, w.lo);
    EXPECT_DOUBLE_EQ(pooled[0].accept_ci.hi, w.hi);

    auto c3 = c1;
    c3.eps = 0.5;
    EXPECT_EQ(summarize({r1, run(c3)}).size(), 2u);

    std::ostringstream text, csv;
    write_summary_text(text, pooled);
    write_summary_csv(csv, pooled);
    EXPECT_NE(text.str().find("accept rate"), std::string::npos);
    const auto table = csv.str();
    EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 2);
}

TEST(Summary, SchemaMismatch) {
    auto u = write_model("u4.json", model_spec::uniform(4, 2));
    auto r = run(base_config(u, u, tester_kind::coordinate_kl, oracle_mode::coordinate, 1, 2, 1));
    std::ostringstream os;
    write_ndjson(os, r);
    auto text = os.str();
    auto pos = text.find(report_schema);
    ASSERT_NE(pos, std::string::npos);
    text.replace(pos, std::string(report_schema).size(), "idtest.report/0");
    std::istringstream is(text);
    EXPECT_THROW(read_report(is), schema_mismatch);

    auto other = r;
    other.header["schema"] = "idtest.report/2";
    EXPECT_THROW(summarize({r, other}), schema_mismatch);

    std::istringstream empty("");
    EXPECT_THROW(read_report(empty), schema_mismatch);
}

TEST(Constants, FileMirrorsCompiledDefaults) {
    const auto path = std::string(IDT_SOURCE_DIR) + "/config/constants.json";
    EXPECT_EQ(constants_to_json(load_constants(path)), constants_to_json(default_constants()));
    EXPECT_EQ(constants_digest(load_constants(path)), constants_digest(default_constants()));
}
