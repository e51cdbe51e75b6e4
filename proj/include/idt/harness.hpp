#pragma once

#include "idt/at_tester.hpp"
#include "idt/model_io.hpp"
#include "idt/oracle.hpp"
#include "idt/subcube.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace idt {

inline constexpr const char* report_schema = "idtest.report/1";

enum class tester_kind { coordinate_kl, coordinate_tv, subcube_kl, subcube_approx, kl_estimate };

std::string_view to_string(tester_kind t) noexcept;
tester_kind tester_from_string(std::string_view s);

// Oracle mode the tester needs at least. Coordinate testers run on Coordinate
// or Subcube oracles; the subcube testers and the estimator need Subcube.
oracle_mode required_mode(tester_kind t) noexcept;
// Throws incompatible_mode when `mode` cannot serve `t`.
void check_compatible(tester_kind t, oracle_mode mode);

struct experiment_config {
    std::string visible;
    std::string hidden;
    oracle_mode mode = oracle_mode::coordinate;
    tester_kind tester = tester_kind::coordinate_kl;
    double eps = 0;
    std::uint64_t trials = 1;
    std::uint64_t seed = 0;
    double budget_scale = 1;
    std::string out;      // NDJSON report; empty writes nothing
    std::string csv;      // optional CSV projection
    int threads = 0;      // 0: every available core
    backend be = backend::exact();
    // kl-estimate only; empty takes the frozen kl_estimate_sample_scale.
    std::optional<double> sample_scale;
};

// Throws config_error naming the field.
void validate(const experiment_config& c);
nlohmann::json config_to_json(const experiment_config& c);

// Everything a trial needs, resolved once: both models, the certificate
// values actually used and the per-trial budget.
struct prepared_experiment {
    experiment_config config;
    model_spec visible;
    model_spec hidden;
    double C = 1;
    double eta = 0.5;
    std::optional<double> b;
    double sample_scale = 1;
    std::optional<double> query_budget; // at_query_c times the theorem form
};

prepared_experiment prepare(const experiment_config& c);
prepared_experiment prepare(const experiment_config& c, const model_file& visible, const model_file& hidden);

struct trial_row {
    std::uint64_t trial = 0;
    std::uint64_t seed = 0;
    std::optional<verdict> v;
    std::optional<double> estimate;
    bool support_violation = false;
    query_counts queries;
    std::size_t levels_visited = 0;
    std::uint64_t pairs = 0;
    std::uint64_t rounds = 0;
    double r_mean = 0, r_sd = 0, r_min = 0, r_max = 0;
    double wall_ms = 0;
};

// Seed of trial t: seed + t (wrapping). The oracle and the tester's own coins
// split it further with derive_seed streams 0 and 1.
std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) noexcept;

trial_row run_trial(const prepared_experiment& e, std::uint64_t trial);

using row_sink = std::function<void(const trial_row&)>;

// Both runners hand rows to `sink` in trial order and return them. The
// parallel one writes from an ordered region, so the sink is never called
// concurrently.
std::vector<trial_row> run_trials_serial(const prepared_experiment& e, const row_sink& sink = {});
std::vector<trial_row> run_trials_parallel(const prepared_experiment& e, int threads, const row_sink& sink = {});

struct report {
    nlohmann::json header;
    std::vector<trial_row> rows;
    nlohmann::json footer;
};

nlohmann::json header_json(const prepared_experiment& e);
nlohmann::json row_to_json(const trial_row& r);
trial_row row_from_json(const nlohmann::json& j);
nlohmann::json footer_json(const prepared_experiment& e, const std::vector<trial_row>& rows);

// Prepares, runs in parallel, streams the NDJSON report to config.out and
// writes the CSV projection. Verdicts never affect the outcome.
report run(const experiment_config& c);
report run(const prepared_experiment& e);

void write_ndjson(std::ostream& os, const report& r);
void write_csv(std::ostream& os, const std::vector<trial_row>& rows);
std::string csv_header();
std::string csv_line(const trial_row& r);

// Throws schema_mismatch for a header with another schema, config_error for
// malformed lines.
report read_report(std::istream& is);
report read_report_file(const std::string& path);

struct wilson_interval {
    double lo = 0;
    double hi = 1;
};
// 95% Wilson score interval for x successes in n trials.
wilson_interval wilson(std::uint64_t x, std::uint64_t n, double z = 1.959963984540054);

// Linear-interpolated quantile of unsorted values.
double quantile(std::vector<double> v, double q);

struct aggregate_row {
    std::string tester;
    std::string visible;
    std::string hidden;
    std::string mode;
    double eps = 0;
    double budget_scale = 1;
    std::size_t reports = 0;
    std::uint64_t trials = 0;
    std::uint64_t accepted = 0; // verdict equal
    std::uint64_t violations = 0;
    double accept_rate = 0;
    wilson_interval accept_ci;
    double q50 = 0, q90 = 0, qmax = 0;
    std::optional<double> budget;
    std::optional<double> max_budget_ratio;
    std::optional<double> mean_estimate;
    std::optional<double> truth;
    std::optional<double> mean_abs_error;
    std::optional<double> within_eps_rate;
};

// Pools reports whose configs agree on everything except seed, trials,
// threads and output paths.
std::vector<aggregate_row> summarize(const std::vector<report>& reports);
void write_summary_text(std::ostream& os, const std::vector<aggregate_row>& rows);
void write_summary_csv(std::ostream& os, const std::vector<aggregate_row>& rows);

} // namespace idt
