// idtest: run identity-testing experiments from model files.

#include "idt/adversaries.hpp"
#include "idt/constants.hpp"
#include "idt/errors.hpp"
#include "idt/harness.hpp"
#include "idt/model_io.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace idt;

namespace {

struct run_options {
    experiment_config c;
    std::string oracle = "coordinate";
    std::string tester = "coordinate-kl";
    std::string backend_name = "exact";
    std::size_t glauber_steps = 0;
    double sample_scale = 0;
};

void add_common(CLI::App* cmd, run_options& o) {
    cmd->add_option("--visible", o.c.visible, "visible model file (mu)")->required();
    cmd->add_option("--hidden", o.c.hidden, "hidden model file (pi)")->required();
    cmd->add_option("--eps", o.c.eps, "distance parameter")->required();
    cmd->add_option("--trials", o.c.trials, "number of seeded trials")->required();
    cmd->add_option("--seed", o.c.seed, "base seed; trial t uses seed + t")->required();
    cmd->add_option("--out", o.c.out, "NDJSON report path")->required();
    cmd->add_option("--csv", o.c.csv, "CSV projection of the rows");
    cmd->add_option("--threads", o.c.threads, "worker threads (0: all cores)");
    cmd->add_option("--backend", o.backend_name, "exact or glauber")->check(CLI::IsMember({"exact", "glauber"}));
    cmd->add_option("--glauber-steps", o.glauber_steps, "Glauber updates per sample (0: default)");
}

void finish_config(run_options& o) {
    o.c.mode = oracle_mode_from_string(o.oracle);
    o.c.tester = tester_from_string(o.tester);
    o.c.be = o.backend_name == "glauber" ? backend::glauber(o.glauber_steps) : backend::exact();
    if (o.sample_scale > 0) o.c.sample_scale = o.sample_scale;
}

void print_footer(const report& r) { std::cout << r.footer.dump() << '\n'; }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"identity testing under conditional sampling oracles"};
    app.require_subcommand(1);

    run_options test_opt;
    auto* test = app.add_subcommand("test", "run a tester battery");
    add_common(test, test_opt);
    test->add_option("--oracle", test_opt.oracle, "general, coordinate, subcube or pairwise")->required();
    test->add_option("--tester", test_opt.tester,
                     "coordinate-kl, coordinate-tv, subcube-kl, subcube-approx or kl-estimate")
        ->required();
    test->add_option("--budget-scale", test_opt.c.budget_scale, "multiplies every level size");

    run_options est_opt;
    est_opt.oracle = "subcube";
    est_opt.tester = "kl-estimate";
    auto* est = app.add_subcommand("estimate-kl", "estimate KL(pi || mu) over a subcube oracle");
    add_common(est, est_opt);
    est->add_option("--sample-scale", est_opt.sample_scale, "inner sample-size multiplier (default: frozen)");

    std::vector<std::string> paths;
    std::string summary_csv;
    auto* sum = app.add_subcommand("summarize", "aggregate reports");
    sum->add_option("reports", paths, "report files")->required();
    sum->add_option("--csv", summary_csv, "write the aggregate table as CSV");

    auto* adv = app.add_subcommand("adversary", "adversarial fixtures");
    adv->require_subcommand(1);
    auto* gen = adv->add_subcommand("gen", "write an adversary model file");
    std::string family, adv_out;
    std::size_t n = 0;
    double eps = 0;
    std::uint64_t seed = 0;
    std::size_t t_override = 0;
    double rho = 0;
    gen->add_option("--family", family)->required()->check(CLI::IsMember({"subcube-bad", "matched-ising"}));
    gen->add_option("--n", n)->required();
    gen->add_option("--eps", eps)->required();
    gen->add_option("--seed", seed);
    gen->add_option("--t", t_override, "subcube-bad: |A| instead of the eps-derived t");
    gen->add_option("--rho", rho, "matched-ising: beta = rho eps / sqrt(n) (default: calibrated)");
    gen->add_option("--out", adv_out)->required();

    auto* consts = app.add_subcommand("constants", "print the frozen constants in effect");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*test || *est) {
            auto& o = *test ? test_opt : est_opt;
            finish_config(o);
            print_footer(run(o.c));
        } else if (*sum) {
            std::vector<report> reports;
            for (const auto& p: paths) reports.push_back(read_report_file(p));
            auto rows = summarize(reports);
            write_summary_text(std::cout, rows);
            if (!summary_csv.empty()) {
                std::ofstream f(summary_csv);
                if (!f) throw config_error("csv", "cannot open '" + summary_csv + "'");
                write_summary_csv(f, rows);
            }
        } else if (*consts) {
            std::cout << constants_to_json(constants()).dump(2) << '\n';
        } else if (*gen) {
            splitmix64 rng(seed);
            if (family == "subcube-bad") {
                auto s = t_override ? random_subcube_bad(n, t_override, rng) : make_subcube_bad(n, eps, rng);
                save_model(adv_out, s.model());
                std::cout << "t=" << s.t() << " kl=" << subcube_bad_kl(s) << " tv=" << subcube_bad_tv(s) << '\n';
            } else {
                auto s = make_matched_ising(n, eps, rng, rho > 0 ? std::optional<double>(rho) : std::nullopt);
                save_model(adv_out, s.model());
                std::cout << "beta=" << s.beta << " tv=" << tv_matched_ising_to_uniform(s) << '\n';
            }
        }
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
