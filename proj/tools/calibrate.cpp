// Monte Carlo calibration of the frozen constants. Prints tables; the chosen
// values are copied into config/constants.json and src/constants.cpp by hand.

#include "idt/adversaries.hpp"
#include "idt/constants.hpp"
#include "idt/subcube.hpp"
#include "idt/testers.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

using namespace idt;

namespace {

std::vector<double> geometric(std::size_t k, double r) {
    std::vector<double> q(k);
    double s = 0;
    for (std::size_t a = 0; a < k; ++a) s += q[a] = std::pow(r, double(a));
    for (auto& v: q) v /= s;
    return q;
}

double l2(const std::vector<double>& p, const std::vector<double>& q) {
    double s = 0;
    for (std::size_t a = 0; a < p.size(); ++a) s += (p[a] - q[a]) * (p[a] - q[a]);
    return std::sqrt(s);
}

// Two alternatives at l2 distance exactly eps2: a spread +-d pattern when
// feasible and a mixture towards the lightest symbol.
std::vector<std::vector<double>> far_points(const std::vector<double>& q, double eps2) {
    std::vector<std::vector<double>> out;
    for (std::size_t r = q.size() - q.size() % 2; r >= 2; r -= 2) {
        double d = eps2 / std::sqrt(double(r));
        bool ok = true;
        for (std::size_t a = 1; a < r; a += 2) ok = ok && q[a] >= d;
        if (!ok) continue;
        auto p = q;
        for (std::size_t a = 0; a < r; ++a) p[a] += (a % 2 == 0 ? d : -d);
        out.push_back(p);
        break;
    }
    std::size_t lo = 0;
    for (std::size_t a = 1; a < q.size(); ++a)
        if (q[a] < q[lo]) lo = a;
    std::vector<double> dir(q.size());
    for (std::size_t a = 0; a < q.size(); ++a) dir[a] = (a == lo) - q[a];
    double norm = l2(dir, std::vector<double>(q.size(), 0.0));
    if (norm >= eps2) {
        auto p = q;
        for (std::size_t a = 0; a < q.size(); ++a) p[a] += eps2 / norm * dir[a];
        out.push_back(p);
    }
    return out;
}

std::vector<double> renormalized(std::vector<double> p) {
    double s = 0;
    for (double& v: p) v = std::max(v, 0.0), s += v;
    for (double& v: p) v /= s;
    double t = 0;
    for (std::size_t a = 0; a + 1 < p.size(); ++a) t += p[a];
    p.back() = 1 - t;
    return p;
}

double l2_error(const std::vector<double>& q, const std::vector<double>& p, double eps2, bool far, int trials,
                std::uint64_t seed) {
    small_distribution qd(q);
    int wrong = 0;
    for (int t = 0; t < trials; ++t) {
        splitmix64 rng(derive_seed(seed, std::uint64_t(t)));
        auto s = iid_stream(p, rng);
        auto v = l2_identity_test(qd, s, eps2, rng);
        wrong += far ? v == verdict::equal : v == verdict::far;
    }
    return double(wrong) / trials;
}

void calibrate_l2(int trials, bool verbose, const std::vector<double>& c0_grid) {
    std::printf("# l2 tester: worst error over the fixture grid per c0 (target <= 1/6)\n");
    std::printf("c0,worst_null,worst_far\n");
    for (double c0: c0_grid) {
        auto c = constants();
        const_cast<frozen_constants&>(constants()).l2_c0 = c0;
        double wn = 0, wf = 0;
        std::uint64_t seed = 1;
        for (std::size_t k: {4, 16, 64})
            for (double eps2: {0.1, 0.25, 0.5})
                for (int shape = 0; shape < 2; ++shape) {
                    auto q = renormalized(shape == 0 ? std::vector<double>(k, 1.0 / double(k)) : geometric(k, 0.8));
                    wn = std::max(wn, l2_error(q, q, eps2, false, trials, seed++));
                    int which = 0;
                    for (auto& p: far_points(q, eps2)) {
                        double e = l2_error(q, renormalized(p), eps2, true, trials, seed++);
                        if (verbose && e > 1.0 / 6) std::printf("  far k=%zu eps2=%.2f shape=%d alt=%d err=%.3f\n", k, eps2, shape, which, e);
                        ++which;
                        wf = std::max(wf, e);
                    }
                }
        const_cast<frozen_constants&>(constants()).l2_c0 = c.l2_c0;
        std::printf("%.2f,%.4f,%.4f\n", c0, wn, wf);
    }
}

double entropy_of(const std::vector<double>& p) {
    double h = 0;
    for (double v: p)
        if (v > 0) h -= v * std::log(v);
    return h;
}

std::vector<std::vector<double>> entropy_fixtures(std::size_t k) {
    std::vector<std::vector<double>> out{renormalized(std::vector<double>(k, 1.0 / double(k))),
                                         renormalized(geometric(k, 0.5)), renormalized(geometric(k, 0.8))};
    for (double heavy: {0.05, 0.1, 0.2, 0.3}) {
        std::vector<double> p(k, (1 - heavy) / double(k - 1));
        p[0] = heavy;
        out.push_back(renormalized(p));
    }
    return out;
}

// Fraction of runs with |H-hat - H| > eps at sample size m.
double entropy_error(const std::vector<double>& p, std::uint64_t m, double eps, int trials, std::uint64_t seed) {
    const double h = entropy_of(p);
    std::vector<double> cum(p.size());
    double acc = 0;
    for (std::size_t a = 0; a < p.size(); ++a) cum[a] = acc += p[a];
    std::vector<symbol> xs(m);
    int wrong = 0;
    for (int t = 0; t < trials; ++t) {
        splitmix64 rng(derive_seed(seed, std::uint64_t(t)));
        for (auto& x: xs) {
            double u = rng.uniform01();
            x = symbol(std::min<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin(), p.size() - 1));
        }
        wrong += std::fabs(miller_madow_entropy(xs, p.size()) - h) > eps;
    }
    return double(wrong) / trials;
}

// Smallest m on the grid 2^{t/4} whose worst fixture error is <= target.
void calibrate_entropy(int trials, const std::vector<std::size_t>& ks, const std::vector<double>& eps_grid,
                       double delta, std::uint64_t m_max) {
    std::printf("# Miller-Madow sample sizes: worst fixture error <= 0.8 delta over %d runs\n", trials);
    std::printf("k,eps,delta,m,bound\n");
    const double target = 0.8 * delta;
    for (auto k: ks)
        for (double eps: eps_grid) {
            auto fx = entropy_fixtures(k);
            auto worst = [&](std::uint64_t m) {
                double w = 0;
                std::uint64_t seed = 77;
                for (auto& p: fx) w = std::max(w, entropy_error(p, m, eps, trials, seed++));
                return w;
            };
            int lo = 0, hi = 0;
            while (std::uint64_t(std::ldexp(1.0, hi / 4)) <= m_max && worst(std::uint64_t(std::pow(2.0, hi / 4.0))) > target) {
                lo = hi;
                hi += 8;
            }
            auto m_of = [](int t) { return std::uint64_t(std::ceil(std::pow(2.0, t / 4.0))); };
            if (m_of(hi) > m_max) {
                std::printf("%zu,%g,%g,skip,%llu\n", k, eps, delta, (unsigned long long)miller_madow_bound(k, eps, delta));
                continue;
            }
            while (hi - lo > 1) {
                int mid = (lo + hi) / 2;
                (worst(m_of(mid)) > target ? lo : hi) = mid;
            }
            std::printf("%zu,%g,%g,%llu,%llu\n", k, eps, delta, (unsigned long long)m_of(hi),
                        (unsigned long long)miller_madow_bound(k, eps, delta));
            std::fflush(stdout);
        }
}

// Smallest rho on the grid with TV(pi_M, uniform) >= eps; the matching does
// not change the TV, so a fixed one is used.
void calibrate_rho(const std::vector<std::size_t>& ns, const std::vector<double>& eps_grid,
                   const std::vector<double>& rho_grid) {
    std::printf("# matched Ising: smallest rho with TV >= eps\n");
    std::printf("n,eps,rho,beta,tv\n");
    for (auto n: ns)
        for (double eps: eps_grid) {
            std::vector<std::pair<std::size_t, std::size_t>> m;
            for (std::size_t a = 0; a + 1 < n; a += 2) m.emplace_back(a, a + 1);
            bool found = false;
            for (double rho: rho_grid) {
                auto s = make_matched_ising(n, m, matched_beta(n, eps, rho));
                const double tv = tv_matched_ising_to_uniform(s);
                if (tv >= eps) {
                    std::printf("%zu,%g,%g,%.6f,%.6f\n", n, eps, rho, s.beta, tv);
                    found = true;
                    break;
                }
            }
            if (!found) std::printf("%zu,%g,none,,\n", n, eps);
        }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"calibrate frozen constants"};
    int trials = 2000;
    bool verbose = false;
    std::vector<double> c0_grid{1, 2, 4, 8, 16, 24, 32, 48, 64};
    app.add_flag("-v", verbose);
    app.add_option("--trials", trials);
    auto* l2cmd = app.add_subcommand("l2", "l2 tester constant c0");
    l2cmd->add_option("--c0", c0_grid);
    auto* entcmd = app.add_subcommand("entropy", "entropy estimator sample sizes");
    std::vector<std::size_t> ks{2, 3, 4, 8, 16, 32, 64};
    std::vector<double> eps_grid{0.0125, 0.025, 0.05, 0.1, 0.2, 0.5};
    double ent_delta = 0.1;
    double m_max = 2e5;
    entcmd->add_option("--k", ks);
    entcmd->add_option("--eps", eps_grid);
    entcmd->add_option("--delta", ent_delta);
    entcmd->add_option("--m-max", m_max);
    auto* rhocmd = app.add_subcommand("rho", "matched Ising coupling scale");
    std::vector<std::size_t> rho_ns{2, 4, 6, 8, 10, 12, 16};
    std::vector<double> rho_eps{0.1, 0.2, 0.3, 0.5};
    std::vector<double> rho_grid{1, 2, 4, 8, 16, 32};
    rhocmd->add_option("--n", rho_ns);
    rhocmd->add_option("--eps", rho_eps);
    rhocmd->add_option("--grid", rho_grid);
    app.require_subcommand(1);
    CLI11_PARSE(app, argc, argv);
    if (*l2cmd) calibrate_l2(trials, verbose, c0_grid);
    if (*rhocmd) calibrate_rho(rho_ns, rho_eps, rho_grid);
    if (*entcmd) calibrate_entropy(trials, ks, eps_grid, ent_delta, std::uint64_t(m_max));
    return 0;
}
