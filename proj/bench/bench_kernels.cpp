// Serial reference against the OpenMP kernels, plus the trial runners.

#include "idt/harness.hpp"
#include "idt/kernels.hpp"
#include "idt/model.hpp"
#include "idt/model_io.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

using namespace idt;

namespace {

std::vector<double> ising_table(std::size_t n, double beta) {
    std::vector<ising_edge> edges;
    for (std::size_t v = 0; v + 1 < n; ++v) edges.push_back({v, v + 1, beta});
    return model_spec::ising(n, edges, std::vector<double>(n, 0.1)).table();
}

void BM_kl_serial(benchmark::State& st) {
    auto p = ising_table(std::size_t(st.range(0)), 0.3), q = ising_table(std::size_t(st.range(0)), 0.2);
    for (auto _: st) benchmark::DoNotOptimize(kernels::kl_serial(p, q));
    st.SetItemsProcessed(std::int64_t(st.iterations()) * std::int64_t(p.size()));
}

void BM_kl_parallel(benchmark::State& st) {
    auto p = ising_table(std::size_t(st.range(0)), 0.3), q = ising_table(std::size_t(st.range(0)), 0.2);
    for (auto _: st) benchmark::DoNotOptimize(kernels::kl_parallel(p, q));
    st.SetItemsProcessed(std::int64_t(st.iterations()) * std::int64_t(p.size()));
}

void BM_tv_serial(benchmark::State& st) {
    auto p = ising_table(std::size_t(st.range(0)), 0.3), q = ising_table(std::size_t(st.range(0)), 0.2);
    for (auto _: st) benchmark::DoNotOptimize(kernels::tv_serial(p, q));
}

void BM_tv_parallel(benchmark::State& st) {
    auto p = ising_table(std::size_t(st.range(0)), 0.3), q = ising_table(std::size_t(st.range(0)), 0.2);
    for (auto _: st) benchmark::DoNotOptimize(kernels::tv_parallel(p, q));
}

void BM_lse_serial(benchmark::State& st) {
    std::vector<double> w(std::size_t(1) << st.range(0));
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::sin(double(i));
    for (auto _: st) benchmark::DoNotOptimize(kernels::log_sum_exp_serial(w));
}

void BM_lse_parallel(benchmark::State& st) {
    std::vector<double> w(std::size_t(1) << st.range(0));
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::sin(double(i));
    for (auto _: st) benchmark::DoNotOptimize(kernels::log_sum_exp_parallel(w));
}

auto weight = [](std::span<const symbol> x) {
    double s = 0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) s += spin(x[i]) * spin(x[i + 1]);
    return 0.3 * s;
};

void BM_tabulate_serial(benchmark::State& st) {
    const auto n = std::size_t(st.range(0));
    std::vector<double> out(std::size_t(1) << n);
    for (auto _: st) {
        kernels::tabulate_serial(n, 2, weight, out);
        benchmark::ClobberMemory();
    }
}

void BM_tabulate_parallel(benchmark::State& st) {
    const auto n = std::size_t(st.range(0));
    std::vector<double> out(std::size_t(1) << n);
    for (auto _: st) {
        kernels::tabulate_parallel(n, 2, weight, out);
        benchmark::ClobberMemory();
    }
}

prepared_experiment trial_fixture() {
    experiment_config c;
    c.visible = c.hidden = "uniform";
    c.mode = oracle_mode::coordinate;
    c.tester = tester_kind::coordinate_kl;
    c.eps = 1;
    c.trials = 16;
    c.seed = 1;
    model_file u{model_spec::uniform(4, 2), {}};
    return prepare(c, u, u);
}

void BM_trials_serial(benchmark::State& st) {
    auto e = trial_fixture();
    for (auto _: st) benchmark::DoNotOptimize(run_trials_serial(e));
}

void BM_trials_parallel(benchmark::State& st) {
    auto e = trial_fixture();
    for (auto _: st) benchmark::DoNotOptimize(run_trials_parallel(e, 0));
}

} // namespace

BENCHMARK(BM_kl_serial)->DenseRange(12, 20, 4);
BENCHMARK(BM_kl_parallel)->DenseRange(12, 20, 4);
BENCHMARK(BM_tv_serial)->DenseRange(12, 20, 4);
BENCHMARK(BM_tv_parallel)->DenseRange(12, 20, 4);
BENCHMARK(BM_lse_serial)->DenseRange(12, 20, 4);
BENCHMARK(BM_lse_parallel)->DenseRange(12, 20, 4);
BENCHMARK(BM_tabulate_serial)->DenseRange(12, 20, 4);
BENCHMARK(BM_tabulate_parallel)->DenseRange(12, 20, 4);
BENCHMARK(BM_trials_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_trials_parallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
