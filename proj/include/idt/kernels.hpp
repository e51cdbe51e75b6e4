#pragma once

// Data-parallel reductions over enumerated state tables. Each kernel has a
// serial reference (kept for tests and benchmarks) and an OpenMP version;
// the dispatching entry points pick OpenMP above parallel_threshold states.

#include "idt/configuration.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <omp.h>

namespace idt::kernels {

inline constexpr std::size_t parallel_threshold = std::size_t(1) << 12;

namespace detail {

inline void advance(std::span<symbol> x, std::size_t k) noexcept {
    for (std::size_t i = x.size(); i-- > 0;) {
        if (std::size_t(++x[i]) < k) return;
        x[i] = 0;
    }
}

} // namespace detail

// out[encode(x)] = f(x) for every x in Q^n, lexicographic order.
template <class F>
void tabulate_serial(std::size_t n, std::size_t k, F&& f, std::span<double> out) {
    configuration x(n, 0);
    for (std::size_t idx = 0; idx < out.size(); ++idx) {
        out[idx] = f(std::span<const symbol>(x));
        detail::advance(x, k);
    }
}

template <class F>
void tabulate_parallel(std::size_t n, std::size_t k, F&& f, std::span<double> out) {
    const std::int64_t total = std::int64_t(out.size());
#pragma omp parallel
    {
        const std::int64_t threads = omp_get_num_threads();
        const std::int64_t tid = omp_get_thread_num();
        const std::int64_t chunk = (total + threads - 1) / threads;
        const std::int64_t begin = std::min(total, tid * chunk);
        const std::int64_t end = std::min(total, begin + chunk);
        configuration x(n, 0);
        decode_into(std::uint64_t(begin), k, x);
        for (std::int64_t idx = begin; idx < end; ++idx) {
            out[std::size_t(idx)] = f(std::span<const symbol>(x));
            detail::advance(x, k);
        }
    }
}

template <class F>
void tabulate(std::size_t n, std::size_t k, F&& f, std::span<double> out) {
    if (out.size() >= parallel_threshold)
        tabulate_parallel(n, k, f, out);
    else
        tabulate_serial(n, k, f, out);
}

// Sum_x p(x) ln(p(x)/q(x)); +inf if p is not absolutely continuous w.r.t. q.
double kl_serial(std::span<const double> p, std::span<const double> q);
double kl_parallel(std::span<const double> p, std::span<const double> q);
double kl(std::span<const double> p, std::span<const double> q);

// (1/2) Sum_x |p(x) - q(x)|.
double tv_serial(std::span<const double> p, std::span<const double> q);
double tv_parallel(std::span<const double> p, std::span<const double> q);
double tv(std::span<const double> p, std::span<const double> q);

// ln Sum_x exp(w(x)), shifted by the maximum for stability.
double log_sum_exp_serial(std::span<const double> w);
double log_sum_exp_parallel(std::span<const double> w);
double log_sum_exp(std::span<const double> w);

} // namespace idt::kernels
