#include "idt/kernels.hpp"

#include "idt/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace idt::kernels {

double kl_serial(std::span<const double> p, std::span<const double> q) {
    kahan_sum s;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double t = kl_term(p[i], q[i]);
        if (std::isinf(t)) return INFINITY;
        s.add(t);
    }
    return s.value();
}

double kl_parallel(std::span<const double> p, std::span<const double> q) {
    const std::int64_t size = std::int64_t(p.size());
    const int threads = omp_get_max_threads();
    std::vector<double> partial(std::size_t(threads), 0.0);
    bool infinite = false;
#pragma omp parallel reduction(|| : infinite)
    {
        kahan_sum s;
#pragma omp for schedule(static)
        for (std::int64_t i = 0; i < size; ++i) {
            double t = kl_term(p[std::size_t(i)], q[std::size_t(i)]);
            if (std::isinf(t))
                infinite = true;
            else
                s.add(t);
        }
        partial[std::size_t(omp_get_thread_num())] = s.value();
    }
    if (infinite) return INFINITY;
    return compensated_sum(partial);
}

double kl(std::span<const double> p, std::span<const double> q) {
    return p.size() >= parallel_threshold ? kl_parallel(p, q) : kl_serial(p, q);
}

double tv_serial(std::span<const double> p, std::span<const double> q) {
    kahan_sum s;
    for (std::size_t i = 0; i < p.size(); ++i) s.add(std::fabs(p[i] - q[i]));
    return 0.5 * s.value();
}

double tv_parallel(std::span<const double> p, std::span<const double> q) {
    const std::int64_t size = std::int64_t(p.size());
    std::vector<double> partial(std::size_t(omp_get_max_threads()), 0.0);
#pragma omp parallel
    {
        kahan_sum s;
#pragma omp for schedule(static)
        for (std::int64_t i = 0; i < size; ++i)
            s.add(std::fabs(p[std::size_t(i)] - q[std::size_t(i)]));
        partial[std::size_t(omp_get_thread_num())] = s.value();
    }
    return 0.5 * compensated_sum(partial);
}

double tv(std::span<const double> p, std::span<const double> q) {
    return p.size() >= parallel_threshold ? tv_parallel(p, q) : tv_serial(p, q);
}

double log_sum_exp_serial(std::span<const double> w) {
    if (w.empty()) return -INFINITY;
    double top = *std::max_element(w.begin(), w.end());
    if (!std::isfinite(top)) return top;
    kahan_sum s;
    for (double v: w) s.add(std::exp(v - top));
    return top + std::log(s.value());
}

double log_sum_exp_parallel(std::span<const double> w) {
    if (w.empty()) return -INFINITY;
    const std::int64_t size = std::int64_t(w.size());
    double top = -INFINITY;
#pragma omp parallel for reduction(max : top) schedule(static)
    for (std::int64_t i = 0; i < size; ++i) top = std::max(top, w[std::size_t(i)]);
    if (!std::isfinite(top)) return top;
    std::vector<double> partial(std::size_t(omp_get_max_threads()), 0.0);
#pragma omp parallel
    {
        kahan_sum s;
#pragma omp for schedule(static)
        for (std::int64_t i = 0; i < size; ++i) s.add(std::exp(w[std::size_t(i)] - top));
        partial[std::size_t(omp_get_thread_num())] = s.value();
    }
    return top + std::log(compensated_sum(partial));
}

double log_sum_exp(std::span<const double> w) {
    return w.size() >= parallel_threshold ? log_sum_exp_parallel(w) : log_sum_exp_serial(w);
}

} // namespace idt::kernels
