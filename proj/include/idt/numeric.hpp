#pragma once

#include <cmath>
#include <span>

namespace idt {

// Neumaier compensated summation.
class kahan_sum {
public:
    void add(double x) noexcept {
        double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    kahan_sum& operator+=(double x) noexcept { add(x); return *this; }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0;
    double comp_ = 0;
};

inline double compensated_sum(std::span<const double> xs) noexcept {
    kahan_sum s;
    for (double x: xs) s.add(x);
    return s.value();
}

// x ln(x/y) with 0 ln 0 = 0; +inf when x > 0 and y == 0.
inline double kl_term(double x, double y) noexcept {
    if (x <= 0) return 0;
    if (y <= 0) return INFINITY;
    return x * std::log(x / y);
}

// KL(p||q) for Bernoulli means.
inline double bernoulli_kl(double p, double q) noexcept {
    return kl_term(p, q) + kl_term(1 - p, 1 - q);
}

} // namespace idt
