#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace fpg {

/// Neumaier-compensated accumulator. Summation order is the call order, so
/// results are bitwise reproducible for a fixed input sequence.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) noexcept {
    CompensatedSum s;
    for (double x : xs) s.add(x);
    return s.value();
}

/// Σ wᵢ xᵢ with compensation.
inline double weighted_sum(std::span<const double> w, std::span<const double> x) noexcept {
    CompensatedSum s;
    for (std::size_t i = 0; i < w.size(); ++i) s.add(w[i] * x[i]);
    return s.value();
}

/// Squared l²_m norm Σ mᵢ xᵢ².
inline double weighted_norm2(std::span<const double> m, std::span<const double> x) noexcept {
    CompensatedSum s;
    for (std::size_t i = 0; i < m.size(); ++i) s.add(m[i] * x[i] * x[i]);
    return s.value();
}

inline double min_of(std::span<const double> x) noexcept {
    double v = x.empty() ? 0.0 : x[0];
    for (double e : x) v = e < v ? e : v;
    return v;
}

inline double max_of(std::span<const double> x) noexcept {
    double v = x.empty() ? 0.0 : x[0];
    for (double e : x) v = e > v ? e : v;
    return v;
}

inline double max_abs(std::span<const double> x) noexcept {
    double v = 0.0;
    for (double e : x) v = std::abs(e) > v ? std::abs(e) : v;
    return v;
}

/// log(eᵃ + eᵇ) without overflow.
inline double log_add_exp(double a, double b) noexcept {
    if (a == -INFINITY) return b;
    if (b == -INFINITY) return a;
    const double hi = a > b ? a : b;
    const double lo = a > b ? b : a;
    return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace fpg
