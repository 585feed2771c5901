#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace heavytail::numeric {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

// Neumaier compensated accumulator.
template <class T = double>
class CompensatedSum {
public:
    void add(const T& x) {
        T t = sum_ + x;
        using std::abs;
        if (abs(sum_) >= abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    CompensatedSum& operator+=(const T& x) { add(x); return *this; }
    T value() const { return sum_ + comp_; }

private:
    T sum_{};
    T comp_{};
};

inline double log_add(double a, double b) {
    if (a == neg_inf) return b;
    if (b == neg_inf) return a;
    double hi = std::max(a, b), lo = std::min(a, b);
    return hi + std::log1p(std::exp(lo - hi));
}

inline double log_sum_exp(std::span<const double> xs) {
    double hi = neg_inf;
    for (double x : xs) hi = std::max(hi, x);
    if (hi == neg_inf) return neg_inf;
    CompensatedSum<double> s;
    for (double x : xs) s += std::exp(x - hi);
    return hi + std::log(s.value());
}

// A real number kept as sign and log-magnitude.
struct SignedLog {
    int sign = 0;
    double log_abs = neg_inf;

    static SignedLog from(double x) {
        if (x == 0.0) return {};
        return {x > 0 ? 1 : -1, std::log(std::abs(x))};
    }
    double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }
};

inline SignedLog operator*(SignedLog a, SignedLog b) {
    if (a.sign == 0 || b.sign == 0) return {};
    return {a.sign * b.sign, a.log_abs + b.log_abs};
}

inline SignedLog operator+(SignedLog a, SignedLog b) {
    if (a.sign == 0) return b;
    if (b.sign == 0) return a;
    if (a.log_abs < b.log_abs) std::swap(a, b);
    double r = std::exp(b.log_abs - a.log_abs);
    if (a.sign == b.sign) return {a.sign, a.log_abs + std::log1p(r)};
    if (r == 1.0) return {};
    return {a.sign, a.log_abs + std::log1p(-r)};
}

} // namespace heavytail::numeric
