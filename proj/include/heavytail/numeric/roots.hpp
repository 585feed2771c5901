#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "../errors.hpp"

namespace heavytail::numeric {

struct RootOptions {
    int max_iter = 200;
    double rel_tol = 1e-13;
    double abs_tol = 0.0;
};

struct RootResult {
    double x = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Plain bisection; f(lo) and f(hi) must differ in sign.
template <class F>
RootResult bisect(F&& f, double lo, double hi, RootOptions opt = {}) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return {lo, 0, true};
    if (fhi == 0.0) return {hi, 0, true};
    if ((flo > 0) == (fhi > 0))
        throw BracketError("bisect: no sign change on [" + std::to_string(lo) + ", " +
                           std::to_string(hi) + "]");
    for (int i = 1; i <= opt.max_iter; ++i) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) return {mid, i, true};
        double fm = f(mid);
        if (fm == 0.0) return {mid, i, true};
        if ((fm > 0) == (flo > 0)) { lo = mid; flo = fm; }
        else hi = mid;
        if (hi - lo <= opt.rel_tol * std::abs(mid) + opt.abs_tol) return {0.5 * (lo + hi), i, true};
    }
    return {0.5 * (lo + hi), opt.max_iter, false};
}

// Newton safeguarded by a bracket. f_df(x) returns {f, f'}.
// Steps leaving the bracket, or failing to halve it, fall back to bisection.
template <class FDF>
RootResult safe_newton(FDF&& f_df, double lo, double hi, RootOptions opt = {}) {
    auto [flo, dlo] = f_df(lo);
    auto [fhi, dhi] = f_df(hi);
    (void)dlo; (void)dhi;
    if (flo == 0.0) return {lo, 0, true};
    if (fhi == 0.0) return {hi, 0, true};
    if ((flo > 0) == (fhi > 0))
        throw BracketError("safe_newton: no sign change on [" + std::to_string(lo) + ", " +
                           std::to_string(hi) + "]");
    const bool rising = fhi > 0;
    double x = 0.5 * (lo + hi);
    double step_old = hi - lo, step = step_old;
    for (int i = 1; i <= opt.max_iter; ++i) {
        auto [fx, dfx] = f_df(x);
        if (fx == 0.0) return {x, i, true};
        if ((fx > 0) == rising) hi = x; else lo = x;
        double xn = x - fx / dfx;
        bool use_newton = std::isfinite(xn) && xn > lo && xn < hi &&
                          std::abs(fx / dfx) < 0.5 * std::abs(step_old);
        step_old = step;
        if (use_newton) {
            step = x - xn;
            x = xn;
        } else {
            double mid = 0.5 * (lo + hi);
            step = x - mid;
            x = mid;
        }
        double tol = opt.rel_tol * std::abs(x) + opt.abs_tol;
        if (std::abs(step) <= tol || hi - lo <= tol) return {x, i, true};
    }
    return {x, opt.max_iter, false};
}

// Grows hi geometrically until f(hi) has the sign opposite to f(lo).
template <class F>
std::pair<double, double> expand_upward(F&& f, double lo, double hi, double factor = 2.0,
                                        int max_steps = 200) {
    double flo = f(lo);
    for (int i = 0; i < max_steps; ++i) {
        double fhi = f(hi);
        if ((fhi > 0) != (flo > 0) || fhi == 0.0) return {lo, hi};
        lo = hi;
        flo = fhi;
        hi *= factor;
    }
    throw BracketError("expand_upward: no sign change found");
}

} // namespace heavytail::numeric
