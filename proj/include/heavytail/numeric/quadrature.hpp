#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <queue>
#include <string>
#include <vector>

#include "../errors.hpp"

namespace heavytail::numeric {

// Size measure used for error control; vector-valued integrands use the max norm.
inline double magnitude(double x) { return std::abs(x); }
inline double magnitude(const std::complex<double>& z) { return std::abs(z); }
template <std::size_t N>
double magnitude(const std::array<std::complex<double>, N>& v) {
    double m = 0.0;
    for (const auto& z : v) m = std::max(m, std::abs(z));
    return m;
}
template <std::size_t N>
double magnitude(const std::array<double, N>& v) {
    double m = 0.0;
    for (double z : v) m = std::max(m, std::abs(z));
    return m;
}

template <class V> V scaled(const V& v, double s) { return v * s; }
template <class T, std::size_t N>
std::array<T, N> scaled(const std::array<T, N>& v, double s) {
    std::array<T, N> r;
    for (std::size_t i = 0; i < N; ++i) r[i] = v[i] * s;
    return r;
}
template <class V> V added(const V& a, const V& b) { return a + b; }
template <class T, std::size_t N>
std::array<T, N> added(const std::array<T, N>& a, const std::array<T, N>& b) {
    std::array<T, N> r;
    for (std::size_t i = 0; i < N; ++i) r[i] = a[i] + b[i];
    return r;
}
template <class V> V zero_like() { return V{}; }

struct QuadOptions {
    double abs_tol = 0.0;
    double rel_tol = 1e-10;
    int max_intervals = 4000;
    // semi-infinite integrals: stop once two successive panels carry
    // less than tail_rel of the accumulated L1 mass
    double tail_rel = 1e-17;
    int max_panels = 80;
    bool throw_on_failure = true;
};

template <class V>
struct QuadResult {
    V value{};
    double error = 0.0;
    double l1 = 0.0;
    long evaluations = 0;
    bool converged = true;
};

namespace detail {

// 21-point Kronrod extension of the 10-point Gauss rule.
inline constexpr std::array<double, 11> xgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};
inline constexpr std::array<double, 11> wgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208289315721, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
inline constexpr std::array<double, 5> wg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

template <class V>
struct Segment {
    double a, b;
    V value;
    double error;
    double l1;
    bool operator<(const Segment& o) const { return error < o.error; }
};

template <class V, class F>
Segment<V> gk21(F& f, double a, double b) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    V fc = f(c);
    V kron = scaled(fc, wgk[10]);
    V gauss = zero_like<V>();
    double l1 = wgk[10] * magnitude(fc);
    std::array<V, 21> vals;
    vals[20] = fc;
    for (int j = 0; j < 10; ++j) {
        double dx = h * xgk[j];
        V f1 = f(c - dx), f2 = f(c + dx);
        vals[2 * j] = f1;
        vals[2 * j + 1] = f2;
        V s = added(f1, f2);
        kron = added(kron, scaled(s, wgk[j]));
        l1 += wgk[j] * (magnitude(f1) + magnitude(f2));
        if (j % 2 == 1) gauss = added(gauss, scaled(s, wg[j / 2]));
    }
    V mean = scaled(kron, 0.5);
    double asc = wgk[10] * magnitude(added(fc, scaled(mean, -1.0)));
    for (int j = 0; j < 10; ++j)
        asc += wgk[j] * (magnitude(added(vals[2 * j], scaled(mean, -1.0))) +
                         magnitude(added(vals[2 * j + 1], scaled(mean, -1.0))));
    asc *= std::abs(h);
    double err = magnitude(added(kron, scaled(gauss, -1.0))) * std::abs(h);
    if (asc != 0.0 && err != 0.0) err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
    l1 *= std::abs(h);
    constexpr double eps = 2.220446049250313e-16;
    if (l1 > 2.2250738585072014e-308 / (50.0 * eps)) err = std::max(err, 50.0 * eps * l1);
    return {a, b, scaled(kron, h), err, l1};
}

} // namespace detail

// Globally adaptive Gauss-Kronrod on a finite interval.
template <class V, class F>
QuadResult<V> integrate(F&& f, double a, double b, const QuadOptions& opt = {}) {
    QuadResult<V> res;
    if (a == b) return res;
    std::priority_queue<detail::Segment<V>> heap;
    auto first = detail::gk21<V>(f, a, b);
    res.evaluations = 21;
    V total = first.value;
    double err = first.error, l1 = first.l1;
    heap.push(first);
    int n = 1;
    auto done = [&] {
        // below ~1e-13 of the L1 norm the estimate is roundoff, not truncation
        return err <= std::max({opt.abs_tol, opt.rel_tol * magnitude(total), 1e-13 * l1});
    };
    while (!done()) {
        if (n >= opt.max_intervals) {
            res.converged = false;
            break;
        }
        auto s = heap.top();
        heap.pop();
        double mid = 0.5 * (s.a + s.b);
        if (mid <= std::min(s.a, s.b) || mid >= std::max(s.a, s.b)) {
            res.converged = false;
            heap.push(s);
            break;
        }
        auto left = detail::gk21<V>(f, s.a, mid);
        auto right = detail::gk21<V>(f, mid, s.b);
        res.evaluations += 42;
        total = added(total, added(added(left.value, right.value), scaled(s.value, -1.0)));
        err += left.error + right.error - s.error;
        l1 += left.l1 + right.l1 - s.l1;
        heap.push(left);
        heap.push(right);
        ++n;
    }
    // re-sum to shed drift from the incremental updates
    V fresh = zero_like<V>();
    double e2 = 0.0, l2 = 0.0;
    while (!heap.empty()) {
        fresh = added(fresh, heap.top().value);
        e2 += heap.top().error;
        l2 += heap.top().l1;
        heap.pop();
    }
    res.value = fresh;
    res.error = e2;
    res.l1 = l2;
    if (!res.converged && opt.throw_on_failure)
        throw QuadratureError("integrate: tolerance not reached on [" + std::to_string(a) + ", " +
                              std::to_string(b) + "], error " + std::to_string(e2));
    return res;
}

// Integral over [a, inf) by geometrically growing panels of initial width h0.
template <class V, class F>
QuadResult<V> integrate_to_infinity(F&& f, double a, double h0, const QuadOptions& opt = {}) {
    QuadResult<V> res;
    QuadOptions inner = opt;
    inner.throw_on_failure = false;
    double lo = a, width = h0;
    int quiet = 0;
    for (int k = 0; k < opt.max_panels; ++k) {
        double hi = lo + width;
        inner.abs_tol = std::max(opt.abs_tol, 1e-2 * opt.rel_tol * magnitude(res.value));
        auto part = integrate<V>(f, lo, hi, inner);
        res.value = added(res.value, part.value);
        res.error += part.error;
        res.l1 += part.l1;
        res.evaluations += part.evaluations;
        res.converged = res.converged && part.converged;
        if (part.l1 <= opt.tail_rel * res.l1) {
            if (++quiet >= 2) {
                if (!res.converged && opt.throw_on_failure)
                    throw QuadratureError("integrate_to_infinity: panel tolerance not reached");
                return res;
            }
        } else {
            quiet = 0;
        }
        lo = hi;
        width *= 2.0;
    }
    res.converged = false;
    if (opt.throw_on_failure)
        throw QuadratureError("integrate_to_infinity: integrand did not decay");
    return res;
}

} // namespace heavytail::numeric
