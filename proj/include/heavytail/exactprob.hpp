#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <charconv>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "numeric/logspace.hpp"
#include "weights.hpp"

namespace heavytail {

using Real50 = boost::multiprecision::cpp_bin_float_50;

inline constexpr int max_cumulant_order = 12;

struct NormalizeOptions {
    double tail_eps = 1e-14;
    long long max_terms = 50'000'000;
};

namespace detail {

// Upper bound on sum_{k>K} exp(-h(k)) for a decreasing summand, by dyadic blocks.
template <class H>
double dyadic_tail_bound(H&& h, long long K) {
    double bound = 0.0;
    double start = static_cast<double>(K);
    for (int j = 0; j < 200; ++j) {
        double block = start * std::exp(-h(start));
        bound += block;
        if (block < 1e-40 * bound || (block == 0.0 && j > 4)) return bound;
        start *= 2.0;
        if (!std::isfinite(start)) break;
    }
    return std::numeric_limits<double>::infinity();
}

} // namespace detail

// Computes log c so that c exp(-q_raw(k)) sums to one over k >= 1, and stores it.
inline double normalize(WeightModel& model, double tail_eps = 1e-14,
                        long long max_terms = 50'000'000) {
    if (!(tail_eps > 0.0 && tail_eps <= 1e-6))
        throw ParameterError("tail_eps must lie in (0, 1e-6]");
    numeric::CompensatedSum<double> sum;
    int small = 0;
    long long k = 1;
    auto h = [&](double x) { return model.q_raw(x); };
    for (;; ++k) {
        if (k > max_terms)
            throw DivergenceError("normalize: partial sums did not settle within " +
                                  std::to_string(max_terms) + " terms");
        double term = std::exp(-model.q_raw(static_cast<double>(k)));
        if (!std::isfinite(term)) throw DivergenceError("normalize: non-finite weight");
        sum += term;
        small = term < 1e-18 * sum.value() ? small + 1 : 0;
        if (small >= 10) {
            double tail = detail::dyadic_tail_bound(h, k);
            if (tail <= tail_eps * sum.value()) break;
            small = 0;
        }
    }
    double log_c = -std::log(sum.value());
    model.set_log_c(log_c);
    return log_c;
}

inline WeightModel normalized(WeightModel model, double tail_eps = 1e-14) {
    normalize(model, tail_eps);
    return model;
}

struct CumulantSet {
    double log_c = 0.0;
    int r = 0;
    std::vector<double> moments;  // moments[j] = E X^j, moments[0] = 1
    std::vector<double> kappa;    // kappa[j], kappa[0] unused
    std::vector<Real50> kappa_hp;
    double mu = 0.0;
    double sigma2 = 0.0;
    long long truncation = 0;

    double cumulant(int j) const {
        if (j < 1 || j > r) throw OrderError("cumulant order " + std::to_string(j) + " unavailable");
        return kappa[j];
    }
};

// kappa_n = m_n - sum_{k=1}^{n-1} C(n-1,k-1) kappa_k m_{n-k}
template <class T>
std::vector<T> cumulants_from_moments(const std::vector<T>& m) {
    const int r = static_cast<int>(m.size()) - 1;
    std::vector<T> kap(r + 1, T(0));
    for (int n = 1; n <= r; ++n) {
        T acc = m[n];
        T binom = 1;  // C(n-1, k-1)
        for (int k = 1; k < n; ++k) {
            acc -= binom * kap[k] * m[n - k];
            binom = binom * (n - k) / k;
        }
        kap[n] = acc;
    }
    return kap;
}

inline CumulantSet cumulants(const WeightModel& model, int r) {
    if (r < 2 || r > max_cumulant_order)
        throw OrderError("cumulant order must lie in [2, " + std::to_string(max_cumulant_order) + "]");
    const double log_c = model.log_c();
    std::vector<Real50> m(r + 1, Real50(0));
    int small = 0;
    long long k = 1;
    for (;; ++k) {
        double pk = std::exp(log_c - model.q_raw(static_cast<double>(k)));
        Real50 term = pk;
        Real50 kk = static_cast<double>(k);
        for (int j = 0; j <= r; ++j) {
            m[j] += term;
            term *= kk;
        }
        // term now holds k^{r+1} p(k); test the order-r summand
        Real50 top = term / kk;
        small = (top < Real50(1e-18) * m[r]) ? small + 1 : 0;
        if (small >= 10 && k > 2) break;
        if (m[r] > Real50(1e300)) throw OverflowError("cumulants: moment of order r overflows");
        if (k > 100'000'000) throw DivergenceError("cumulants: moment sums did not settle");
    }
    for (int j = 1; j <= r; ++j) m[j] /= m[0];
    m[0] = 1;
    auto kap = cumulants_from_moments(m);
    CumulantSet cs;
    cs.log_c = log_c;
    cs.r = r;
    cs.truncation = k;
    cs.moments.resize(r + 1);
    cs.kappa.assign(r + 1, 0.0);
    cs.kappa_hp = kap;
    for (int j = 0; j <= r; ++j) cs.moments[j] = static_cast<double>(m[j]);
    for (int j = 1; j <= r; ++j) cs.kappa[j] = static_cast<double>(kap[j]);
    cs.mu = cs.kappa[1];
    cs.sigma2 = cs.kappa[2];
    if (!(cs.sigma2 > 0.0)) throw DomainError("cumulants: non-positive variance");
    return cs;
}

// Normalized model with its cumulants; the common input of the analytic modules.
struct Law {
    WeightModel model;
    CumulantSet cum;

    double mu() const { return cum.mu; }
    double sigma2() const { return cum.sigma2; }
};

inline Law make_law(WeightModel model, int r = max_cumulant_order, double tail_eps = 1e-14) {
    if (!model.normalized()) normalize(model, tail_eps);
    CumulantSet cs = cumulants(model, r);
    return {std::move(model), std::move(cs)};
}

struct Pmf {
    long long offset = 0;
    std::vector<double> probs;
    std::vector<double> log_probs;
    double tail_mass_bound = 0.0;

    double prob(long long v) const {
        long long i = v - offset;
        return (i < 0 || i >= static_cast<long long>(probs.size())) ? 0.0 : probs[i];
    }
    double log_prob(long long v) const {
        long long i = v - offset;
        return (i < 0 || i >= static_cast<long long>(log_probs.size())) ? numeric::neg_inf
                                                                         : log_probs[i];
    }
    long long max_value() const { return offset + static_cast<long long>(probs.size()) - 1; }
};

enum class ConvolutionMode { Doubling, Sequential };

struct ConvolutionOptions {
    ConvolutionMode mode = ConvolutionMode::Doubling;
    long long max_length = 400'000;
};

namespace detail {

inline void fill_linear(Pmf& p) {
    p.probs.resize(p.log_probs.size());
    for (std::size_t i = 0; i < p.log_probs.size(); ++i) p.probs[i] = std::exp(p.log_probs[i]);
}

// Product of two pmfs truncated at max_value. Linear arithmetic when
// every product is safely representable, log arithmetic otherwise.
inline Pmf convolve(const Pmf& a, const Pmf& b, long long max_value) {
    Pmf out;
    out.offset = a.offset + b.offset;
    long long len = max_value - out.offset + 1;
    if (len <= 0) return out;
    const long long la = static_cast<long long>(a.log_probs.size());
    const long long lb = static_cast<long long>(b.log_probs.size());
    len = std::min(len, la + lb - 1);
    out.log_probs.assign(len, numeric::neg_inf);

    auto min_log = [](const Pmf& p) {
        double m = 0.0;
        for (double v : p.log_probs) m = std::min(m, v);
        return m;
    };
    const bool linear = min_log(a) > -345.0 && min_log(b) > -345.0;
    for (long long j = 0; j < len; ++j) {
        long long i0 = std::max(0LL, j - (lb - 1)), i1 = std::min(j, la - 1);
        if (linear) {
            numeric::CompensatedSum<double> s;
            for (long long i = i0; i <= i1; ++i) s += a.probs[i] * b.probs[j - i];
            double v = s.value();
            out.log_probs[j] = v > 0.0 ? std::log(v) : numeric::neg_inf;
        } else {
            double hi = numeric::neg_inf;
            for (long long i = i0; i <= i1; ++i) hi = std::max(hi, a.log_probs[i] + b.log_probs[j - i]);
            if (hi == numeric::neg_inf) continue;
            numeric::CompensatedSum<double> s;
            for (long long i = i0; i <= i1; ++i) s += std::exp(a.log_probs[i] + b.log_probs[j - i] - hi);
            out.log_probs[j] = hi + std::log(s.value());
        }
    }
    fill_linear(out);
    return out;
}

inline void close_mass(Pmf& p) {
    numeric::CompensatedSum<double> s;
    for (double v : p.probs) s += v;
    p.tail_mass_bound = std::max(0.0, 1.0 - s.value());
}

} // namespace detail

// Law of one summand restricted to [1, max_value].
inline Pmf single_step_pmf(const WeightModel& model, long long max_value) {
    Pmf p;
    p.offset = 1;
    p.log_probs.resize(std::max(0LL, max_value));
    for (long long k = 1; k <= max_value; ++k) p.log_probs[k - 1] = model.log_p(k);
    detail::fill_linear(p);
    detail::close_mass(p);
    return p;
}

// Exact law of S_n on [n, m_max].
inline Pmf convolve_exact(const WeightModel& model, long long n, long long m_max,
                          const ConvolutionOptions& opt = {}) {
    if (n < 1) throw ParameterError("convolve_exact: n must be positive");
    if (m_max < n) throw ParameterError("convolve_exact: m_max below n");
    if (m_max - n + 1 > opt.max_length)
        throw BudgetError("convolve_exact: support length " + std::to_string(m_max - n + 1) +
                          " exceeds cap " + std::to_string(opt.max_length));
    // one summand never exceeds m_max - (n - 1)
    Pmf step = single_step_pmf(model, m_max - n + 1);
    Pmf result;
    if (opt.mode == ConvolutionMode::Sequential) {
        result = step;
        for (long long i = 1; i < n; ++i) result = detail::convolve(result, step, m_max);
    } else {
        bool have = false;
        Pmf power = step;
        long long e = n;
        while (e > 0) {
            if (e & 1) {
                result = have ? detail::convolve(result, power, m_max) : power;
                have = true;
            }
            e >>= 1;
            if (e > 0) power = detail::convolve(power, power, m_max);
        }
    }
    detail::close_mass(result);
    return result;
}

struct PointProb {
    double prob = 0.0;
    double log_prob = numeric::neg_inf;
    double rel_error = 0.0;
};

// P(S_n = m). Truncating each summand at m - n + 1 is exact for this entry.
inline PointProb exact_point_prob(const WeightModel& model, long long n, long long m,
                                  const ConvolutionOptions& opt = {}) {
    if (m < n) return {};
    Pmf p = convolve_exact(model, n, m, opt);
    double lp = p.log_prob(m);
    double terms = static_cast<double>(m - n + 1);
    return {std::exp(lp), lp, 64.0 * 2.220446049250313e-16 * std::log2(2.0 * n) * std::sqrt(terms)};
}

inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline void write_csv(std::ostream& os, const Pmf& p) {
    os << "value,prob,log_prob\n";
    for (std::size_t i = 0; i < p.probs.size(); ++i)
        os << p.offset + static_cast<long long>(i) << ',' << format_double(p.probs[i]) << ','
           << format_double(p.log_probs[i]) << '\n';
}

} // namespace heavytail
