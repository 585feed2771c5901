#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "cramer.hpp"
#include "exactprob.hpp"
#include "numeric/roots.hpp"

namespace heavytail {

enum class Regime { Moderate, Critical, BigJump };

inline std::string to_string(Regime r) {
    switch (r) {
    case Regime::Moderate: return "moderate";
    case Regime::Critical: return "critical";
    case Regime::BigJump: return "bigjump";
    }
    return "unknown";
}

struct CriticalScales {
    double n = 0.0;
    double x_star = 0.0;
    double N_star = 0.0;
    double N_2star = 0.0;
    double t_star = 0.0;
};

struct CriticalPoints {
    std::optional<double> x_prime;
    std::optional<double> x_n;
    std::optional<double> x_nr;
    int r = 0;
    bool degenerate = false;
    double f_at_xn = 0.0;
    double f_at_a = 0.0;
    double fpp_factor = 0.0;  // 1 - n sigma^2 |q''(x_n)|
};

struct RegimeThresholds {
    double eps1 = 0.05;
    double eps2 = 1.0;
    double clt_floor = 1.0;
};

struct TruncatedPointOptions {
    double min_ratio = 1.05;  // N / N_star
    double bound_K = 2.0;     // |N - x_nr| <= K N_star
    double delta = 1e-6;      // search starts above (1 + delta) x_star
};

namespace detail {

inline const numeric::RootOptions variational_root_opts{60, 1e-13, 0.0};

inline void check_x(const WeightModel& m, double x) {
    if (!(x > m.a())) throw DomainError("point " + std::to_string(x) + " not above a");
}

// f_nr correction terms at u = (N - x)/n: n sum lambda_j u^{j+3} and its two x-derivatives
struct Correction {
    double value = 0.0, d1 = 0.0, d2 = 0.0;
};

inline Correction correction(const CramerCoeffs* c, double n, double N, double x) {
    Correction out;
    if (!c || c->r == 0) return out;
    const double u = (N - x) / n;
    for (int j = c->r - 1; j >= 0; --j) {
        const double l = c->lambda[j];
        out.value += n * l * std::pow(u, j + 3);
        out.d1 += l * (j + 3) * std::pow(u, j + 2);
        out.d2 += l * (j + 3) * (j + 2) * std::pow(u, j + 1) / n;
    }
    return out;
}

} // namespace detail

inline double f_n(const Law& law, double n, double N, double x) {
    detail::check_x(law.model, x);
    return law.model.q(x) + (N - x) * (N - x) / (2.0 * n * law.sigma2());
}

inline double f_n_prime(const Law& law, double n, double N, double x) {
    return law.model.jet_raw(x).d1 - (N - x) / (n * law.sigma2());
}

inline double f_n_second(const Law& law, double n, double x) {
    return law.model.jet_raw(x).d2 + 1.0 / (n * law.sigma2());
}

// f_n at the boundary point, q taken as its continuous extension there.
inline double f_n_boundary(const Law& law, double n, double N) {
    const double a = law.model.support_floor();
    return law.model.q(a) + (N - a) * (N - a) / (2.0 * n * law.sigma2());
}

inline double f_nr(const Law& law, double n, double N, const CramerCoeffs& c, double x) {
    return f_n(law, n, N, x) - detail::correction(&c, n, N, x).value;
}

inline double f_nr_prime(const Law& law, double n, double N, const CramerCoeffs& c, double x) {
    return f_n_prime(law, n, N, x) + detail::correction(&c, n, N, x).d1;
}

inline double f_nr_second(const Law& law, double n, double N, const CramerCoeffs& c, double x) {
    return f_n_second(law, n, x) - detail::correction(&c, n, N, x).d2;
}

// Root of q''(x) = -1/(n sigma^2) where q''' > 0.
inline double inflection_x_star(const Law& law, double n) {
    const auto& m = law.model;
    const double target = -1.0 / (n * law.sigma2());
    auto h = [&](double x) { return m.jet_raw(x).d2 - target; };
    const double floor = std::max(m.regular_from(), m.a());
    if (floor > 0.0 && !(h(floor * (1.0 + 1e-12)) < 0.0))
        throw NoRootError("inflection_x_star: n=" + std::to_string(n) +
                          " is below the threshold for this model");
    double hi = std::max(2.0 * floor, 1.0);
    while (!(h(hi) > 0.0)) {
        hi *= 2.0;
        if (!std::isfinite(hi)) throw NoRootError("inflection_x_star: no sign change");
    }
    double lo = hi;
    while (!(h(lo) < 0.0)) {
        lo = floor > 0.0 ? floor + 0.5 * (lo - floor) : 0.5 * lo;
        if (lo <= floor * (1.0 + 1e-12) && floor > 0.0) lo = floor * (1.0 + 1e-12);
        if (lo == 0.0) throw NoRootError("inflection_x_star: no sign change");
    }
    auto res = numeric::safe_newton(
        [&](double x) {
            auto j = m.jet_raw(x);
            return std::pair{j.d2 - target, j.d3};
        },
        lo, hi, numeric::RootOptions{200, 1e-14, 0.0});
    return res.x;
}

inline double critical_N_star(const Law& law, double n) {
    const double xs = inflection_x_star(law, n);
    return xs + n * law.sigma2() * law.model.jet_raw(xs).d1;
}

// x_n(N): zero of f'_n on (x_star, N) where f'_n increases.
inline double upper_critical_point(const Law& law, double n, double N, double x_star) {
    return numeric::safe_newton(
               [&](double x) {
                   auto j = law.model.jet_raw(x);
                   return std::pair{j.d1 - (N - x) / (n * law.sigma2()),
                                    j.d2 + 1.0 / (n * law.sigma2())};
               },
               x_star, N, detail::variational_root_opts)
        .x;
}

// Smallest N with f_n(x_n) = f_n(a).
inline double critical_N_doublestar(const Law& law, double n) {
    const double xs = inflection_x_star(law, n);
    const double Ns = xs + n * law.sigma2() * law.model.jet_raw(xs).d1;
    const double a = law.model.support_floor();
    const double s2n = n * law.sigma2();
    auto g = [&](double y) {
        double xn = upper_critical_point(law, n, y, xs);
        double diff = law.model.q(xn) - law.model.q(a) +
                      ((y - xn) * (y - xn) - (y - a) * (y - a)) / (2.0 * s2n);
        return std::pair{diff, (a - xn) / s2n};
    };
    double lo = Ns * (1.0 + 1e-6), hi = 2.0 * Ns;
    if (!(g(lo).first > 0.0))
        throw BracketError("critical_N_doublestar: break-even already negative at N_star");
    int tries = 0;
    while (!(g(hi).first < 0.0)) {
        lo = hi;
        hi *= 2.0;
        if (++tries > 80)
            throw BracketError("critical_N_doublestar: no sign change on [" + std::to_string(Ns) +
                               ", " + std::to_string(hi) + "]");
    }
    return numeric::safe_newton(g, lo, hi, numeric::RootOptions{200, 1e-14, 0.0}).x;
}

inline CriticalScales critical_scales(const Law& law, double n) {
    CriticalScales s;
    s.n = n;
    s.x_star = inflection_x_star(law, n);
    s.t_star = law.model.jet_raw(s.x_star).d1;
    s.N_star = s.x_star + n * law.sigma2() * s.t_star;
    s.N_2star = critical_N_doublestar(law, n);
    return s;
}

// Displayed formulas for the critical scales: exact for the stretched family,
// leading-order asymptotes for log-hazard. Empty for other models.
struct ReferenceScales {
    double x_star = 0.0, N_star = 0.0, N_2star = 0.0;
    bool exact = false;
};

inline std::optional<ReferenceScales> reference_scales(const Law& law, double n) {
    const double s2n = n * law.sigma2();
    const double p = law.model.parameter();
    if (law.model.family() == Family::StretchedExponential) {
        const double e = 1.0 / (2.0 - p);
        const double xs = std::pow(p * (1.0 - p) * s2n, e);
        const double C = (2.0 - p) * std::pow(2.0 - 2.0 * p, -(1.0 - p) / (2.0 - p));
        return ReferenceScales{xs, (2.0 - p) / (1.0 - p) * xs, C * std::pow(s2n, e), true};
    }
    if (law.model.family() == Family::LogHazard) {
        const double L = std::log(n);
        const double xs = std::sqrt(std::pow(2.0, 1.0 - p) * p * s2n * std::pow(L, p - 1.0));
        return ReferenceScales{xs, 2.0 * xs, std::sqrt(2.0 * s2n * std::pow(L, p)), false};
    }
    return std::nullopt;
}

inline CriticalPoints critical_points(const Law& law, double n, double N) {
    CriticalPoints cp;
    const double xs = inflection_x_star(law, n);
    const double Ns = xs + n * law.sigma2() * law.model.jet_raw(xs).d1;
    cp.f_at_a = f_n_boundary(law, n, N);
    if (std::abs(N / Ns - 1.0) <= 1e-6) {
        cp.degenerate = true;
        cp.x_n = xs;
        cp.x_prime = xs;
    } else if (N > Ns) {
        cp.x_n = upper_critical_point(law, n, N, xs);
        // largest sign change of f'_n below x_star, scanned downward
        auto fp = [&](double x) { return f_n_prime(law, n, N, x); };
        const double floor = std::max(law.model.a(), law.model.concave_from());
        double hi = xs, x = xs;
        for (int k = 0; k < 400; ++k) {
            x = floor + (x - floor) * 0.85;
            if (x <= floor || x <= 1e-300) break;
            if (fp(x) > 0.0) {
                cp.x_prime = numeric::bisect(fp, x, hi, numeric::RootOptions{200, 1e-14, 0.0}).x;
                break;
            }
            hi = x;
        }
    }
    if (cp.x_n) {
        cp.f_at_xn = f_n(law, n, N, *cp.x_n);
        cp.fpp_factor = 1.0 - n * law.sigma2() * std::abs(law.model.jet_raw(*cp.x_n).d2);
    }
    return cp;
}

// Largest zero of f'_nr in ((1+delta) x_star, N).
inline double truncated_critical_point(const Law& law, double n, double N, const CramerCoeffs& c,
                                       const TruncatedPointOptions& opt = {}) {
    const double xs = inflection_x_star(law, n);
    const double Ns = xs + n * law.sigma2() * law.model.jet_raw(xs).d1;
    if (N < opt.min_ratio * Ns)
        throw PreconditionError("truncated_critical_point: N=" + std::to_string(N) +
                                " below " + std::to_string(opt.min_ratio) + " N_star=" +
                                std::to_string(opt.min_ratio * Ns));
    auto fp = [&](double x) { return f_nr_prime(law, n, N, c, x); };
    const double floor = (1.0 + opt.delta) * xs;
    double hi = N, step = Ns / 32.0, lo = N;
    bool found = false;
    for (int k = 0; k < 200; ++k) {
        lo = std::max(floor, N - step);
        if (fp(lo) < 0.0) { found = true; break; }
        if (lo == floor) break;
        hi = lo;
        step *= 1.5;
    }
    if (!found)
        throw BracketError("truncated_critical_point: f'_nr keeps its sign on [" +
                           std::to_string(floor) + ", " + std::to_string(N) + "]");
    double x = numeric::safe_newton(
                   [&](double y) {
                       return std::pair{fp(y), f_nr_second(law, n, N, c, y)};
                   },
                   lo, hi, detail::variational_root_opts)
                   .x;
    if (std::abs(N - x) > opt.bound_K * Ns)
        throw BracketError("truncated_critical_point: |N - x_nr| = " + std::to_string(N - x) +
                           " exceeds " + std::to_string(opt.bound_K) + " N_star");
    return x;
}

inline Regime classify_regime(const Law& law, double n, double N, const RegimeThresholds& th = {}) {
    if (N <= th.clt_floor * std::sqrt(n))
        throw DomainError("classify_regime: N=" + std::to_string(N) +
                          " inside the central-limit window");
    const double Ns = critical_N_star(law, n);
    if (N <= (1.0 + th.eps1) * Ns) return Regime::Moderate;
    if (N >= th.eps2 * std::pow(n, 1.0 / (2.0 - law.model.alpha_bound()))) return Regime::BigJump;
    return Regime::Critical;
}

} // namespace heavytail
