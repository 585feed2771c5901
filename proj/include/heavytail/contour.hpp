#pragma once

#include <array>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "exactprob.hpp"
#include "numeric/logspace.hpp"
#include "numeric/quadrature.hpp"
#include "numeric/roots.hpp"
#include "variational.hpp"

namespace heavytail {

using cd = std::complex<double>;

struct ContourOptions {
    double inner_rel_tol = 1e-12;  // integrals over the xi line
    double outer_rel_tol = 1e-10;  // integrals over t and theta
    double delta_cutoff = 0.25;    // small-t window for phi
    std::optional<double> lindelof_line;  // defaults to the model's abscissa
    std::optional<double> bromwich_line;  // defaults to max(b', xi(t))
};

namespace detail {

inline numeric::QuadOptions inner_quad(const ContourOptions& o) {
    numeric::QuadOptions q;
    q.rel_tol = o.inner_rel_tol;
    q.tail_rel = 1e-18;
    return q;
}

inline double lindelof_line(const WeightModel& m, const ContourOptions& o) {
    return o.lindelof_line.value_or(m.lindelof_abscissa());
}

// d^k/du^k of L(u) = -(1/2) int p(xi) e^{xi u} / sin(pi xi) ds on xi = b' + is,
// k = 0..K-1, with 1/sin rewritten so that no factor overflows.
template <std::size_t K>
std::array<cd, K> lindelof_L(const WeightModel& m, cd u, const ContourOptions& o) {
    const double b = lindelof_line(m, o);
    const cd I(0.0, 1.0), twopi_i(0.0, 2.0 * std::numbers::pi);
    const cd up = u + I * std::numbers::pi, um = u - I * std::numbers::pi;
    auto f = [&](double s) {
        std::array<cd, K> out;
        const cd xp(b, s), xm(b, -s);
        const cd ep = std::exp(m.log_p(xp) + xp * up) * (-I) / (std::exp(twopi_i * xp) - 1.0);
        const cd em = std::exp(m.log_p(xm) + xm * um) * (-I) / (1.0 - std::exp(-twopi_i * xm));
        cd pp = 1.0, pm = 1.0;
        for (std::size_t k = 0; k < K; ++k) {
            out[k] = ep * pp + em * pm;
            pp *= xp;
            pm *= xm;
        }
        return out;
    };
    auto res = numeric::integrate_to_infinity<std::array<cd, K>>(f, 0.0, 1.0, inner_quad(o));
    return res.value;
}

// sum_{1 <= k < b'} p(k) k^j z^k, the terms left of the integration line
template <std::size_t K>
std::array<cd, K> lindelof_polynomial(const WeightModel& m, cd z, const ContourOptions& o) {
    std::array<cd, K> out{};
    const double b = lindelof_line(m, o);
    for (long long k = 1; k < b; ++k) {
        cd term = m.p(k) * std::pow(z, static_cast<double>(k));
        for (std::size_t j = 0; j < K; ++j) {
            out[j] += term;
            term *= static_cast<double>(k);
        }
    }
    return out;
}

} // namespace detail

// G(z) = sum p(k) z^k continued to the plane slit along [1, inf).
inline cd lindelof_G(const WeightModel& m, cd z, const ContourOptions& o = {}) {
    if (z.imag() == 0.0 && z.real() >= 1.0)
        throw SlitError("lindelof_G: z = " + std::to_string(z.real()) + " lies on the slit");
    if (z == cd(0.0, 0.0)) return 0.0;
    const cd u = std::log(-z);
    return detail::lindelof_polynomial<1>(m, z, o)[0] + detail::lindelof_L<1>(m, u, o)[0];
}

// G(e^t + i0) and its first two t-derivatives.
inline std::array<cd, 3> boundary_G(const WeightModel& m, double t, const ContourOptions& o = {}) {
    auto poly = detail::lindelof_polynomial<3>(m, cd(std::exp(t), 0.0), o);
    auto L = detail::lindelof_L<3>(m, cd(t, -std::numbers::pi), o);
    return {poly[0] + L[0], poly[1] + L[1], poly[2] + L[2]};
}

// Direct power series, valid for |z| < 1; returns sum p(k) k^j z^k for j < K.
template <std::size_t K = 1>
std::array<cd, K> power_series_G(const WeightModel& m, cd z) {
    if (std::abs(z) >= 1.0) throw DomainError("power_series_G: |z| >= 1");
    std::array<numeric::CompensatedSum<cd>, K> acc;
    const double lr = std::log(std::abs(z)), th = std::arg(z);
    int small = 0;
    double total = 0.0;
    for (long long k = 1; k < 100'000'000; ++k) {
        const double kk = static_cast<double>(k);
        const double lmag = m.log_p(k) + kk * lr;
        cd term = std::polar(std::exp(lmag), kk * th);
        const double top = std::exp(lmag + (K - 1) * std::log(kk));
        for (std::size_t j = 0; j < K; ++j) {
            acc[j] += term;
            term *= kk;
        }
        total += top;
        small = top < 1e-18 * total ? small + 1 : 0;
        if (small >= 10) break;
    }
    std::array<cd, K> out;
    for (std::size_t j = 0; j < K; ++j) out[j] = acc[j].value();
    return out;
}

// xi(t): the solution of q'(xi) = t on the concave branch.
inline double xi_of_t(const WeightModel& m, double t) {
    if (!(t > 0.0)) throw DomainError("xi_of_t: t must be positive");
    const double floor = std::max(m.concave_from(), m.a());
    const double top = floor > 0.0 ? m.jet_raw(floor).d1 : INFINITY;
    if (!(t < top))
        throw DomainError("xi_of_t: t = " + std::to_string(t) + " above the range of q'");
    auto g = [&](double x) { return m.jet_raw(x).d1 - t; };
    double hi = std::max(1.0, 2.0 * floor);
    while (g(hi) > 0.0) hi *= 2.0;
    double lo = hi;
    while (!(g(lo) > 0.0)) lo = floor > 0.0 ? floor + 0.5 * (lo - floor) : 0.5 * lo;
    return numeric::safe_newton(
               [&](double x) {
                   auto j = m.jet_raw(x);
                   return std::pair{j.d1 - t, j.d2};
               },
               lo, hi, numeric::RootOptions{200, 1e-15, 0.0})
        .x;
}

struct Dual {
    double xi = 0.0;
    double psi = 0.0;
    double d2 = 0.0;  // psi'' = 1/q''(xi)
    double d3 = 0.0;
};

// psi(t) = t xi(t) - q(xi(t)), with q carrying the -log c shift.
inline Dual psi(const WeightModel& m, double t) {
    Dual d;
    d.xi = xi_of_t(m, t);
    auto j = m.jet(d.xi);
    d.psi = t * d.xi - j.q;
    d.d2 = 1.0 / j.d2;
    d.d3 = -j.d3 / (j.d2 * j.d2 * j.d2);
    return d;
}

// log of (1/2) sqrt(2 pi |psi''|) e^psi, the saddle value of Im G(e^t).
inline double im_G_saddle_log(const WeightModel& m, double t) {
    Dual d = psi(m, t);
    return std::log(0.5) + 0.5 * std::log(2.0 * std::numbers::pi * std::abs(d.d2)) + d.psi;
}

// Im G(e^t + i0) = int_0^inf Re[p(x0 + is) e^{t(x0 + is)}] ds, returned in
// log form. The default line passes through the real saddle xi(t).
inline numeric::SignedLog im_G_bromwich(const WeightModel& m, double t, const ContourOptions& o = {}) {
    if (t < 0.0) throw DomainError("im_G_bromwich: t must be non-negative");
    double x0;
    if (o.bromwich_line) {
        x0 = *o.bromwich_line;
    } else {
        x0 = detail::lindelof_line(m, o);
        bool saddle = false;
        if (t > 0.0) {
            try {
                const double xi = xi_of_t(m, t);
                saddle = xi > x0;
                x0 = std::max(x0, xi);
            } catch (const DomainError&) {
            }
        }
        // with no saddle right of the line the vertical integrand only oscillates;
        // there Im G is of order one and the Lindelof value is accurate
        if (!saddle && t > 0.0) return numeric::SignedLog::from(boundary_G(m, t, o)[0].imag());
    }
    if (!(x0 > m.b())) throw DomainError("im_G_bromwich: line left of the analytic half-plane");
    const double ref = m.log_c() - m.q_raw(x0) + t * x0;
    auto f = [&](double s) {
        const cd xi(x0, s);
        return std::exp(m.log_p(xi) + t * xi - ref).real();
    };
    const double curv = std::abs(m.jet_raw(x0).d2);
    const double h0 = 0.5 / std::sqrt(std::max(curv, 1e-300));
    auto res = numeric::integrate_to_infinity<double>(f, 0.0, h0, detail::inner_quad(o));
    auto v = numeric::SignedLog::from(res.value);
    v.log_abs += ref;
    return v;
}

struct PhiValues {
    double re_phi = 0.0, re_dphi = 0.0, re_d2phi = 0.0;
    double taylor_phi = 0.0, taylor_dphi = 0.0, taylor_d2phi = 0.0;
    cd G{1.0, 0.0};
};

// Re phi(t) with two derivatives; t <= 0 by direct summation, t > 0 from the
// boundary value of the continued generating function.
inline PhiValues phi_boundary(const Law& law, double t, int r, const ContourOptions& o = {}) {
    if (std::abs(t) > o.delta_cutoff && t > 0.0)
        throw DomainError("phi_boundary: t = " + std::to_string(t) + " beyond the cutoff");
    if (r < 0 || r > law.cum.r) throw OrderError("phi_boundary: Taylor order unavailable");
    PhiValues v;
    std::array<cd, 3> g;
    if (t == 0.0) {
        g = {cd(1.0), cd(law.mu()), cd(law.cum.moments[2])};
    } else if (t < 0.0) {
        g = power_series_G<3>(law.model, cd(std::exp(t), 0.0));
    } else {
        g = boundary_G(law.model, t, o);
    }
    const cd d1 = g[1] / g[0];
    const cd d2 = g[2] / g[0] - d1 * d1;
    v.G = g[0];
    v.re_phi = std::log(std::abs(g[0]));
    v.re_dphi = d1.real();
    v.re_d2phi = d2.real();
    double fact = 1.0;
    for (int j = 1; j <= r; ++j) {
        fact *= j;
        const double k = law.cum.kappa[j];
        v.taylor_phi += k * std::pow(t, j) / fact;
        v.taylor_dphi += k * std::pow(t, j - 1) / (fact / j);
        if (j >= 2) v.taylor_d2phi += k * std::pow(t, j - 2) / (fact / (j * (j - 1)));
    }
    return v;
}

// Root of Re phi'(eta) = mu + N/n.
inline double eta_n(const Law& law, double n, double N, int r, const ContourOptions& o = {}) {
    if (N == 0.0) return 0.0;
    const double tau = N / n;
    r = std::min(std::max(r, 2), law.cum.r);
    // Taylor inversion of sum_{j>=2} kappa_j t^{j-1}/(j-1)! = tau
    double t = tau / law.sigma2();
    for (int it = 0; it < 50; ++it) {
        double f = -tau, df = 0.0, fact = 1.0;
        for (int j = 2; j <= r; ++j) {
            fact *= (j - 1);
            f += law.cum.kappa[j] * std::pow(t, j - 1) / fact;
            df += law.cum.kappa[j] * std::pow(t, j - 2) / (fact / (j - 1));
        }
        double step = f / df;
        if (!std::isfinite(step)) break;
        t -= step;
        if (std::abs(step) <= 1e-15 * std::abs(t)) break;
    }
    if (!(t < o.delta_cutoff) || !std::isfinite(t)) t = 0.5 * o.delta_cutoff;
    // polish on the exact boundary values
    for (int it = 0; it < 30; ++it) {
        auto v = phi_boundary(law, t, 0, o);
        double step = (v.re_dphi - law.mu() - tau) / v.re_d2phi;
        double next = t - step;
        if (next >= o.delta_cutoff) {
            auto edge = phi_boundary(law, o.delta_cutoff, 0, o);
            if (edge.re_dphi - law.mu() < tau)
                throw NoRootError("eta_n: N/n = " + std::to_string(tau) +
                                  " beyond the range of Re phi' on the cutoff window");
            next = 0.5 * (t + o.delta_cutoff);
        }
        t = next;
        if (std::abs(step) <= 1e-14 * std::abs(t)) return t;
    }
    return t;
}

struct PhasePoint {
    double t = 0.0;
    double xi = 0.0;
    double re_d2phi = 0.0;
    std::array<std::array<double, 2>, 2> hess{};
    double hess_det = 0.0;
    double psi = 0.0;
    double Phi = 0.0;
    double beta = 0.0;  // d^2/dt^2 Phi_n(t, xi(t))
};

struct PhaseSolution {
    PhasePoint main;
    std::optional<PhasePoint> second;
    double t_star = 0.0;
    double cut = 0.0;
    bool cut_is_eta = true;
};

namespace detail {

struct PsiEval {
    double d1 = 0.0, d2 = 0.0;
    PhiValues phi;
    Dual dual;
};

inline PsiEval Psi_derivs(const Law& law, double n, double N, double t, const ContourOptions& o) {
    PsiEval e;
    e.phi = phi_boundary(law, t, 0, o);
    e.dual = psi(law.model, t);
    e.d1 = n * (e.phi.re_dphi - law.mu()) - N + e.dual.xi;
    e.d2 = n * e.phi.re_d2phi + e.dual.d2;
    return e;
}

inline PhasePoint make_phase_point(const Law& law, double n, double N, const PsiEval& e, double t) {
    PhasePoint p;
    p.t = t;
    p.xi = e.dual.xi;
    p.re_d2phi = e.phi.re_d2phi;
    const double q2 = law.model.jet_raw(p.xi).d2;
    p.hess = {{{n * p.re_d2phi, 1.0}, {1.0, -q2}}};
    p.hess_det = -n * p.re_d2phi * q2 - 1.0;
    p.psi = e.dual.psi;
    p.Phi = p.psi + n * (e.phi.re_phi - law.mu() * t) - N * t;
    p.beta = n * p.re_d2phi + 1.0 / q2;
    return p;
}

inline double toms748(const std::function<double(double)>& f, double lo, double hi) {
    boost::uintmax_t iters = 200;
    auto tol = boost::math::tools::eps_tolerance<double>(46);
    auto r = boost::math::tools::toms748_solve(f, lo, hi, tol, iters);
    return 0.5 * (r.first + r.second);
}

} // namespace detail

// Vertical cut of the contour: eta_n when it lies in the window, otherwise
// the point where Re phi' - mu reaches N/(2n).
inline std::pair<double, bool> contour_cut(const Law& law, double n, double N, const ContourOptions& o) {
    try {
        double eta = eta_n(law, n, N, law.cum.r, o);
        if (eta < o.delta_cutoff) return {eta, true};
    } catch (const NoRootError&) {
    }
    try {
        double d0 = eta_n(law, n, 0.5 * N, law.cum.r, o);
        if (d0 < o.delta_cutoff) return {d0, false};
    } catch (const NoRootError&) {
    }
    return {o.delta_cutoff, false};
}

// Critical points of Psi_n(t) = Phi_n(t, xi(t)).
inline PhaseSolution phi_n_critical(const Law& law, double n, double N, const ContourOptions& o = {}) {
    PhaseSolution sol;
    auto [cut, is_eta] = contour_cut(law, n, N, o);
    sol.cut = cut;
    sol.cut_is_eta = is_eta;
    auto d2 = [&](double t) { return detail::Psi_derivs(law, n, N, t, o).d2; };

    // inflection of Psi_n near q'(x_star)
    double guess = law.model.jet_raw(inflection_x_star(law, n)).d1;
    guess = std::min(guess, 0.5 * cut);
    double lo = guess, hi = guess;
    for (int k = 0; k < 60 && !(d2(lo) < 0.0); ++k) lo *= 0.7;
    for (int k = 0; k < 60 && !(d2(hi) > 0.0); ++k) hi = std::min(cut, hi * 1.3);
    if (!(d2(lo) < 0.0) || !(d2(hi) > 0.0))
        throw BracketError("phi_n_critical: no inflection of Psi_n in (0, " + std::to_string(cut) + ")");
    sol.t_star = detail::toms748(d2, lo, hi);

    auto f_df = [&](double t) {
        auto e = detail::Psi_derivs(law, n, N, t, o);
        return std::pair{e.d1, e.d2};
    };
    auto at_star = detail::Psi_derivs(law, n, N, sol.t_star, o);
    if (!(at_star.d1 < 0.0))
        throw NoRootError("phi_n_critical: Psi_n' stays positive; N is below the critical scale");
    double tl = law.model.jet_raw(N).d1 * 0.5;
    for (int k = 0; k < 60 && !(detail::Psi_derivs(law, n, N, tl, o).d1 > 0.0); ++k) tl *= 0.5;
    const numeric::RootOptions ro{100, 1e-13, 0.0};
    double tn = numeric::safe_newton(f_df, tl, sol.t_star, ro).x;
    sol.main = detail::make_phase_point(law, n, N, detail::Psi_derivs(law, n, N, tn, o), tn);

    auto at_cut = detail::Psi_derivs(law, n, N, cut, o);
    if (at_cut.d1 > 0.0) {
        double tp = numeric::safe_newton(f_df, sol.t_star, cut, ro).x;
        sol.second = detail::make_phase_point(law, n, N, detail::Psi_derivs(law, n, N, tp, o), tp);
    }
    return sol;
}

struct ContourResult {
    double H = 0.0, V = 0.0, total = 0.0;
    numeric::SignedLog H_log, V_log, total_log;
    double eta = 0.0;
    bool cut_is_eta = true;
    double error_H = 0.0, error_V = 0.0;  // absolute

    double lower() const { return total - error_H - error_V; }
    double upper() const { return total + error_H + error_V; }
};

namespace detail {

// log |Im[G_+(t)^n]| and its sign, G_+ = G(e^t + i0)
inline numeric::SignedLog im_power_log(const WeightModel& m, double t, double n, const ContourOptions& o) {
    const cd g = boundary_G(m, t, o)[0];
    const double re = g.real();
    const auto im = im_G_bromwich(m, t, o);
    if (im.sign == 0) return {};
    const double lre = std::log(std::abs(re));
    const double ratio_log = im.log_abs - lre;
    const double log_abs_g = lre + 0.5 * std::log1p(std::exp(2.0 * ratio_log));
    double lsin;
    int sgn;
    if (re > 0.0 && ratio_log + std::log(n) < std::log(1e-4)) {
        // sin(n arg G) ~ n Im G / Re G; cubic term relative size (n arg)^2/6 < 2e-9
        const double x = std::exp(ratio_log + std::log(n));
        lsin = std::log(n) + ratio_log + std::log1p(-x * x / 6.0);
        sgn = im.sign;
    } else {
        const double arg = std::atan2(im.value(), re);
        const double s = std::sin(n * arg);
        if (s == 0.0) return {};
        lsin = std::log(std::abs(s));
        sgn = s > 0 ? 1 : -1;
    }
    return {sgn, n * log_abs_g + lsin};
}

} // namespace detail

// [z^m] G(z)^n split into the slit piece H_n and the circle piece V_n.
inline ContourResult contour_Hn_Vn(const Law& law, long long n, long long m, const ContourOptions& o = {}) {
    const double nn = static_cast<double>(n), mm = static_cast<double>(m);
    const double N = mm - nn * law.mu();
    if (n < 1 || m < n)
        throw DomainError("contour_Hn_Vn: m = " + std::to_string(m) + " outside the support of S_n");
    ContourResult res;
    if (N > 0.0) {
        auto [cut, is_eta] = contour_cut(law, nn, N, o);
        res.eta = cut;
        res.cut_is_eta = is_eta;
    } else {
        res.eta = eta_n(law, nn, N, law.cum.r, o);
    }
    const double eta = res.eta;
    numeric::QuadOptions outer;
    outer.rel_tol = o.outer_rel_tol;
    outer.max_intervals = 2000;

    // V_n: circle of radius e^eta
    {
        const cd g0 = eta > 0.0 ? boundary_G(law.model, eta, o)[0]
                                : (eta < 0.0 ? power_series_G<1>(law.model, std::exp(eta))[0] : cd(1.0));
        const double ref = nn * std::log(std::abs(g0)) - mm * eta;
        auto f = [&](double th) {
            const cd z = std::polar(std::exp(eta), th);
            const cd g = lindelof_G(law.model, z, o);
            const double lg = nn * std::log(std::abs(g)) - mm * eta - ref;
            const double ph = nn * std::arg(g) - mm * th;
            return std::exp(lg) * std::cos(ph);
        };
        // the integrand is O(1) at theta = 0; cancellation below the absolute
        // floor shows up in error_V rather than as a failure
        numeric::QuadOptions ov = outer;
        ov.abs_tol = 1e-15;
        ov.throw_on_failure = false;
        auto r = numeric::integrate<double>(f, 0.0, std::numbers::pi, ov);
        res.V_log = numeric::SignedLog::from(r.value / std::numbers::pi);
        res.V_log.log_abs += ref;
        res.error_V = (r.error + o.inner_rel_tol * nn * r.l1) * std::exp(ref) / std::numbers::pi;
    }

    // H_n: upper edge of the slit from t = 0 to eta
    if (eta > 0.0) {
        double ref = numeric::neg_inf;
        auto logf = [&](double t) {
            // skip points the saddle value already puts far below the peak
            if (std::isfinite(ref)) {
                const double gre = boundary_G(law.model, t, o)[0].real();
                const double est = im_G_saddle_log(law.model, t) + std::log(nn) +
                                   (nn - 1.0) * std::log(std::abs(gre)) - mm * t;
                if (gre > 0.0 && est < ref - 800.0) return numeric::SignedLog{};
            }
            auto v = detail::im_power_log(law.model, t, nn, o);
            v.log_abs -= mm * t;
            return v;
        };
        const int grid = 24;
        std::vector<double> nodes(grid + 1);
        for (int i = 0; i <= grid; ++i) {
            nodes[i] = eta * static_cast<double>(i) / grid;
            if (i > 0) ref = std::max(ref, logf(nodes[i]).log_abs);
        }
        auto f = [&](double t) {
            auto v = logf(t);
            return v.sign == 0 ? 0.0 : v.sign * std::exp(v.log_abs - ref);
        };
        numeric::CompensatedSum<double> sum;
        double err = 0.0;
        for (int i = 0; i < grid; ++i) {
            numeric::QuadOptions oi = outer;
            oi.abs_tol = 1e-3 * o.outer_rel_tol * (nodes[i + 1] - nodes[i]);
            auto r = numeric::integrate<double>(f, nodes[i], nodes[i + 1], oi);
            sum += r.value;
            err += r.error + 10.0 * o.inner_rel_tol * nn * r.l1;
        }
        if (std::isfinite(ref)) {
            res.H_log = numeric::SignedLog::from(sum.value() / std::numbers::pi);
            res.H_log.log_abs += ref;
            res.error_H = err * std::exp(ref) / std::numbers::pi;
        }
    }
    res.total_log = res.H_log + res.V_log;
    res.H = res.H_log.value();
    res.V = res.V_log.value();
    res.total = res.total_log.value();
    return res;
}

// Saddle evaluation n e^{Phi} / sqrt|det Hess| of H_n, in logs.
inline double H_saddle_log(const PhasePoint& p, double n) {
    return std::log(n) - 0.5 * std::log(std::abs(p.hess_det)) + p.Phi;
}

// Gaussian evaluation of V_n at the cut, in logs.
inline double V_gaussian_log(const Law& law, double n, double N, double eta, const ContourOptions& o = {}) {
    auto v = phi_boundary(law, eta, 0, o);
    return n * (v.re_phi - law.mu() * eta) - N * eta -
           0.5 * std::log(2.0 * std::numbers::pi * n * v.re_d2phi);
}

} // namespace heavytail
