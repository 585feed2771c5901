#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "contour.hpp"
#include "cramer.hpp"
#include "numeric/logspace.hpp"
#include "variational.hpp"

namespace heavytail {

struct DeviationEstimate {
    Regime regime = Regime::Moderate;
    double log_value = numeric::neg_inf;
    std::optional<double> v_term_log;
    std::optional<double> h_term_log;
    int r_used = 0;
    std::optional<PhasePoint> saddle;
    std::optional<double> x_nr;
    double fpp_factor = 0.0;
    bool forced = false;
    std::vector<std::string> notes;

    double value() const { return std::exp(log_value); }
};

struct EstimateConfig {
    std::optional<int> order;  // fixed Cramer order; automatic when empty
    double r_threshold = 1e-3;
    int r_max = 10;
    RegimeThresholds thresholds;
    TruncatedPointOptions truncated;
    std::optional<Regime> force;
    bool with_saddle = false;
    ContourOptions contour;
};

// Smallest r in [1, r_max] with n ratio^r < threshold. If none qualifies the
// order minimizing n ratio^r is used: r_max when ratio < 1, else 0.
inline int select_order(double n, double ratio, double threshold, int r_max) {
    for (int r = 1; r <= r_max; ++r)
        if (n * std::pow(ratio, r) < threshold) return r;
    return ratio < 1.0 ? r_max : 0;
}

// log of (1/sqrt(2 pi sigma^2 n)) exp(-N^2/(2 n sigma^2) + (N^3/n^2) sum lambda_j (N/n)^j)
inline double v_term_log(const Law& law, double n, double N, const CramerCoeffs& c) {
    const double s2 = law.sigma2();
    return -N * N / (2.0 * n * s2) + N * N * N / (n * n) * cramer_correction(c, N / n) -
           0.5 * std::log(2.0 * std::numbers::pi * s2 * n);
}

struct HTerm {
    double log_value = 0.0;
    double x_nr = 0.0;
    double fpp_factor = 0.0;
};

// log of n exp(-f_nr(x_nr)) / sqrt(1 - n sigma^2 |q''(x_nr)|)
inline HTerm h_term(const Law& law, double n, double N, const CramerCoeffs& c,
                    const TruncatedPointOptions& opt = {}) {
    HTerm h;
    h.x_nr = truncated_critical_point(law, n, N, c, opt);
    h.fpp_factor = 1.0 - n * law.sigma2() * std::abs(law.model.jet_raw(h.x_nr).d2);
    if (!(h.fpp_factor > 0.0))
        throw DomainError("h_term: 1 - n sigma^2 |q''(x_nr)| = " + std::to_string(h.fpp_factor) +
                          " is not positive");
    h.log_value = std::log(n) - 0.5 * std::log(h.fpp_factor) - f_nr(law, n, N, c, h.x_nr);
    return h;
}

namespace detail {

inline void note_regime(DeviationEstimate& e, const Law& law, double n, double N, Regime expected,
                        const RegimeThresholds& th) {
    try {
        const Regime r = classify_regime(law, n, N, th);
        if (r != expected)
            e.notes.push_back("regime mismatch: classifier says " + to_string(r) + ", evaluated as " +
                              to_string(expected));
    } catch (const Error& err) {
        e.notes.push_back(std::string("regime not classified: ") + err.what());
    }
}

inline void add_h(DeviationEstimate& e, const Law& law, double n, double N, const CramerCoeffs& c,
                  const TruncatedPointOptions& opt) {
    const HTerm h = h_term(law, n, N, c, opt);
    e.h_term_log = h.log_value;
    e.x_nr = h.x_nr;
    e.fpp_factor = h.fpp_factor;
    e.notes.push_back("h-term: n exp(-f_nr(x_nr)) / sqrt(1 - n sigma^2 |q''(x_nr)|)");
}

inline void finish(DeviationEstimate& e) {
    e.log_value = numeric::neg_inf;
    if (e.v_term_log) e.log_value = numeric::log_add(e.log_value, *e.v_term_log);
    if (e.h_term_log) e.log_value = numeric::log_add(e.log_value, *e.h_term_log);
}

} // namespace detail

inline DeviationEstimate estimate_moderate(const Law& law, double n, double N, int r,
                                           const RegimeThresholds& th = {}) {
    DeviationEstimate e;
    e.regime = Regime::Moderate;
    e.r_used = r;
    detail::note_regime(e, law, n, N, e.regime, th);
    e.v_term_log = v_term_log(law, n, N, cramer_lambda(law.cum, r));
    e.notes.push_back("v-term: Gaussian local value, Cramer order " + std::to_string(r));
    detail::finish(e);
    return e;
}

inline DeviationEstimate estimate_critical(const Law& law, double n, double N, int r,
                                           const RegimeThresholds& th = {},
                                           const TruncatedPointOptions& opt = {}) {
    DeviationEstimate e;
    e.regime = Regime::Critical;
    e.r_used = r;
    detail::note_regime(e, law, n, N, e.regime, th);
    const auto c = cramer_lambda(law.cum, r);
    e.v_term_log = v_term_log(law, n, N, c);
    e.notes.push_back("v-term: Gaussian local value, Cramer order " + std::to_string(r));
    try {
        detail::add_h(e, law, n, N, c, opt);
    } catch (const PreconditionError& err) {
        e.notes.push_back(std::string("h-term absent: ") + err.what());
    } catch (const BracketError& err) {
        e.notes.push_back(std::string("h-term absent: ") + err.what());
    }
    detail::finish(e);
    return e;
}

inline DeviationEstimate estimate_large(const Law& law, double n, double N, int r,
                                        const RegimeThresholds& th = {},
                                        const TruncatedPointOptions& opt = {}) {
    DeviationEstimate e;
    e.regime = Regime::BigJump;
    e.r_used = r;
    detail::note_regime(e, law, n, N, e.regime, th);
    detail::add_h(e, law, n, N, cramer_lambda(law.cum, r), opt);
    detail::finish(e);
    return e;
}

struct BigJumpSimple {
    double log_value = 0.0;   // log n - q(N)
    double diagnostic = 0.0;  // sqrt(n sigma^2) q'(N)
};

inline BigJumpSimple estimate_bigjump_simple(const Law& law, double n, double N) {
    return {std::log(n) - law.model.q(N), std::sqrt(n * law.sigma2()) * law.model.jet_raw(N).d1};
}

inline int auto_order(const Law& law, double n, const EstimateConfig& cfg = {}) {
    const int r_max = std::min(cfg.r_max, law.cum.r - 2);
    return select_order(n, critical_N_star(law, n) / n, cfg.r_threshold, r_max);
}

inline DeviationEstimate estimate_auto(const Law& law, double n, double N, const EstimateConfig& cfg = {}) {
    Regime regime;
    if (cfg.force) {
        regime = *cfg.force;
    } else {
        regime = classify_regime(law, n, N, cfg.thresholds);
    }
    const int r = cfg.order ? *cfg.order : auto_order(law, n, cfg);
    DeviationEstimate e;
    switch (regime) {
    case Regime::Moderate: e = estimate_moderate(law, n, N, r, cfg.thresholds); break;
    case Regime::Critical: e = estimate_critical(law, n, N, r, cfg.thresholds, cfg.truncated); break;
    case Regime::BigJump: e = estimate_large(law, n, N, r, cfg.thresholds, cfg.truncated); break;
    }
    e.forced = cfg.force.has_value();
    const double Ns = critical_N_star(law, n);
    if (n * std::pow(Ns / n, r) >= cfg.r_threshold)
        e.notes.push_back("order r = " + std::to_string(r) + " misses n (N_star/n)^r < " +
                          format_double(cfg.r_threshold));
    if (cfg.with_saddle && regime != Regime::Moderate) {
        try {
            e.saddle = phi_n_critical(law, n, N, cfg.contour).main;
        } catch (const Error& err) {
            e.notes.push_back(std::string("saddle unavailable: ") + err.what());
        }
    }
    return e;
}

} // namespace heavytail
