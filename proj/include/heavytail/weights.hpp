#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"

namespace heavytail {

enum class Family { StretchedExponential, LogHazard, Custom };

inline std::string to_string(Family f) {
    switch (f) {
    case Family::StretchedExponential: return "stretched";
    case Family::LogHazard: return "loghazard";
    case Family::Custom: return "custom";
    }
    return "unknown";
}

// Hazard value with its first three derivatives at one point.
struct Jet {
    double q = 0.0, d1 = 0.0, d2 = 0.0, d3 = 0.0;
};

// User-supplied hazard. Accepted on trust apart from grid checks.
struct CustomHazard {
    std::string name = "custom";
    std::function<Jet(double)> jet;
    std::function<std::complex<double>(std::complex<double>)> complex_q;
    double a = 0.0;
    double b = 0.0;
    double alpha_bound = 0.5;
    double concave_from = 0.0;
    double regular_from = 0.0;
};

class WeightModel {
public:
    static WeightModel stretched(double alpha) {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw ParameterError("stretched exponent must lie in (0,1), got " + std::to_string(alpha));
        WeightModel m;
        m.family_ = Family::StretchedExponential;
        m.param_ = alpha;
        m.a_ = 0.0;
        m.b_ = 0.0;
        m.alpha_bound_ = alpha;
        m.concave_from_ = 0.0;
        m.regular_from_ = 0.0;
        return m;
    }

    static WeightModel loghazard(double beta) {
        if (!(beta > 2.0))
            throw ParameterError("log-hazard exponent must exceed 2, got " + std::to_string(beta));
        WeightModel m;
        m.family_ = Family::LogHazard;
        m.param_ = beta;
        m.a_ = 1.0;
        m.b_ = 2.0;
        m.concave_from_ = std::exp(beta - 1.0);
        double disc = (beta - 1.0) * (beta + 7.0);
        m.regular_from_ = std::exp((3.0 * (beta - 1.0) + std::sqrt(disc)) / 4.0);
        // sup of x q'/q over a geometric grid starting at e^{2 beta}
        double sup = 0.0;
        for (double L = 2.0 * beta; L < 2.0 * beta + 40.0; L += 0.25) {
            Jet j = m.jet_raw(std::exp(L));
            sup = std::max(sup, std::exp(L) * j.d1 / j.q);
        }
        m.alpha_bound_ = sup;
        return m;
    }

    static WeightModel custom(CustomHazard h) {
        if (!h.jet) throw ParameterError("custom hazard needs a real evaluator");
        WeightModel m;
        m.family_ = Family::Custom;
        m.a_ = h.a;
        m.b_ = h.b;
        m.alpha_bound_ = h.alpha_bound;
        m.concave_from_ = h.concave_from;
        m.regular_from_ = h.regular_from;
        m.custom_ = std::move(h);
        return m;
    }

    Family family() const { return family_; }
    // alpha for the stretched family, beta for log-hazard
    double parameter() const { return param_; }
    double a() const { return a_; }
    double b() const { return b_; }
    double alpha_bound() const { return alpha_bound_; }
    // q'' < 0 beyond this point
    double concave_from() const { return concave_from_; }
    // q''' > 0 beyond this point; the variational solvers work here
    double regular_from() const { return regular_from_; }
    // integration abscissa for the Lindelof integral, kept off the integers
    double lindelof_abscissa() const { return std::floor(b_) + 0.5; }
    // minimizer of q_raw over the support, used as the trivial competitor
    double support_floor() const { return family_ == Family::StretchedExponential ? 0.0 : 1.0; }

    bool normalized() const { return log_c_.has_value(); }
    double log_c() const {
        if (!log_c_) throw DomainError("weight model is not normalized");
        return *log_c_;
    }
    void set_log_c(double v) { log_c_ = v; }

    std::string describe() const {
        switch (family_) {
        case Family::StretchedExponential: return "stretched(alpha=" + num(param_) + ")";
        case Family::LogHazard: return "loghazard(beta=" + num(param_) + ")";
        case Family::Custom: return custom_.name;
        }
        return "?";
    }

    double q_raw(double x) const { return jet_raw(x).q; }

    Jet jet_raw(double x) const {
        switch (family_) {
        case Family::StretchedExponential: {
            const double al = param_;
            double xa = std::pow(x, al);
            return {xa, al * xa / x, al * (al - 1.0) * xa / (x * x),
                    al * (al - 1.0) * (al - 2.0) * xa / (x * x * x)};
        }
        case Family::LogHazard: {
            const double be = param_, L = std::log(x);
            if (L <= 0.0) return {0.0, 0.0, 0.0, 0.0};
            double Lb3 = std::pow(L, be - 3.0);
            double Lb = Lb3 * L * L * L, x2 = x * x;
            return {Lb, be * Lb3 * L * L / x,
                    be * Lb3 * L * ((be - 1.0) - L) / x2,
                    be * Lb3 * ((be - 1.0) * (be - 2.0) - 3.0 * (be - 1.0) * L + 2.0 * L * L) /
                        (x2 * x)};
        }
        case Family::Custom: return custom_.jet(x);
        }
        return {};
    }

    // Shifted hazard q = q_raw - log c.
    Jet jet(double x) const {
        Jet j = jet_raw(x);
        j.q -= log_c();
        return j;
    }
    double q(double x) const { return q_raw(x) - log_c(); }

    std::complex<double> q_raw(std::complex<double> xi) const {
        switch (family_) {
        case Family::StretchedExponential: return std::exp(param_ * std::log(xi));
        case Family::LogHazard: {
            std::complex<double> L = std::log(xi);
            if (param_ == std::floor(param_) && param_ < 16.0) {
                std::complex<double> r = 1.0;
                for (int i = 0; i < static_cast<int>(param_); ++i) r *= L;
                return r;
            }
            return std::exp(param_ * std::log(L));
        }
        case Family::Custom:
            if (!custom_.complex_q) throw DomainError("custom hazard has no complex evaluator");
            return custom_.complex_q(xi);
        }
        return {};
    }

    // log p(k) for integer k >= 1.
    double log_p(long long k) const { return log_c() - q_raw(static_cast<double>(k)); }
    double p(long long k) const { return std::exp(log_p(k)); }
    std::complex<double> log_p(std::complex<double> xi) const { return log_c() - q_raw(xi); }

private:
    static std::string num(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", v);
        return buf;
    }

    Family family_ = Family::Custom;
    double param_ = 0.0;
    double a_ = 0.0, b_ = 0.0;
    double alpha_bound_ = 0.5;
    double concave_from_ = 0.0, regular_from_ = 0.0;
    std::optional<double> log_c_;
    CustomHazard custom_;
};

inline WeightModel make_stretched(double alpha) { return WeightModel::stretched(alpha); }
inline WeightModel make_loghazard(double beta) { return WeightModel::loghazard(beta); }

// Geometric law p(k) = 2^{-k}; a test oracle, not a heavy tail.
inline WeightModel make_geometric_half() {
    CustomHazard h;
    h.name = "geometric(1/2)";
    const double l2 = std::log(2.0);
    h.jet = [l2](double x) { return Jet{x * l2, l2, 0.0, 0.0}; };
    h.complex_q = [l2](std::complex<double> z) { return z * l2; };
    return WeightModel::custom(std::move(h));
}

struct AssumptionItem {
    std::string id;
    bool pass = true;
    std::string detail;
};

struct AssumptionPoint {
    double x = 0.0;
    int sign_d1 = 0, sign_d2 = 0, sign_d3 = 0;
    double curvature_ratio = 0.0;   // |q''| x / q'
    double jerk_ratio = 0.0;        // q''' x / |q''|
    double log_growth_ratio = 0.0;  // x q' / log x
    double index_ratio = 0.0;       // x q' / q
};

struct AssumptionReport {
    std::vector<AssumptionPoint> points;
    std::vector<AssumptionItem> items;
    double c1 = 0.0, c2 = 0.0, c3 = 0.0, c4 = 0.0;

    bool passed() const {
        for (const auto& it : items)
            if (!it.pass) return false;
        return true;
    }
    const AssumptionItem& item(const std::string& id) const {
        for (const auto& it : items)
            if (it.id == id) return it;
        throw DomainError("no assumption item " + id);
    }
};

// Grid check of the structural hazard assumptions (i)-(v). Violations are
// reported, not thrown.
inline AssumptionReport validate_assumptions(const WeightModel& model, std::vector<double> grid) {
    std::sort(grid.begin(), grid.end());
    for (double x : grid)
        if (!(x > model.a())) throw DomainError("grid point " + std::to_string(x) + " not above a");
    AssumptionReport rep;
    auto sgn = [](double v) { return (v > 0) - (v < 0); };
    const double shift = model.normalized() ? model.log_c() : 0.0;
    for (double x : grid) {
        Jet j = model.jet_raw(x);
        AssumptionPoint pt;
        pt.x = x;
        pt.sign_d1 = sgn(j.d1);
        pt.sign_d2 = sgn(j.d2);
        pt.sign_d3 = sgn(j.d3);
        pt.curvature_ratio = std::abs(j.d2) * x / j.d1;
        pt.jerk_ratio = j.d3 * x / std::abs(j.d2);
        pt.log_growth_ratio = x * j.d1 / std::log(x);
        pt.index_ratio = x * j.d1 / (j.q - shift);
        rep.points.push_back(pt);
    }
    auto fmt = [](double v) { return std::to_string(v); };

    AssumptionItem signs{"i", true, ""};
    for (const auto& p : rep.points)
        if (p.sign_d1 <= 0 || p.sign_d2 >= 0 || p.sign_d3 <= 0) {
            signs.pass = false;
            signs.detail += "sign pattern violated at x=" + fmt(p.x) + "; ";
        }
    rep.items.push_back(signs);

    AssumptionItem growth{"ii", true, ""};
    for (std::size_t k = 1; k < rep.points.size(); ++k)
        if (!(rep.points[k].log_growth_ratio > rep.points[k - 1].log_growth_ratio)) {
            growth.pass = false;
            growth.detail += "x q'/log x not increasing at x=" + fmt(rep.points[k].x) + "; ";
        }
    rep.items.push_back(growth);

    auto bounds = [&](auto field, double& lo, double& hi, const char* id, const char* name) {
        AssumptionItem it{id, true, ""};
        lo = std::numeric_limits<double>::infinity();
        hi = 0.0;
        for (const auto& p : rep.points) {
            double v = p.*field;
            if (!(std::isfinite(v) && v > 0.0)) {
                it.pass = false;
                it.detail += std::string(name) + " not finite positive at x=" + fmt(p.x) + "; ";
                continue;
            }
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        rep.items.push_back(it);
    };
    bounds(&AssumptionPoint::curvature_ratio, rep.c1, rep.c2, "iii", "|q''|x/q'");
    bounds(&AssumptionPoint::jerk_ratio, rep.c3, rep.c4, "iv", "q'''x/|q''|");

    AssumptionItem index{"v", true, ""};
    for (const auto& p : rep.points)
        if (!(p.index_ratio <= model.alpha_bound() && model.alpha_bound() < 1.0)) {
            index.pass = false;
            index.detail += "x q'/q exceeds alpha bound at x=" + fmt(p.x) + "; ";
        }
    rep.items.push_back(index);
    return rep;
}

} // namespace heavytail
