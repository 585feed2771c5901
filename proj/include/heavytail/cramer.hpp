#pragma once

#include <string>
#include <vector>

#include "exactprob.hpp"
#include "series.hpp"

namespace heavytail {

// Coefficients of the Legendre expansion
//   (mu + tau) t(tau) - phi(t(tau)) = tau^2/(2 sigma^2) - tau^3 sum_j lambda_j tau^j,
// where t(tau) inverts phi'(t) - mu = tau. See the notes in README on the sign.
template <class T>
struct CramerSeries {
    int r = 0;
    TruncatedSeries<T> t_of_tau;   // a_1 = 1/sigma^2, ..., a_{r+1}
    TruncatedSeries<T> legendre;   // phi*(mu + tau) through tau^{r+2}
    std::vector<T> lambda;         // lambda_0 .. lambda_{r-1}
};

// kappa[j] for j = 1..r+2; kappa[0] is ignored.
template <class T>
CramerSeries<T> cramer_series(const std::vector<T>& kappa, int r) {
    if (r < 0) throw OrderError("negative Cramer order");
    const int R = r + 2;
    if (static_cast<int>(kappa.size()) < R + 1)
        throw OrderError("Cramer order " + std::to_string(r) + " needs cumulants through " +
                         std::to_string(R));
    if (!(kappa[2] > T(0))) throw DomainError("Cramer series needs positive variance");

    // phi(t) and s(t) = phi'(t) - mu. The top coefficient of t(tau) needs
    // kappa_{R+1}; it cancels from the Legendre series, so zero is used when absent.
    TruncatedSeries<T> phi(R), s(R);
    T fact = 1;
    for (int j = 1; j <= R; ++j) {
        fact *= T(j);
        phi[j] = kappa[j] / fact;
        if (j + 1 < static_cast<int>(kappa.size())) s[j] = kappa[j + 1] / fact;
    }

    CramerSeries<T> out;
    out.r = r;
    TruncatedSeries<T> t = series_reverse(s);
    TruncatedSeries<T> mu_plus_tau(R);
    mu_plus_tau[0] = kappa[1];
    mu_plus_tau[1] = T(1);
    out.legendre = mu_plus_tau * t - phi.compose(t);
    std::vector<T> a(t.coeffs().begin(), t.coeffs().end() - 1);
    out.t_of_tau = TruncatedSeries<T>(std::move(a));
    out.lambda.resize(r);
    for (int j = 0; j < r; ++j) out.lambda[j] = -out.legendre[j + 3];
    return out;
}

struct CramerCoeffs {
    int r = 0;
    std::vector<double> lambda;
    std::vector<double> a;      // a[j] multiplies tau^j in t(tau)
    std::vector<double> kappa;  // source cumulants, kappa[0] unused
    std::vector<Real50> lambda_hp;
};

// High-precision evaluation from a cumulant set. Needs kappa through r+2.
template <class T = Real50>
CramerCoeffs cramer_lambda(const CumulantSet& cum, int r) {
    if (r + 2 > cum.r)
        throw OrderError("Cramer order " + std::to_string(r) + " needs cumulants through " +
                         std::to_string(r + 2) + ", have " + std::to_string(cum.r));
    std::vector<T> kap(r + 3);
    for (int j = 1; j <= r + 2; ++j) kap[j] = static_cast<T>(cum.kappa_hp[j]);
    auto cs = cramer_series<T>(kap, r);
    CramerCoeffs out;
    out.r = r;
    for (const auto& l : cs.lambda) {
        out.lambda.push_back(static_cast<double>(l));
        out.lambda_hp.push_back(static_cast<Real50>(l));
    }
    for (const auto& a : cs.t_of_tau.coeffs()) out.a.push_back(static_cast<double>(a));
    out.kappa.assign(cum.kappa.begin(), cum.kappa.begin() + r + 3);
    return out;
}

// sum_{j<r} lambda_j tau^j; the tau^3 factor belongs to the caller.
inline double cramer_correction(const CramerCoeffs& c, double tau) {
    double acc = 0.0;
    for (int j = c.r - 1; j >= 0; --j) acc = acc * tau + c.lambda[j];
    return acc;
}

} // namespace heavytail
