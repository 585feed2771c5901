#include <catch_amalgamated.hpp>

#include <boost/multiprecision/cpp_int.hpp>
#include <random>

#include <heavytail/cramer.hpp>

#include "fixtures.hpp"

using namespace heavytail;
using Rational = boost::multiprecision::cpp_rational;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

TruncatedSeries<Rational> random_series(std::mt19937& rng, int R) {
    std::uniform_int_distribution<int> num(-9, 9), den(1, 7);
    TruncatedSeries<Rational> s(R);
    for (int i = 1; i <= R; ++i) s[i] = Rational(num(rng), den(rng));
    if (s[1] == 0) s[1] = Rational(3, 2);
    return s;
}

// sup_{t <= 0} (t x - phi(t)) for the truncated cumulant polynomial, by Newton on phi'(t) = x
Real50 legendre_oracle(const std::vector<Real50>& kappa, int top, Real50 tau) {
    const Real50 x = kappa[1] + tau;
    auto eval = [&](Real50 t, Real50& f, Real50& d1, Real50& d2) {
        f = d1 = d2 = 0;
        Real50 fact = 1;
        for (int j = 1; j <= top; ++j) {
            fact *= j;
            f += kappa[j] * pow(t, j) / fact;
            d1 += kappa[j] * pow(t, j - 1) / (fact / j);
            if (j >= 2) d2 += kappa[j] * pow(t, j - 2) / (fact / (j * (j - 1)));
        }
    };
    Real50 t = tau / kappa[2];
    for (int it = 0; it < 100; ++it) {
        Real50 f, d1, d2;
        eval(t, f, d1, d2);
        Real50 step = (d1 - x) / d2;
        t -= step;
        if (abs(step) < Real50(1e-45) * abs(t)) break;
    }
    Real50 f, d1, d2;
    eval(t, f, d1, d2);
    return t * x - f;
}

} // namespace

TEST_CASE("reversion of simple series", "[cramer]") {
    auto id = TruncatedSeries<Rational>::variable(6);
    auto r = series_reverse(id);
    for (int i = 0; i <= 6; ++i) CHECK(r[i] == id[i]);

    auto two = id * Rational(2);
    auto half = series_reverse(two);
    CHECK(half[1] == Rational(1, 2));
    for (int i = 2; i <= 6; ++i) CHECK(half[i] == 0);

    // t + t^2 inverts with signed Catalan numbers
    TruncatedSeries<Rational> s(6);
    s[1] = 1;
    s[2] = 1;
    auto inv = series_reverse(s);
    const int catalan[] = {0, 1, 1, 2, 5, 14, 42};
    for (int k = 1; k <= 6; ++k) CHECK(inv[k] == Rational((k % 2 ? 1 : -1) * catalan[k]));
    auto back = s.compose(inv);
    for (int k = 0; k <= 6; ++k) CHECK(back[k] == id[k]);
}

TEST_CASE("reversion rejects degenerate input", "[cramer]") {
    TruncatedSeries<Rational> s(4);
    s[2] = 1;
    CHECK_THROWS_AS(series_reverse(s), NonInvertibleError);
    s[0] = 1;
    s[1] = 1;
    CHECK_THROWS_AS(series_reverse(s), NonInvertibleError);
}

TEST_CASE("double reversion round trip on random rational series", "[cramer]") {
    std::mt19937 rng(20240611);
    for (int trial = 0; trial < 25; ++trial) {
        const int R = 2 + trial % 9;
        auto s = random_series(rng, R);
        auto inv = series_reverse(s);
        auto twice = series_reverse(inv);
        for (int k = 0; k <= R; ++k) CHECK(twice[k] == s[k]);
        auto comp = inv.compose(s);
        CHECK(comp[1] == 1);
        for (int k = 2; k <= R; ++k) CHECK(comp[k] == 0);
    }
}

TEST_CASE("Cramer coefficients in exact arithmetic", "[cramer]") {
    // arbitrary rational cumulants
    std::vector<Rational> kap = {0, Rational(7, 3), Rational(5, 2), Rational(-4, 5), Rational(9, 7),
                                 Rational(2, 11), Rational(-3, 13), Rational(1, 17), Rational(5, 19)};
    const int r = 6;
    auto cs = cramer_series<Rational>(kap, r);
    const Rational s2 = kap[2];
    CHECK(cs.t_of_tau[1] == 1 / s2);
    CHECK(cs.legendre[0] == 0);
    CHECK(cs.legendre[1] == 0);
    CHECK(cs.legendre[2] == 1 / (2 * s2));
    CHECK(cs.lambda[0] == kap[3] / (6 * s2 * s2 * s2));
    CHECK(cs.lambda[1] == (kap[4] * s2 - 3 * kap[3] * kap[3]) / (24 * s2 * s2 * s2 * s2 * s2));

    // s(t(tau)) = tau through the order of t
    const int Rt = cs.t_of_tau.order();
    TruncatedSeries<Rational> s(Rt);
    Rational fact = 1;
    for (int j = 1; j <= Rt; ++j) {
        fact *= j;
        s[j] = kap[j + 1] / fact;
    }
    auto id = s.compose(cs.t_of_tau);
    CHECK(id[1] == 1);
    for (int k = 2; k <= Rt; ++k) CHECK(id[k] == 0);

    // lambda_j = -a_{j+2}/(j+3), since the Legendre series differentiates to t(tau)
    for (int j = 0; j + 2 <= Rt && j < r; ++j) CHECK(cs.lambda[j] == -cs.t_of_tau[j + 2] / (j + 3));
}

TEST_CASE("Gaussian cumulants give a vanishing series", "[cramer]") {
    std::vector<Rational> kap(10, Rational(0));
    kap[1] = 3;
    kap[2] = Rational(5, 4);
    auto cs = cramer_series<Rational>(kap, 7);
    for (const auto& l : cs.lambda) CHECK(l == 0);
    CHECK(cs.t_of_tau[1] == Rational(4, 5));
}

TEST_CASE("cramer_lambda checks available orders", "[cramer]") {
    const auto& cum = fixtures::stretched_half().cum;
    CHECK_THROWS_AS(cramer_lambda(cum, 11), OrderError);
    auto c = cramer_lambda(cum, 10);
    CHECK(c.lambda.size() == 10);
    CHECK_THAT(c.a[1], WithinRel(1.0 / cum.sigma2, 1e-14));
    const double s2 = cum.sigma2;
    CHECK_THAT(c.lambda[0], WithinRel(cum.kappa[3] / (6 * s2 * s2 * s2), 1e-13));
}

TEST_CASE("cramer_correction evaluates the polynomial", "[cramer]") {
    CramerCoeffs c;
    CHECK(cramer_correction(c, 0.3) == 0.0);
    c.r = 1;
    c.lambda = {2.5};
    CHECK(cramer_correction(c, 0.1) == 2.5);
    c.r = 3;
    c.lambda = {1.0, 2.0, 3.0};
    CHECK_THAT(cramer_correction(c, 0.5), WithinRel(1.0 + 1.0 + 0.75, 1e-15));
    c.lambda = {0.0, 0.0, 0.0};
    CHECK(cramer_correction(c, 0.5) == 0.0);
}

TEST_CASE("Legendre transform of the truncated cumulant function", "[cramer]") {
    for (const auto* law : {&fixtures::stretched_half(), &fixtures::loghazard_three()}) {
        const auto& cum = law->cum;
        for (int r : {1, 2, 4}) {
            auto cs = cramer_series<Real50>(cum.kappa_hp, r);
            std::vector<double> gaps;
            for (double tau_d : {-1e-2, -1e-3}) {
                Real50 tau = tau_d;
                // scale so that tau / sigma^2 is small for both laws
                tau *= cum.kappa_hp[2] / 100;
                Real50 series = tau * tau / (2 * cum.kappa_hp[2]);
                for (int j = 0; j < r; ++j) series -= pow(tau, 3) * cs.lambda[j] * pow(tau, j);
                Real50 oracle = legendre_oracle(cum.kappa_hp, r + 2, tau);
                gaps.push_back(static_cast<double>(abs(oracle - series)));
                CHECK(static_cast<double>(abs(oracle - series) / oracle) < 1e-4);
            }
            const double slope = std::log10(gaps[0] / gaps[1]);
            INFO("r=" << r << " slope=" << slope);
            CHECK(std::abs(slope - (r + 3)) < 0.5);
        }
    }
}
