#include <catch_amalgamated.hpp>

#include <heavytail/variational.hpp>

#include "fixtures.hpp"

using namespace heavytail;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using fixtures::loghazard_three;
using fixtures::stretched_half;

namespace {

struct StretchedClosedForm {
    double x_star, N_star, N_2star;
};

StretchedClosedForm stretched_closed(double alpha, double n, double sigma2) {
    const double e = 1.0 / (2.0 - alpha);
    const double C = (2.0 - alpha) * std::pow(2.0 - 2.0 * alpha, -(1.0 - alpha) / (2.0 - alpha));
    const double xs = std::pow(alpha * (1.0 - alpha) * n * sigma2, e);
    return {xs, (2.0 - alpha) / (1.0 - alpha) * xs, C * std::pow(n * sigma2, e)};
}

} // namespace

TEST_CASE("f_n and f_nr values", "[variational]") {
    const auto& law = stretched_half();
    const double s2 = law.sigma2(), lc = law.model.log_c();
    CHECK_THAT(f_n(law, 100, 200, 200), WithinRel(law.model.q(200), 1e-15));
    const double ref = std::sqrt(150.0) - lc + 2500.0 / (200.0 * s2);
    CHECK_THAT(f_n(law, 100, 200, 150), WithinRel(ref, 1e-14));
    CramerCoeffs none;
    CHECK(f_nr(law, 100, 200, none, 150) == f_n(law, 100, 200, 150));
    CHECK_THROWS_AS(f_n(law, 100, 200, 0.0), DomainError);

    auto c2 = cramer_lambda(law.cum, 2);
    const double u = 50.0 / 100.0;
    const double corr = 100.0 * (c2.lambda[0] * std::pow(u, 3) + c2.lambda[1] * std::pow(u, 4));
    CHECK_THAT(f_nr(law, 100, 200, c2, 150), WithinRel(ref - corr, 1e-13));
}

TEST_CASE("derivatives of f_nr match finite differences", "[variational]") {
    const auto& law = stretched_half();
    auto c = cramer_lambda(law.cum, 4);
    const double n = 1e4, N = 3000, h = 1e-3;
    for (double x : {500.0, 1200.0, 2500.0}) {
        double fd1 = (f_nr(law, n, N, c, x + h) - f_nr(law, n, N, c, x - h)) / (2 * h);
        CHECK_THAT(f_nr_prime(law, n, N, c, x), WithinRel(fd1, 1e-6));
        double fd2 = (f_nr_prime(law, n, N, c, x + h) - f_nr_prime(law, n, N, c, x - h)) / (2 * h);
        CHECK_THAT(f_nr_second(law, n, N, c, x), WithinRel(fd2, 1e-5));
    }
}

TEST_CASE("stretched scales match the closed forms", "[variational]") {
    const auto& law = stretched_half();
    for (double n : {1e3, 1e4, 1e5, 1e6}) {
        auto cf = stretched_closed(0.5, n, law.sigma2());
        auto sc = critical_scales(law, n);
        CHECK_THAT(sc.x_star, WithinRel(cf.x_star, 1e-10));
        CHECK_THAT(sc.x_star, WithinRel(std::pow(n * law.sigma2() / 4.0, 2.0 / 3.0), 1e-10));
        CHECK_THAT(sc.N_star, WithinRel(cf.N_star, 1e-10));
        CHECK_THAT(sc.N_star / sc.x_star, WithinRel(3.0, 1e-10));
        CHECK_THAT(sc.N_2star, WithinRel(cf.N_2star, 1e-9));
        CHECK_THAT(sc.N_2star, WithinRel(1.5 * std::pow(n * law.sigma2(), 2.0 / 3.0), 1e-9));
        CHECK_THAT(law.model.jet_raw(sc.x_star).d2, WithinRel(-1.0 / (n * law.sigma2()), 1e-10));
        CHECK(sc.x_star < sc.N_star);
        CHECK(sc.N_star < sc.N_2star);
        CHECK(sc.x_star / std::sqrt(n) > 10.0);
    }
    for (double alpha : {0.3, 0.7}) {
        auto law2 = make_law(make_stretched(alpha), 4);
        auto cf = stretched_closed(alpha, 1e5, law2.sigma2());
        auto sc = critical_scales(law2, 1e5);
        CHECK_THAT(sc.x_star, WithinRel(cf.x_star, 1e-10));
        CHECK_THAT(sc.N_star, WithinRel(cf.N_star, 1e-10));
        CHECK_THAT(sc.N_2star, WithinRel(cf.N_2star, 1e-9));
    }
}

TEST_CASE("break-even holds at N_2star", "[variational]") {
    for (const auto* law : {&stretched_half(), &loghazard_three()}) {
        const double n = 1e5;
        auto sc = critical_scales(*law, n);
        auto cp = critical_points(*law, n, sc.N_2star);
        REQUIRE(cp.x_n);
        CHECK(std::abs(cp.f_at_xn - cp.f_at_a) <= 1e-8 * std::abs(cp.f_at_a));
    }
}

TEST_CASE("log-hazard scales approach their asymptotes", "[variational]") {
    const auto& law = loghazard_three();
    double prev_ratio = 10.0;
    for (double n : {1e4, 1e6, 1e8, 1e10}) {
        auto sc = critical_scales(law, n);
        CHECK_THAT(law.model.jet_raw(sc.x_star).d2, WithinRel(-1.0 / (n * law.sigma2()), 1e-10));
        const double ratio = sc.N_star / sc.x_star;
        CHECK(ratio > 2.0);
        CHECK(ratio < prev_ratio);
        prev_ratio = ratio;
        CHECK(sc.x_star < sc.N_star);
        CHECK(sc.N_star < sc.N_2star);
    }
    CHECK_THROWS_AS(inflection_x_star(law, 1.0), NoRootError);
}

TEST_CASE("critical points below, at and above N_star", "[variational]") {
    const auto& law = stretched_half();
    const double n = 1e4;
    auto sc = critical_scales(law, n);

    auto none = critical_points(law, n, 0.5 * sc.N_star);
    CHECK_FALSE(none.x_n);
    CHECK_FALSE(none.x_prime);

    auto tangent = critical_points(law, n, sc.N_star * (1 + 1e-8));
    CHECK(tangent.degenerate);
    CHECK_THAT(*tangent.x_n, WithinRel(sc.x_star, 1e-14));

    const double N = 2.0 * sc.N_star;
    auto cp = critical_points(law, n, N);
    REQUIRE(cp.x_n);
    REQUIRE(cp.x_prime);
    CHECK(*cp.x_prime < sc.x_star);
    CHECK(sc.x_star < *cp.x_n);
    CHECK(*cp.x_n < N);
    CHECK(std::abs(f_n_prime(law, n, N, *cp.x_n)) <= 1e-10 * law.model.jet_raw(*cp.x_n).d1);
    CHECK(std::abs(f_n_prime(law, n, N, *cp.x_prime)) <= 1e-10 * law.model.jet_raw(*cp.x_prime).d1);
    CHECK(f_n_second(law, n, *cp.x_n) > 0.0);
    CHECK(N - *cp.x_n <= sc.N_star);
    CHECK(cp.fpp_factor > 0.0);
    CHECK(cp.fpp_factor <= 1.0);
    CHECK(cp.fpp_factor >= 1.0 - 2.0 * sc.N_star / N);

    // sign pattern: negative strictly between the critical points, positive outside
    for (double x = 1e-3; x < N; x *= 1.07) {
        double d = f_n_prime(law, n, N, x);
        bool inside = x > *cp.x_prime * (1 + 1e-9) && x < *cp.x_n * (1 - 1e-9);
        bool outside = x < *cp.x_prime * (1 - 1e-9) || x > *cp.x_n * (1 + 1e-9);
        if (inside) CHECK(d < 0.0);
        if (outside) CHECK(d > 0.0);
    }
}

TEST_CASE("lower bracket of the minimizer", "[variational]") {
    for (const auto* law : {&stretched_half(), &loghazard_three()}) {
        for (double n : {1e3, 1e5}) {
            double Ns;
            try { Ns = critical_N_star(*law, n); } catch (const NoRootError&) { continue; }
            for (double mult : {1.1, 1.5, 3.0, 10.0, 100.0}) {
                const double N = mult * Ns;
                auto cp = critical_points(*law, n, N);
                REQUIRE(cp.x_n);
                CHECK(N - Ns <= *cp.x_n);
                CHECK(*cp.x_n <= N);
            }
        }
    }
}

TEST_CASE("log-hazard has no lower critical point when q' vanishes at a", "[variational]") {
    const auto& law = loghazard_three();
    const double n = 1e6;
    auto sc = critical_scales(law, n);
    // N / (n sigma^2) exceeds the maximum of q', so f'_n < 0 up to x_n
    const double N = 3.0 * n * law.sigma2();
    REQUIRE(N > sc.N_star);
    auto cp = critical_points(law, n, N);
    CHECK(cp.x_n);
    CHECK_FALSE(cp.x_prime);
}

TEST_CASE("truncated critical point", "[variational]") {
    const auto& law = stretched_half();
    const double n = 1e4;
    auto sc = critical_scales(law, n);
    const double N = 2.0 * sc.N_star;
    CramerCoeffs zero;
    auto cp = critical_points(law, n, N);
    CHECK_THAT(truncated_critical_point(law, n, N, zero), WithinRel(*cp.x_n, 1e-12));

    auto c = cramer_lambda(law.cum, 3);
    double x = truncated_critical_point(law, n, N, c);
    CHECK(std::abs(f_nr_prime(law, n, N, c, x)) < 1e-12);
    CHECK(x > sc.x_star);
    CHECK(x < N);

    double prev = 0.0;
    for (double mult : {4.0, 16.0, 64.0, 256.0}) {
        const double M = mult * sc.N_star;
        double xm = truncated_critical_point(law, n, M, c);
        CHECK(xm / M > prev);
        prev = xm / M;
        const double rel = std::abs(f_nr(law, n, M, c, xm) / law.model.q(M) - 1.0);
        CHECK(rel < 2.0 * sc.N_star / M);
    }
    CHECK(prev > 0.99);
    CHECK_THROWS_AS(truncated_critical_point(law, n, 1.01 * sc.N_star, c), PreconditionError);
}

TEST_CASE("regime classification", "[variational]") {
    const auto& law = stretched_half();
    const double n = 1e6;
    auto sc = critical_scales(law, n);
    CHECK(classify_regime(law, n, 0.5 * sc.N_star) == Regime::Moderate);
    CHECK(classify_regime(law, n, n) == Regime::BigJump);
    REQUIRE(1.5 * sc.N_star < std::pow(n, 2.0 / 3.0) * 100);
    RegimeThresholds th;
    th.eps2 = 100.0;
    CHECK(classify_regime(law, n, 1.5 * sc.N_star, th) == Regime::Critical);
    CHECK_THROWS_AS(classify_regime(law, n, 0.5 * std::sqrt(n)), DomainError);
}

TEST_CASE("insensitivity predicate decreases above the threshold exponent", "[variational]") {
    const auto& law = stretched_half();
    // threshold exponent 1/(2 - 2 alpha) = 1 for alpha = 1/2
    auto pred = [&](double n, double theta) {
        return std::sqrt(n * law.sigma2()) * law.model.jet_raw(std::pow(n, theta)).d1;
    };
    double prev_above = INFINITY, prev_below = 0.0;
    for (double n = 1e3; n < 1e9; n *= 2.0) {
        double above = pred(n, 1.1), below = pred(n, 0.9);
        CHECK(above < prev_above);
        CHECK(below > prev_below);
        prev_above = above;
        prev_below = below;
    }
}
