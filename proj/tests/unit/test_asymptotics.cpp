#include <catch_amalgamated.hpp>

#include <boost/math/special_functions/gamma.hpp>

#include <heavytail/asymptotics.hpp>

#include "fixtures.hpp"

using namespace heavytail;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using fixtures::loghazard_three;
using fixtures::stretched_half;

TEST_CASE("moderate estimate without Cramer terms is the Gaussian local value", "[asymptotics]") {
    const auto& law = stretched_half();
    const double n = 1e5, N = std::sqrt(n) * std::log(n);
    const auto e = estimate_moderate(law, n, N, 0);
    const double s2 = law.sigma2();
    CHECK_THAT(e.log_value, WithinAbs(-N * N / (2 * n * s2) - 0.5 * std::log(2 * std::numbers::pi * s2 * n), 1e-12));
    CHECK(e.v_term_log.has_value());
    CHECK_FALSE(e.h_term_log.has_value());
}

TEST_CASE("Cramer order changes the moderate estimate by the series tail", "[asymptotics]") {
    const auto& law = stretched_half();
    const double n = 1e6, N = std::pow(n, 0.6);
    const auto c3 = cramer_lambda(law.cum, 3);
    const double u = N / n;
    const double direct = N * N * N / (n * n) * (c3.lambda[1] * u + c3.lambda[2] * u * u);
    const double diff = estimate_moderate(law, n, N, 3).log_value - estimate_moderate(law, n, N, 1).log_value;
    CHECK_THAT(diff, WithinAbs(direct, 1e-12));
}

TEST_CASE("moderate estimate against the negative binomial", "[asymptotics]") {
    // sum of n geometric(1/2) variables on {1, 2, ...}: P(S_n = m) = C(m-1, n-1) 2^{-m}
    const auto geo = make_law(make_geometric_half());
    const double n = 1e4;
    const long long m = std::llround(n * geo.mu() + 5.0 * std::sqrt(n));
    const double N = m - n * geo.mu();
    const double exact = boost::math::lgamma(double(m)) - boost::math::lgamma(n) -
                         boost::math::lgamma(double(m) - n + 1.0) - m * std::log(2.0);
    for (int r : {1, 2, 4}) {
        const double ratio = std::exp(estimate_moderate(geo, n, N, r).log_value - exact);
        CHECK(ratio >= 0.9);
        CHECK(ratio <= 1.1);
    }
}

TEST_CASE("critical estimate: crossing of the two components", "[asymptotics]") {
    const auto& law = stretched_half();
    for (double n : {1e5, 1e6}) {
        const auto sc = critical_scales(law, n);
        const int r = auto_order(law, n);
        auto gap = [&](double N) {
            const auto e = estimate_critical(law, n, N, r);
            return *e.h_term_log - *e.v_term_log;
        };
        double lo = 0.85 * sc.N_2star, hi = 1.25 * sc.N_2star;
        REQUIRE(gap(lo) < 0.0);
        REQUIRE(gap(hi) > 0.0);
        for (int i = 0; i < 60; ++i) {
            const double mid = 0.5 * (lo + hi);
            (gap(mid) < 0.0 ? lo : hi) = mid;
        }
        CHECK(std::abs(lo / sc.N_2star - 1.0) <= 0.1);

        const auto below = estimate_critical(law, n, 0.8 * sc.N_2star, r);
        CHECK(below.h_term_log.value_or(-INFINITY) < *below.v_term_log);
        const auto above = estimate_critical(law, n, 1.25 * sc.N_2star, r);
        CHECK(*above.h_term_log > *above.v_term_log);
        CHECK_THAT(above.log_value, WithinAbs(numeric::log_add(*above.v_term_log, *above.h_term_log), 1e-14));
    }
}

TEST_CASE("large estimate with r = 0 is the refined heuristic", "[asymptotics]") {
    const auto& law = stretched_half();
    const double n = 1e4, N = 4.0 * critical_N_star(law, n);
    const auto e = estimate_large(law, n, N, 0);
    const auto cp = critical_points(law, n, N);
    const double heur = std::log(n) - f_n(law, n, N, *cp.x_n) - 0.5 * std::log(cp.fpp_factor);
    CHECK_THAT(e.log_value, WithinAbs(heur, 1e-9));
}

TEST_CASE("large estimate against the convolution oracle", "[asymptotics]") {
    const auto& law = stretched_half();
    for (long long n : {24LL, 48LL, 96LL}) {
        const double Ns = critical_N_star(law, double(n));
        double prev = INFINITY;
        for (double f : {4.0, 8.0, 16.0}) {
            const long long m = std::llround(n * law.mu() + f * Ns);
            const double N = m - n * law.mu();
            const auto ex = exact_point_prob(law.model, n, m);
            const double ratio = estimate_large(law, double(n), N, 0).value() / ex.prob;
            CHECK(ratio >= 0.8);
            CHECK(ratio <= 1.25);
            // approach to the one-big-jump value n p(N)
            const double np = std::exp(estimate_bigjump_simple(law, double(n), N).log_value);
            const double gap = std::abs(estimate_large(law, double(n), N, 0).value() / np - 1.0);
            CHECK(gap < prev);
            prev = gap;
        }
    }
}

TEST_CASE("N = n is below the critical scale at desk sizes", "[asymptotics]") {
    // for alpha = 1/2 the big-jump point x_nr exists only beyond ~N_star = 3 (n sigma^2 / 4)^{2/3}
    const auto& law = stretched_half();
    CHECK_THROWS_AS(estimate_large(law, 48.0, 48.0, 0), PreconditionError);
}

TEST_CASE("Cramer corrections are irrelevant at N of order n", "[asymptotics]") {
    const auto& law = stretched_half();
    const double n = 1e6, N = 2.0 * n;
    CHECK(std::abs(estimate_large(law, n, N, 0).log_value - estimate_large(law, n, N, 2).log_value) <= 0.05);
}

TEST_CASE("insensitivity diagnostic", "[asymptotics]") {
    SECTION("stretched: threshold scale N = n gives a diagnostic of order one") {
        const auto& law = stretched_half();
        for (double n : {1e3, 1e4, 1e5, 1e6}) {
            const auto s = estimate_bigjump_simple(law, n, n);
            CHECK(s.diagnostic >= 0.1);
            CHECK(s.diagnostic <= 10.0);
            CHECK_THAT(s.diagnostic, WithinRel(0.5 * std::sqrt(law.sigma2()), 1e-12));
            CHECK_THAT(s.log_value, WithinRel(std::log(n) - law.model.q(n), 1e-15));
        }
    }
    SECTION("log-hazard: diagnostic along N = sqrt(n) (log n)^theta") {
        const auto& law = loghazard_three();
        auto diag = [&](double n, double th) {
            return estimate_bigjump_simple(law, n, std::sqrt(n) * std::pow(std::log(n), th)).diagnostic;
        };
        for (double n = 1e3; n < 1e7; n *= 10) {
            CHECK(diag(10 * n, 2.5) < diag(n, 2.5));
            CHECK(diag(10 * n, 1.5) > diag(n, 1.5));
        }
    }
}

TEST_CASE("order selection", "[asymptotics]") {
    CHECK(select_order(1e6, 1e-2, 1e-3, 10) == 5);
    CHECK(select_order(1e6, 0.5, 1e-3, 10) == 10);
    CHECK(select_order(1e4, 1.2, 1e-3, 10) == 0);
    const auto& law = stretched_half();
    CHECK(auto_order(law, 1e4) == 0);
    CHECK(auto_order(law, 1e6) == 10);
}

TEST_CASE("automatic dispatch", "[asymptotics]") {
    const auto& law = stretched_half();
    const double n = 1e5;
    const double Ns = critical_N_star(law, n);
    // N_star ~ 24 n^{2/3} here, so the default eps2 = 1 leaves no critical window
    EstimateConfig wide;
    wide.thresholds.eps2 = 100.0;
    CHECK(estimate_auto(law, n, 0.5 * Ns).regime == Regime::Moderate);
    CHECK(estimate_auto(law, n, 1.5 * Ns).regime == Regime::BigJump);
    const auto crit = estimate_auto(law, n, 1.5 * Ns, wide);
    CHECK(crit.regime == Regime::Critical);
    CHECK(crit.v_term_log.has_value());
    CHECK(crit.h_term_log.has_value());
    const auto big = estimate_auto(law, n, 10.0 * Ns, wide);
    CHECK(big.regime == Regime::BigJump);
    CHECK(big.h_term_log.has_value());
    CHECK_FALSE(big.v_term_log.has_value());

    EstimateConfig cfg;
    cfg.force = Regime::Moderate;
    const auto forced = estimate_auto(law, n, 10.0 * Ns, cfg);
    CHECK(forced.regime == Regime::Moderate);
    CHECK(forced.forced);
    CHECK(forced.notes.front().find("mismatch") != std::string::npos);

    CHECK_THROWS_AS(estimate_auto(law, n, 0.5 * std::sqrt(n)), DomainError);

    cfg = {};
    cfg.with_saddle = true;
    const auto s = estimate_auto(law, n, 10.0 * Ns, cfg);
    REQUIRE(s.saddle.has_value());
    CHECK(s.saddle->hess_det < 0.0);
}

TEST_CASE("estimates are continuous at the moderate/critical boundary", "[asymptotics]") {
    const auto& law = stretched_half();
    for (double n : {1e4, 1e6}) {
        const double Ns = critical_N_star(law, n);
        const int r = auto_order(law, n);
        for (double f : {0.95, 1.05}) {
            const double N = f * Ns;
            const double a = estimate_moderate(law, n, N, r).log_value;
            const double b = estimate_critical(law, n, N, r).log_value;
            CHECK(std::abs(a - b) <= 0.5);
        }
    }
}
