#include <catch_amalgamated.hpp>

#include <heavytail/exactprob.hpp>
#include <heavytail/weights.hpp>

using namespace heavytail;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("stretched hazard values", "[weights]") {
    auto m = make_stretched(0.5);
    CHECK(m.q_raw(4.0) == 2.0);
    CHECK_THAT(m.jet_raw(4.0).d1, WithinRel(0.25, 1e-15));
    CHECK(m.a() == 0.0);
    CHECK(m.b() == 0.0);
    CHECK(m.alpha_bound() == 0.5);
    CHECK_FALSE(m.normalized());
    CHECK_THROWS_AS(m.log_c(), DomainError);

    // polar form of xi^alpha on the imaginary axis
    std::complex<double> xi(0.0, 4.0);
    auto v = m.q_raw(xi);
    CHECK_THAT(std::abs(v), WithinRel(2.0, 1e-14));
    CHECK_THAT(std::arg(v), WithinRel(0.5 * std::arg(xi), 1e-14));
}

TEST_CASE("parameter ranges are enforced", "[weights]") {
    CHECK_THROWS_AS(make_stretched(0.0), ParameterError);
    CHECK_THROWS_AS(make_stretched(1.0), ParameterError);
    CHECK_THROWS_AS(make_loghazard(2.0), ParameterError);
    CHECK_NOTHROW(make_loghazard(2.5));
}

TEST_CASE("log-hazard values and signs", "[weights]") {
    auto m = make_loghazard(3.0);
    CHECK_THAT(m.q_raw(std::exp(1.0)), WithinRel(1.0, 1e-14));
    const double e2 = std::exp(2.0);
    CHECK_THAT(m.jet_raw(e2).d1, WithinRel(12.0 / e2, 1e-14));
    CHECK(m.a() == 1.0);
    CHECK(m.b() == 2.0);
    CHECK(m.lindelof_abscissa() == 2.5);
    for (double x = std::exp(2.0) * 1.01; x < 1e12; x *= 1.7) {
        const double L = std::log(x);
        const double closed = 3.0 * L * (2.0 - L) / (x * x);
        CHECK(m.jet_raw(x).d2 < 0.0);
        CHECK_THAT(m.jet_raw(x).d2, WithinRel(closed, 1e-12));
    }
    CHECK(m.alpha_bound() > 0.0);
    CHECK(m.alpha_bound() < 1.0);
}

TEST_CASE("complex and real evaluation agree on the real axis", "[weights]") {
    for (auto m : {make_stretched(0.5), make_stretched(0.3), make_loghazard(3.0), make_loghazard(2.5)}) {
        for (double x = 2.5; x < 1e9; x *= 3.1) {
            double re = m.q_raw(x);
            auto z = m.q_raw(std::complex<double>(x, 0.0));
            CHECK(std::abs(z.real() - re) <= 1e-14 * (1.0 + std::abs(re)));
            CHECK(std::abs(z.imag()) <= 1e-14 * (1.0 + std::abs(re)));
        }
    }
}

TEST_CASE("stretched derivative ratio is a power law", "[weights]") {
    auto m = make_stretched(0.5);
    for (double x = 1.0; x < 1e8; x *= 10.0) {
        double y = 7.3 * x;
        CHECK_THAT(m.jet_raw(y).d1 / m.jet_raw(x).d1, WithinRel(std::pow(y / x, -0.5), 1e-13));
    }
}

TEST_CASE("derivatives decrease to zero along a dyadic grid", "[weights]") {
    for (auto m : {make_stretched(0.5), make_loghazard(3.0)}) {
        double prev1 = INFINITY, prev2 = INFINITY;
        for (int k = 6; k < 50; ++k) {
            auto j = m.jet_raw(std::ldexp(1.0, k));
            CHECK(j.d1 < prev1);
            CHECK(std::abs(j.d2) < prev2);
            prev1 = j.d1;
            prev2 = std::abs(j.d2);
        }
    }
}

TEST_CASE("assumption report for the stretched family", "[weights]") {
    auto m = make_stretched(0.5);
    auto rep = validate_assumptions(m, {10.0, 100.0, 1000.0});
    CHECK(rep.passed());
    for (const auto& p : rep.points) CHECK_THAT(p.curvature_ratio, WithinRel(0.5, 1e-14));
    CHECK_THAT(rep.c1, WithinRel(0.5, 1e-14));
    CHECK_THAT(rep.c2, WithinRel(0.5, 1e-14));
}

TEST_CASE("assumption report for the log-hazard family", "[weights]") {
    auto m = make_loghazard(3.0);
    auto rep = validate_assumptions(m, {1e2, 1e4, 1e6});
    for (auto id : {"i", "ii", "iii", "iv"}) CHECK(rep.item(id).pass);
    for (const auto& p : rep.points)
        CHECK_THAT(p.log_growth_ratio, WithinRel(3.0 * std::log(p.x), 1e-13));
}

TEST_CASE("logarithmic hazard violates the growth item", "[weights]") {
    CustomHazard h;
    h.name = "log";
    h.jet = [](double x) { return Jet{std::log(x), 1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x)}; };
    h.a = 1.0;
    auto rep = validate_assumptions(WeightModel::custom(h), {10.0, 100.0});
    CHECK_FALSE(rep.item("ii").pass);
    CHECK(rep.item("i").pass);
    CHECK_FALSE(rep.passed());
}

TEST_CASE("grid points must lie above a", "[weights]") {
    CHECK_THROWS_AS(validate_assumptions(make_loghazard(3.0), {0.5, 10.0}), DomainError);
}

TEST_CASE("normalized weights lie in (0,1)", "[weights]") {
    auto m = normalized(make_loghazard(3.0));
    CHECK_THAT(m.p(1), WithinRel(std::exp(m.log_c()), 1e-15));
    for (long long k = 1; k < 3000; k = k * 3 + 1) {
        CHECK(m.p(k) > 0.0);
        CHECK(m.p(k) < 1.0);
    }
}
