#include <catch2/catch_amalgamated.hpp>

#include "test_util.hpp"

#include <cmath>
#include <random>

using namespace rtint;

TEST_CASE("planck radiance basics") {
    CHECK(planck(1.0, 0.0) == 0.0);
    CHECK(planck(-1.0, 1.0) == 0.0);
    CHECK(planck(1000.0, 1.0) == 0.0); // far Wien tail underflows to zero

    // small-argument series nu^2 T (1 - x/2 + x^2/12)
    const double nu = 1e-6, T = 2.0;
    const double x = nu / T;
    const double series = nu * nu * T * (1.0 - 0.5 * x + x * x / 12.0);
    CHECK(planck(nu, T) == Catch::Approx(series).epsilon(1e-10));

    // both sides of the series/evaluation switch agree with expm1 arithmetic
    for (double nu_sw : {0.9999e-4, 1.0001e-4}) {
        const double exact = nu_sw * nu_sw * nu_sw / std::expm1(nu_sw);
        CHECK(planck(nu_sw, 1.0) == Catch::Approx(exact).epsilon(1e-10));
    }

    // dB/dT is positive and matches a finite difference
    const double h = 1e-6;
    const double fd = (planck(3.0, 1.0 + h) - planck(3.0, 1.0 - h)) / (2.0 * h);
    CHECK(planck_dT(3.0, 1.0) == Catch::Approx(fd).epsilon(1e-7));
}

TEST_CASE("band integral reproduces the Stefan-Boltzmann constant") {
    const double total = band_planck({0.0, 40.0}, 1.0);
    CHECK(std::abs(total - kSigma) / kSigma <= 1e-6);
    // sigma T^4 scaling
    CHECK(band_planck({0.0, 80.0}, 2.0) == Catch::Approx(16.0 * kSigma).epsilon(1e-6));
}

TEST_CASE("band integrals partition and degenerate cases") {
    const double whole = band_planck({0.0, 40.0}, 1.3);
    const double parts = band_planck({0.0, 5.0}, 1.3) + band_planck({5.0, 12.0}, 1.3) +
                         band_planck({12.0, 40.0}, 1.3);
    CHECK(parts == Catch::Approx(whole).epsilon(1e-10));
    CHECK(band_planck({5.0, 5.0}, 1.0) == 0.0);
    CHECK(band_planck({0.0, 40.0}, 0.0) == 0.0);
}

TEST_CASE("low-frequency band is linear in temperature") {
    // Rayleigh-Jeans limit: B_nu ~ nu^2 T, so the band value doubles with T
    const Band narrow{1e-6, 2e-6};
    const double b1 = band_planck(narrow, 1.0);
    const double b2 = band_planck(narrow, 2.0);
    CHECK(b2 == Catch::Approx(2.0 * b1).epsilon(1e-6));
}

TEST_CASE("band integral is monotone in temperature") {
    const Band band{0.5, 7.0};
    double prev = 0.0;
    for (double T = 0.1; T <= 2.0; T += 0.1) {
        const double v = band_planck(band, T);
        CHECK(v > prev);
        prev = v;
    }
    // derivative matches a finite difference
    const double h = 1e-6;
    const double fd = (band_planck(band, 1.0 + h) - band_planck(band, 1.0 - h)) / (2.0 * h);
    CHECK(band_planck_dT(band, 1.0) == Catch::Approx(fd).epsilon(1e-6));
}

TEST_CASE("grey temperature inversion") {
    CHECK(grey_temperature(0.0) == 0.0);
    CHECK(std::abs(grey_temperature(kSigma) - 1.0) <= 1e-12);
    CHECK(std::abs(grey_temperature(16.0 * kSigma) - 2.0) <= 1e-12);
    CHECK(grey_temperature(-1.0) == 0.0);
}

TEST_CASE("multi-band temperature solve") {
    SECTION("zero radiation gives zero temperature") {
        CHECK(solve_temperature({{0, 20}}, {0.1}, {0.0}) == 0.0);
    }

    SECTION("grey consistency") {
        const double T = solve_temperature({{0.0, 40.0}}, {0.1}, {kSigma});
        CHECK(T == Catch::Approx(1.0).epsilon(1e-6));
    }

    SECTION("two-band balance residual vanishes at the root") {
        const std::vector<Band> bands = {{0.0, 3.0}, {3.0, 40.0}};
        const std::vector<double> coeff = {0.2, 0.05};
        const std::vector<double> j = {0.8, 2.5};
        const double T = solve_temperature(bands, coeff, j);
        double lhs = 0.0, rhs = 0.0;
        for (size_t b = 0; b < bands.size(); ++b) {
            lhs += coeff[b] * band_planck(bands[b], T);
            rhs += coeff[b] * j[b];
        }
        CHECK(lhs == Catch::Approx(rhs).epsilon(1e-10));
    }

    SECTION("monotone in each band intensity") {
        const std::vector<Band> bands = {{0.0, 3.0}, {3.0, 40.0}};
        const std::vector<double> coeff = {0.2, 0.05};
        std::mt19937 rng(13);
        std::uniform_real_distribution<double> uni(0.0, 3.0);
        for (int rep = 0; rep < 30; ++rep) {
            std::vector<double> j = {uni(rng), uni(rng)};
            const double T0 = solve_temperature(bands, coeff, j);
            for (size_t b = 0; b < bands.size(); ++b) {
                auto jb = j;
                jb[b] += 0.5;
                CHECK(solve_temperature(bands, coeff, jb) > T0);
            }
        }
    }

    SECTION("vanishing coefficients are rejected") {
        CHECK_THROWS_WITH(solve_temperature({{0, 20}}, {0.0}, {1.0}),
                          Catch::Matchers::ContainsSubstring("temperature undetermined"));
        CHECK_THROWS_AS(solve_temperature({{0, 20}}, {0.1, 0.1}, {1.0}),
                        std::invalid_argument);
    }
}
