#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "nvsk/core_types.hpp"
#include "nvsk/ramsey.hpp"

using namespace nvsk;

namespace {

RamseyModel triplet(double t2, double p) {
    RamseyModel m;
    m.t2_star_us = t2;
    m.p = p;
    m.detuning_mhz = 0.4;
    m.amplitude = 1.0;
    m.baseline = 0.5;
    return m;
}

}  // namespace

TEST_SUITE("ramsey") {

TEST_CASE("model evaluates as envelope times the mean of the lines") {
    RamseyModel m = triplet(10.0, 1.5);
    const double tau = 3.3;
    const double env = std::exp(-std::pow(tau / 10.0, 1.5));
    double lines = 0.0;
    for (double f : {0.4 - 2.16, 0.4, 0.4 + 2.16}) lines += std::cos(2.0 * std::numbers::pi * f * tau);
    CHECK(m.envelope(tau) == doctest::Approx(env).epsilon(1e-14));
    CHECK(m.evaluate(tau) == doctest::Approx(0.5 + env * lines / 3.0).epsilon(1e-14));
    CHECK(hyperfine_offset(0, 3) == -1.0);
    CHECK(hyperfine_offset(1, 2) == 0.5);
}

TEST_CASE("uniform grid and seeded noise are reproducible") {
    const auto tau = uniform_tau_grid(1.0, 0.25);
    CHECK(tau == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
    const RamseyModel m = triplet(5.0, 1.0);
    CHECK(synthesize(m, tau, 0.1, 3) == synthesize(m, tau, 0.1, 3));
    CHECK(synthesize(m, tau, 0.1, 3) != synthesize(m, tau, 0.1, 4));
}

TEST_CASE("noise-free signals are recovered to 1e-6") {
    for (auto [t2, p] : {std::pair{17.7, 1.0}, std::pair{8.6, 1.4}, std::pair{17.7, 2.0}}) {
        const RamseyModel m = triplet(t2, p);
        const auto tau = uniform_tau_grid(4.0 * t2, 0.05);
        const auto y = synthesize(m, tau, 0.0, 1);
        const RamseyFitResult r = fit_ramsey(tau, y);
        CHECK(r.t2_star_us == doctest::Approx(t2).epsilon(1e-6));
        CHECK(r.p == doctest::Approx(p).epsilon(1e-6));
        CHECK(r.detuning_mhz == doctest::Approx(0.4).epsilon(1e-6));
        CHECK(r.hyperfine_splitting_mhz == doctest::Approx(2.16).epsilon(1e-6));
        CHECK(r.amplitude == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(r.baseline == doctest::Approx(0.5).epsilon(1e-6));
    }
}

TEST_CASE("two percent noise recovers T2* within five percent") {
    for (double t2 : {17.7, 8.6}) {
        const RamseyModel m = triplet(t2, 1.0);
        const auto tau = uniform_tau_grid(4.0 * t2, 0.05);
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const RamseyFitResult r = fit_ramsey(tau, synthesize(m, tau, 0.02, seed));
            CHECK(r.t2_star_us == doctest::Approx(t2).epsilon(0.05));
            CHECK(r.t2_star_sigma > 0.0);
            CHECK(r.residual_rms == doctest::Approx(0.02).epsilon(0.2));
        }
    }
}

TEST_CASE("fixed splitting fit") {
    const RamseyModel m = triplet(12.0, 1.2);
    const auto tau = uniform_tau_grid(40.0, 0.05);
    RamseyFitOptions opts;
    opts.fit_splitting = false;
    const RamseyFitResult r = fit_ramsey(tau, synthesize(m, tau, 0.0, 1), opts);
    CHECK(r.t2_star_us == doctest::Approx(12.0).epsilon(1e-6));
    CHECK(r.hyperfine_splitting_mhz == 2.16);
    CHECK(r.hyperfine_splitting_sigma == 0.0);
}

TEST_CASE("under-sampled fringes are rejected") {
    const RamseyModel m = triplet(17.7, 1.0);
    // Fastest line at 2.56 MHz: 0.2 us sampling gives under 2 samples per period.
    const auto tau = uniform_tau_grid(60.0, 0.2);
    CHECK_THROWS_AS(fit_ramsey(tau, synthesize(m, tau, 0.0, 1)), ValidationError);
}

TEST_CASE("too few samples or a non-increasing grid are rejected") {
    std::vector<double> tau{0.0, 0.1, 0.2}, y{1.0, 0.5, 0.2};
    CHECK_THROWS_AS(fit_ramsey(tau, y), ValidationError);
    auto grid = uniform_tau_grid(5.0, 0.05);
    std::vector<double> sig(grid.size(), 0.0);
    grid[10] = grid[9];
    CHECK_THROWS_AS(fit_ramsey(grid, sig), ValidationError);
}

TEST_CASE("parenthesis notation") {
    CHECK(parenthesis_notation(17.7123, 0.07) == "17.71(7)");
    CHECK(parenthesis_notation(8.6, 0.5) == "8.6(5)");
    CHECK(parenthesis_notation(17.7, 0.4) == "17.7(4)");
    CHECK(parenthesis_notation(1234.0, 56.0) == "1230(60)");
    CHECK(parenthesis_notation(0.99, 0.096) == "1.0(1)");
}

}
