#include <doctest.h>

#include <cmath>
#include <vector>

#include "nvsk/butterworth.hpp"
#include "nvsk/photophysics.hpp"

using namespace nvsk;

namespace {

// Steady state from the null space of the generator, independent of the
// integrator.
Eigen::Matrix<double, 5, 1> null_space_steady_state(const FiveLevelParams& p, double s) {
    const RateMatrix g = rate_matrix(p, s);
    Eigen::FullPivLU<RateMatrix> lu(g);
    Eigen::MatrixXd k = lu.kernel();
    REQUIRE(k.cols() == 1);
    Eigen::Matrix<double, 5, 1> v = k.col(0);
    return v / v.sum();
}

}  // namespace

TEST_SUITE("photophysics") {

TEST_CASE("generator columns sum to zero with non-negative off-diagonals") {
    const FiveLevelParams p;
    for (double s : {0.0, 0.3, 5.0}) {
        const RateMatrix g = rate_matrix(p, s);
        for (int c = 0; c < 5; ++c) {
            CHECK(std::abs(g.col(c).sum()) < 1e-14);
            for (int r = 0; r < 5; ++r)
                if (r != c) CHECK(g(r, c) >= 0.0);
        }
    }
}

TEST_CASE("populations are conserved and stay in [0,1]") {
    const FiveLevelParams p;
    for (double s : {0.0, 0.01, 1.0, 10.0}) {
        const double dt = max_output_step(p, s);
        double worst = 0.0, lo = 1.0, hi = 0.0;
        evolve(p, s, StateVector::ground_ms1(), 20.0, dt, [&](std::size_t, const StateVector& st) {
            worst = std::max(worst, std::abs(st.sum() - 1.0));
            for (double n : st.n) {
                lo = std::min(lo, n);
                hi = std::max(hi, n);
            }
        });
        CHECK(worst < 1e-9);
        CHECK(lo >= -1e-12);
        CHECK(hi <= 1.0 + 1e-12);
    }
}

TEST_CASE("one-interval propagator matches the matrix exponential") {
    const FiveLevelParams p;
    const double s = 2.0;
    const double dt = max_output_step(p, s);
    const RateEquationIntegrator integ(p, s, dt);
    // Reference: Taylor series of exp(G dt) to high order.
    const RateMatrix g = rate_matrix(p, s) * dt;
    RateMatrix term = RateMatrix::Identity(), ref = RateMatrix::Identity();
    for (int k = 1; k < 30; ++k) {
        term = term * g / k;
        ref += term;
    }
    CHECK((integ.propagator() - ref).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("long pumping reaches the null-space steady state") {
    const FiveLevelParams p;
    for (double s : {0.1, 1.0, 10.0}) {
        const double horizon = relaxation_horizon_us(p, s);
        const Trajectory tr = evolve(p, s, StateVector::ground_ms0(), horizon, max_output_step(p, s));
        const auto ss = null_space_steady_state(p, s);
        for (int i = 0; i < 5; ++i) CHECK(tr.states.back().n[i] == doctest::Approx(ss[i]).epsilon(1e-4));
    }
}

TEST_CASE("contrast relaxes to one and starts below one") {
    const FiveLevelParams p;
    ContrastOptions opts;
    opts.filter = false;
    const double s = 1.0 / p.i_sat_low.mw_per_um2();
    const ContrastCurve c =
        contrast_trace(p, Intensity(1.0), p.i_sat_low, relaxation_horizon_us(p, s), 0.005, opts);
    CHECK(c.contrast.front() == 1.0);
    CHECK(c.contrast[40] < 0.95);
    CHECK(c.contrast.back() == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("step above the stability limit is rejected") {
    const FiveLevelParams p;
    const double limit = max_output_step(p, 10.0);
    CHECK_THROWS_WITH_AS(evolve(p, 10.0, StateVector::ground_ms0(), 1.0, 2.0 * limit),
                         doctest::Contains("dt"), ValidationError);
}

TEST_CASE("initialization time from an exact exponential") {
    // Deviation rises instantly then decays with tau = 2 us: t_I = t_peak + 3 tau.
    std::vector<double> t, c;
    for (int k = 0; k <= 4000; ++k) {
        const double tt = k * 0.01;
        t.push_back(tt);
        c.push_back(k == 0 ? 1.0 : 1.0 - 0.3 * std::exp(-(tt - 0.01) / 2.0));
    }
    const InitializationTime ti = initialization_time(t, c);
    CHECK(ti.decay_tau_us == doctest::Approx(2.0).epsilon(1e-3));
    CHECK(ti.t_i_us == doctest::Approx(ti.t_peak_us + 6.0).epsilon(1e-2));
}

TEST_CASE("flat contrast has no dynamics to time") {
    std::vector<double> t(100), c(100, 1.0);
    for (int k = 0; k < 100; ++k) t[k] = k;
    CHECK_THROWS_AS(initialization_time(t, c), ComputationError);
}

TEST_CASE("initialization time shortens with intensity and band is ordered") {
    const FiveLevelParams p;
    const std::vector<Intensity> grid{Intensity(0.01), Intensity(0.1), Intensity(1.0), Intensity(10.0)};
    const auto band = ti_band(p, grid);
    REQUIRE(band.size() == grid.size());
    for (std::size_t i = 0; i < band.size(); ++i) {
        CHECK(band[i].lower_us <= band[i].upper_us);
        if (i > 0) CHECK(band[i].lower_us <= band[i - 1].lower_us);
        if (i > 0) CHECK(band[i].upper_us <= band[i - 1].upper_us);
    }
}

TEST_CASE("no excitation leaves the state unchanged") {
    const FiveLevelParams p;
    const Trajectory tr = evolve(p, 0.0, StateVector::ground_ms0(), 5.0, max_output_step(p, 0.0));
    for (const auto& st : tr.states) CHECK(st.n == StateVector::ground_ms0().n);
}

TEST_CASE("weak pumping repolarizes into the m_s = 0 ground state") {
    const FiveLevelParams p;
    const double s = 0.1;
    const Trajectory tr =
        evolve(p, s, StateVector::ground_ms1(), relaxation_horizon_us(p, s), max_output_step(p, s));
    const auto ss = null_space_steady_state(p, s);
    CHECK(tr.states.back().n[0] > 5.0 * tr.states.back().n[1]);
    CHECK(tr.states.back().n[0] == doctest::Approx(ss[0]).epsilon(1e-4));
}

TEST_CASE("terminal state does not depend on the initial state") {
    const FiveLevelParams p;
    for (double s : {0.05, 1.0, 30.0}) {
        // Twice the relaxation horizon leaves transients below e^-24.
        const double t_end = 2.0 * relaxation_horizon_us(p, s), dt = max_output_step(p, s);
        const auto a = evolve(p, s, StateVector::ground_ms0(), t_end, dt).states.back();
        const auto b = evolve(p, s, StateVector::ground_ms1(), t_end, dt).states.back();
        for (int i = 0; i < 5; ++i) CHECK(std::abs(a.n[i] - b.n[i]) < 1e-6);
    }
}

TEST_CASE("halving the output step leaves the end state unchanged") {
    const FiveLevelParams p;
    const double s = 3.0, dt = max_output_step(p, s);
    const auto a = evolve(p, s, StateVector::ground_ms1(), 2.0, dt).states.back();
    const auto b = evolve(p, s, StateVector::ground_ms1(), 2.0, dt / 2).states.back();
    for (int i = 0; i < 5; ++i) CHECK(std::abs(a.n[i] - b.n[i]) < 1e-8);
}

TEST_CASE("PL rate is Gamma times the excited population") {
    FiveLevelParams p;
    Trajectory tr;
    tr.dt = 0.1;
    tr.states.assign(10, StateVector{{0.5, 0.3, 0.06, 0.04, 0.1}});
    const PLTrace pl = pl_rate(tr, p);
    for (double v : pl.values) CHECK(v == doctest::Approx(0.067).epsilon(1e-12));
    tr.states.assign(10, StateVector::ground_ms0());
    for (double v : pl_rate(tr, p).values) CHECK(v == 0.0);

    const double s = 1.0;
    const auto ss = null_space_steady_state(p, s);
    const Trajectory full = evolve(p, s, StateVector::ground_ms0(), relaxation_horizon_us(p, s), max_output_step(p, s));
    CHECK(pl_rate(full, p).values.back() == doctest::Approx(p.gamma_per_us * (ss[2] + ss[3])).epsilon(1e-5));
}

TEST_CASE("low-pass keeps DC and attenuates twice the cutoff") {
    PLTrace t;
    t.dt = 0.01;
    t.values.assign(20000, 0.25);
    const PLTrace f = lowpass(t);
    CHECK(f.filtered);
    CHECK(f.values.back() == doctest::Approx(0.25).epsilon(1e-6));
    const ButterworthLowpass design(kDefaultFilterOrder, kDefaultCutoffMhz, 1.0 / t.dt);
    CHECK(20.0 * std::log10(design.magnitude(2.0 * kDefaultCutoffMhz)) <= -20.0);
    t.dt = 0.1;
    CHECK_THROWS_AS(lowpass(t), ValidationError);
}

TEST_CASE("identical initial states give unit contrast") {
    const FiveLevelParams p;
    const ContrastCurve c =
        contrast_trace(p, 1.0, StateVector::ground_ms0(), StateVector::ground_ms0(), 5.0, 0.005);
    for (double v : c.contrast) CHECK(v == 1.0);
}

TEST_CASE("band at the saturation intensity is finite and narrows with pumping") {
    const FiveLevelParams p;
    const std::vector<Intensity> grid{Intensity(1.0), Intensity(10.0), Intensity(100.0)};
    const auto band = ti_band(p, grid);
    CHECK(band[0].lower_us > 0.0);
    CHECK(std::isfinite(band[0].upper_us));
    CHECK(band[2].upper_us - band[2].lower_us < band[1].upper_us - band[1].lower_us);
    CHECK(band[1].upper_us - band[1].lower_us < band[0].upper_us - band[0].lower_us);
}

}
