#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "fixtures.hpp"
#include "nvsk/sensitivity.hpp"

using namespace nvsk;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SensingParams unit_params() {
    SensingParams p;
    p.delta_ms = 1;
    p.gamma_e = 1.0;
    p.n_sensors = 1.0;
    p.tau_us = 1.0;
    p.t2_star = DephasingTime::unbounded();
    p.contrast = 1.0;
    p.n_avg = kInf;
    p.t_overhead_us = 0.0;
    return p;
}

// Brute-force scan of a 1-D objective on a log grid; returns the argmin.
template <class F>
double grid_argmin(F f, double lo, double hi, int n) {
    double best_x = lo, best = kInf;
    for (int i = 0; i < n; ++i) {
        const double x = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
        const double v = f(x);
        if (v < best) {
            best = v;
            best_x = x;
        }
    }
    return best_x;
}

}  // namespace

TEST_SUITE("sensitivity") {

TEST_CASE("all factors unity in normalized units") { CHECK(ramsey_sensitivity(unit_params()) == 1.0); }

TEST_CASE("half-T2* to T2* ratio matches the closed form") {
    SensingParams p = unit_params();
    p.t2_star = DephasingTime::from_us(10.0);
    p.n_avg = 3.0;
    p.contrast = 0.1;
    p.tau_us = 5.0;
    const double half = ramsey_sensitivity(p);
    p.tau_us = 10.0;
    const double full = ramsey_sensitivity(p);
    CHECK(half / full == doctest::Approx(std::exp(0.5) / std::sqrt(0.5) / std::exp(1.0)).epsilon(1e-12));
    CHECK(half / full == doctest::Approx(0.8578).epsilon(1e-4));
}

TEST_CASE("double quantum halves the sensitivity at fixed parameters") {
    SensingParams p = unit_params();
    p.t2_star = DephasingTime::from_us(3.0);
    p.tau_us = 2.0;
    const double sq = ramsey_sensitivity(p);
    p.delta_ms = 2;
    CHECK(ramsey_sensitivity(p) == sq / 2.0);
}

TEST_CASE("zero photons per readout is rejected") {
    SensingParams p = unit_params();
    p.n_avg = 0.0;
    CHECK_THROWS_WITH_AS(ramsey_sensitivity(p), doctest::Contains("readout noise term undefined"), ValidationError);
    p.n_avg = 1.0;
    p.contrast = 1.5;
    CHECK_THROWS_AS(ramsey_sensitivity(p), ValidationError);
}

TEST_CASE("sensitivity is monotone in each parameter") {
    SensingParams base = unit_params();
    base.t2_star = DephasingTime::from_us(10.0);
    base.tau_us = 4.0;
    base.contrast = 0.05;
    base.n_avg = 2.0;
    base.t_overhead_us = 5.0;
    double prev_n = kInf, prev_c = kInf, prev_navg = kInf, prev_to = 0.0;
    for (int i = 1; i <= 20; ++i) {
        SensingParams p = base;
        p.n_sensors = 0.1 * i;
        const double en = ramsey_sensitivity(p);
        CHECK(en < prev_n);
        prev_n = en;
        p = base;
        p.contrast = 0.05 * i;
        const double ec = ramsey_sensitivity(p);
        CHECK(ec < prev_c);
        prev_c = ec;
        p = base;
        p.n_avg = 0.5 * i;
        const double ea = ramsey_sensitivity(p);
        CHECK(ea < prev_navg);
        prev_navg = ea;
        p = base;
        p.t_overhead_us = 2.0 * i;
        const double et = ramsey_sensitivity(p);
        CHECK(et > prev_to);
        prev_to = et;
    }
}

TEST_CASE("optimal tau is T2*/2 for p = 1 without overhead") {
    SensingParams p = unit_params();
    for (double t2 : {0.5, 8.6, 17.7, 1000.0}) {
        p.t2_star = DephasingTime::from_us(t2);
        const TauOptimum opt = optimal_tau(p);
        CHECK(opt.tau_us == doctest::Approx(t2 / 2).epsilon(1e-3));
        CHECK_FALSE(opt.at_boundary);
    }
}

TEST_CASE("optimal tau grows with overhead, checked against a grid scan") {
    SensingParams p = unit_params();
    p.t2_star = DephasingTime::from_us(10.0);
    p.contrast = 0.03;
    p.n_avg = 0.5;
    double prev = 0.0;
    for (double to : {0.0, 1.0, 10.0, 100.0, 1000.0}) {
        p.t_overhead_us = to;
        const TauOptimum opt = optimal_tau(p);
        const double grid = grid_argmin(
            [&](double tau) {
                SensingParams q = p;
                q.tau_us = tau;
                return ramsey_sensitivity(q);
            },
            1e-3, 50.0, 200001);
        CHECK(opt.tau_us == doctest::Approx(grid).epsilon(1e-4));
        CHECK(opt.tau_us > prev);
        prev = opt.tau_us;
    }
}

TEST_CASE("without dephasing the optimum is pinned to the domain edge") {
    SensingParams p = unit_params();
    CHECK_THROWS_AS(optimal_tau(p), ValidationError);
    const TauOptimum opt = optimal_tau(p, 100.0);
    CHECK(opt.at_boundary);
    CHECK(opt.tau_us == doctest::Approx(100.0).epsilon(1e-6));
}

TEST_CASE("optimal tau is invariant under scaling the sensor count") {
    SensingParams p = unit_params();
    p.t2_star = DephasingTime::from_us(5.0);
    p.t_overhead_us = 20.0;
    p.p = 1.7;
    const double ref = optimal_tau(p).tau_us;
    for (double k : {1e-3, 0.5, 7.0, 1e6}) {
        SensingParams q = p;
        q.n_sensors = k;
        CHECK(optimal_tau(q).tau_us == doctest::Approx(ref).epsilon(1e-6));
    }
}

TEST_CASE("simplified metric ratio between 14 and 0.8 ppm") {
    MetricConfig cfg;
    cfg.t_overhead_us = 10.0;
    const double r = simplified_metric(Concentration(14.0), cfg) / simplified_metric(Concentration(0.8), cfg);
    // Independent evaluation of the closed form.
    const auto oracle = [](double n) {
        const double t2 = 1.0 / (0.101 * n + 1e-4 * 50.0);
        return std::sqrt((t2 + 10.0) / (n * t2 * t2));
    };
    CHECK(r == doctest::Approx(oracle(14.0) / oracle(0.8)).epsilon(1e-12));
    CHECK(r == doctest::Approx(2.78).epsilon(0.005));
}

TEST_CASE("simplified metric plateaus without overhead and ratios ignore normalization") {
    MetricConfig cfg;
    cfg.t_overhead_us = 0.0;
    double prev = kInf;
    for (double n = 0.01; n < 100.0; n *= 1.2) {
        const double m = simplified_metric(Concentration(n), cfg);
        CHECK(m <= prev);
        prev = m;
    }
    // The duty factor is exactly 1 at t_O = 0: metric = 1/sqrt(N T2).
    const double t2 = metric_t2_star_us(Concentration(2.0), cfg);
    CHECK(simplified_metric(Concentration(2.0), cfg) == doctest::Approx(1.0 / std::sqrt(2.0 * t2)).epsilon(1e-14));
}

TEST_CASE("optimal nitrogen matches the closed-form stationary point") {
    MetricConfig cfg;
    const double a = 0.101, b = 1e-4 * 50.0;
    for (double to : {1.0, 10.0, 100.0, 1e4}) {
        const double expect = std::sqrt(b / (to * a * a) + b * b / (a * a));
        const NitrogenOptimum opt = optimal_nitrogen(to, cfg);
        CHECK(opt.interior);
        CHECK(opt.ns0.ppm() == doctest::Approx(expect).epsilon(2e-4));
    }
}

TEST_CASE("optimal nitrogen at 10 us agrees with a 1e4-point grid") {
    MetricConfig cfg;
    cfg.t_overhead_us = 10.0;
    const double grid = grid_argmin([&](double n) { return simplified_metric(Concentration(n), cfg); }, 0.01, 100.0,
                                    10000);
    const double opt = optimal_nitrogen(10.0, cfg).ns0.ppm();
    CHECK(opt == doctest::Approx(grid).epsilon(1e-3));
    CHECK(opt == doctest::Approx(0.23).epsilon(0.02));
}

TEST_CASE("optimal nitrogen limits") {
    MetricConfig cfg;
    CHECK(optimal_nitrogen(1e6, cfg).ns0.ppm() == doctest::Approx(0.0495).epsilon(0.02));
    const NitrogenOptimum zero = optimal_nitrogen(0.0, cfg);
    CHECK_FALSE(zero.interior);
    CHECK(zero.ns0.ppm() == doctest::Approx(kNitrogenSearchHighPpm).epsilon(1e-3));
}

TEST_CASE("optimal nitrogen never increases with overhead") {
    MetricConfig cfg;
    double prev = kInf;
    for (double to = 0.1; to <= 1e5; to *= 3.0) {
        const double n = optimal_nitrogen(to, cfg).ns0.ppm();
        CHECK(n <= prev * (1.0 + 1e-4));
        prev = n;
    }
}

TEST_CASE("intensity table validation") {
    const auto row = [](double i) {
        IntensityRow r;
        r.intensity = Intensity(i);
        r.contrast = 0.03;
        r.psi = 0.5;
        r.t_overhead_us = 10;
        return r;
    };
    CHECK_THROWS_WITH_AS(IntensityTable({row(0.1), row(0.1)}), doctest::Contains("duplicate intensity (row 2)"),
                         ValidationError);
    CHECK_THROWS_WITH_AS(IntensityTable({row(0.1), row(0.01)}), doctest::Contains("non-monotone"), ValidationError);
    auto bad = row(0.1);
    bad.psi = 1.2;
    CHECK_THROWS_AS(IntensityTable({bad}), ValidationError);
    const IntensityTable t({row(0.01), row(1.0)});
    CHECK_THROWS_WITH_AS((void)t.at(Intensity(2.0)), doctest::Contains("no extrapolation"), ValidationError);
}

TEST_CASE("table interpolation is linear in log intensity") {
    IntensityRow a, b;
    a.intensity = Intensity(0.01);
    a.contrast = 0.02;
    a.psi = 0.2;
    a.t_overhead_us = 100;
    b.intensity = Intensity(1.0);
    b.contrast = 0.04;
    b.psi = 0.6;
    b.t_overhead_us = 10;
    const IntensityTable t({a, b});
    const auto mid = t.at(Intensity(0.1));
    CHECK(mid.contrast == doctest::Approx(0.03));
    CHECK(mid.psi == doctest::Approx(0.4));
    CHECK(mid.t_overhead_us == doctest::Approx(55.0));
}

TEST_CASE("photon model is anchored at 30 kcps at 1 mW/um^2") {
    PhotonModel m;
    CHECK(m.rate_kcps(Intensity(1.0)) == doctest::Approx(30.0));
    CHECK(m.rate_kcps(Intensity(0.0)) == 0.0);
    CHECK(m.rate_kcps(Intensity(1e6)) == doctest::Approx(30.0 * 3.0).epsilon(1e-5));
}

TEST_CASE("volume-normalized sensitivity equals a hand-composed evaluation") {
    SensorMaterial mat;
    mat.sample = {Concentration(0.8), Concentration(108), Concentration(0.39), 0.2, 1};
    IntensityRow r;
    r.intensity = Intensity(0.1);
    r.contrast = 0.03;
    r.psi = 0.8;
    r.t_overhead_us = 6.0;
    const IntensityTable table({r});
    EvaluationOptions opts;
    const VolumeSensitivity v = volume_normalized_sensitivity(mat, table, Intensity(0.1), Protocol::SQ, opts);

    // Hand composition of the same row.
    const double s = 0.1 / 2.0, s_ref = 1.0 / 2.0;
    const double rate = 30.0 * (s / (1 + s)) / (s_ref / (1 + s_ref));
    const double n_avg = rate * 1e-3 * 6.0;
    const double n = 0.39 * 0.8 / 4.0;
    const double ns0_post = 0.8 - 0.39 * 1.2;
    const double t2 = 1.0 / (0.101 * ns0_post + 1e-4 * 108 + 0.5 * 0.165 * 0.39 * 0.2 * 0.75);
    const double tau = v.tau_us;
    const double eta = 1.0 / 2.8024 / std::sqrt(n * tau) * std::exp(tau / t2) *
                       std::sqrt(1.0 + 1.0 / (0.03 * 0.03 * n_avg)) * std::sqrt((tau + 6.0) / tau);
    CHECK(v.n_avg == doctest::Approx(n_avg).epsilon(1e-12));
    CHECK(v.t2_star_us == doctest::Approx(t2).epsilon(1e-12));
    CHECK(v.eta == doctest::Approx(eta).epsilon(1e-12));
}

TEST_CASE("readout window precedence: row, then model, then overhead") {
    SensorMaterial mat = fixtures::low_n_material();
    IntensityRow r;
    r.intensity = Intensity(1.0);
    r.contrast = 0.03;
    r.psi = 0.5;
    r.t_overhead_us = 20.0;
    EvaluationOptions opts;
    CHECK(volume_normalized_sensitivity(mat, IntensityTable({r}), r.intensity, Protocol::SQ, opts).n_avg ==
          doctest::Approx(30.0 * 1e-3 * 20.0));
    opts.photon.readout_window_us = 2.0;
    CHECK(volume_normalized_sensitivity(mat, IntensityTable({r}), r.intensity, Protocol::SQ, opts).n_avg ==
          doctest::Approx(30.0 * 1e-3 * 2.0));
    r.readout_us = 0.5;
    r.photon_rate_kcps = 100.0;
    CHECK(volume_normalized_sensitivity(mat, IntensityTable({r}), r.intensity, Protocol::SQ, opts).n_avg ==
          doctest::Approx(100.0 * 1e-3 * 0.5));
}

TEST_CASE("sensitivity ratio identities") {
    const auto a = fixtures::low_n_material();
    const auto b = fixtures::high_n_material();
    const auto ta = fixtures::low_n_table();
    const auto tb = fixtures::high_n_table();
    EvaluationOptions opts;
    for (double i : {1e-3, 0.03, 1.0, 10.0}) {
        CHECK(sensitivity_ratio(a, ta, a, ta, Intensity(i), Protocol::SQ, opts) == 1.0);
        const double ab = sensitivity_ratio(a, ta, b, tb, Intensity(i), Protocol::SQ, opts);
        const double ba = sensitivity_ratio(b, tb, a, ta, Intensity(i), Protocol::SQ, opts);
        CHECK(ab * ba == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("sensitivity ratio degenerates to the simplified metric ratio") {
    // psi = 1, identical contrast and readout, tau = T2*, NV-NV term off and
    // [NV-] proportional to post-treatment nitrogen.
    BathCoefficients bath;
    bath.zeta_nonpar = 0.0;
    const auto material = [&](double ns0_post) {
        SensorMaterial m;
        const double nv = 0.01 * ns0_post;
        m.sample = {Concentration(ns0_post + 2.0 * nv), Concentration(50.0), Concentration(nv), 1.0, 1};
        m.bath = bath;
        return m;
    };
    IntensityRow r;
    r.intensity = Intensity(0.5);
    r.contrast = 0.05;
    r.psi = 1.0;
    r.t_overhead_us = 10.0;
    const IntensityTable t({r});
    EvaluationOptions opts;
    opts.tau_policy = TauPolicy::AtT2Star;
    MetricConfig cfg;
    cfg.t_overhead_us = 10.0;
    cfg.bath = bath;
    for (auto [na, nb] : {std::pair{14.0, 0.8}, std::pair{0.3, 3.0}, std::pair{50.0, 0.05}}) {
        const double vol = sensitivity_ratio(material(na), t, material(nb), t, r.intensity, Protocol::SQ, opts);
        const double metric = simplified_metric(Concentration(na), cfg) / simplified_metric(Concentration(nb), cfg);
        CHECK(vol == doctest::Approx(metric).epsilon(1e-9));
    }
}

TEST_CASE("double quantum wins when overhead dominates and strain is absent") {
    SensorMaterial m = fixtures::low_n_material();
    IntensityRow r;
    r.intensity = Intensity(1.0);
    r.contrast = 0.03;
    r.psi = 0.5;
    r.t_overhead_us = 1000.0;
    const IntensityTable t({r});
    EvaluationOptions opts;
    const double sq = volume_normalized_sensitivity(m, t, r.intensity, Protocol::SQ, opts).eta;
    const double dq = volume_normalized_sensitivity(m, t, r.intensity, Protocol::DQ, opts).eta;
    CHECK(dq / sq < 1.0);
}

TEST_CASE("shaped tables cross over with low nitrogen favored at low intensity") {
    const auto a = fixtures::high_n_material();
    const auto b = fixtures::low_n_material();
    const auto ta = fixtures::high_n_table();
    const auto tb = fixtures::low_n_table();
    EvaluationOptions opts;
    CHECK(sensitivity_ratio(a, ta, b, tb, Intensity(1e-3), Protocol::SQ, opts) > 1.0);
    CHECK(sensitivity_ratio(a, ta, b, tb, Intensity(10.0), Protocol::SQ, opts) < 1.0);
}

}
