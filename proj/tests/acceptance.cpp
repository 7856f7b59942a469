// Acceptance suite: one line per criterion, non-zero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "nvsk/charge.hpp"
#include "nvsk/dephasing.hpp"
#include "nvsk/numfmt.hpp"
#include "nvsk/photophysics.hpp"
#include "nvsk/butterworth.hpp"
#include "nvsk/ramsey.hpp"
#include "nvsk/sensitivity.hpp"
#include "nvsk/strainmap.hpp"

using namespace nvsk;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double limit_ms;
    std::function<Outcome()> check;
};

std::string g(double v) { return format_g9(v); }

bool within(double v, double lo, double hi) { return v >= lo && v <= hi; }

DiamondSample reference_sample() {
    return {Concentration(0.8), Concentration(108), Concentration(0.39), 0.2, 1};
}

Outcome spin_bath_limit() {
    const DephasingBudget b = spin_bath_budget(reference_sample(), BathCoefficients{});
    const double t2 = b.t2_star_bath().us();
    return {within(t2, 19.0, 21.0), "T2*bath = " + g(t2) + " us, want [19, 21]"};
}

Outcome nitrogen_bookkeeping_check() {
    const double post = nitrogen_bookkeeping(Concentration(0.8), Concentration(0.39), 0.2).ppm();
    return {std::abs(post - 0.332) < 1e-12 && std::abs(post - 0.35) <= 0.03,
            "ns0_post = " + g(post) + " ppm, want 0.332 and |x - 0.35| <= 0.03"};
}

Outcome metric_ratio() {
    MetricConfig cfg;
    cfg.t_overhead_us = 10.0;
    const double ratio = simplified_metric(Concentration(14.0), cfg) / simplified_metric(Concentration(0.8), cfg);
    // Oracle: the same quantity written out from the bath constants.
    const auto oracle = [](double n) {
        const double t2 = 1.0 / (0.101 * n + 1e-4 * 50.0);
        return std::sqrt((t2 + 10.0) / (n * t2 * t2));
    };
    const double oracle_ratio = oracle(14.0) / oracle(0.8);
    const double rel = std::abs(ratio / oracle_ratio - 1.0);
    return {within(ratio, 2.5, 3.2) && rel <= 1e-6,
            "ratio = " + g(ratio) + " in [2.5, 3.2], oracle rel. diff " + g(rel)};
}

Outcome nitrogen_asymptote() {
    MetricConfig cfg;
    const double n = optimal_nitrogen(1e6, cfg).ns0.ppm();
    const double target = 1e-4 * 50.0 / 0.101;
    const double rel = std::abs(n / target - 1.0);
    return {rel <= 0.02, "N* = " + g(n) + " ppm vs " + g(target) + " (rel. " + g(rel) + ")"};
}

Outcome strain_conversion() {
    const double a = strain_rate_from_fwhm(31.0).t2_star.us();
    const double b = strain_rate_from_fwhm(15.0).t2_star.us();
    return {std::abs(a - 10.27) < 0.005 && std::abs(b - 21.2) < 0.05,
            "31 kHz -> " + g(a) + " us, 15 kHz -> " + g(b) + " us"};
}

Outcome scaling_exponent() {
    SyntheticStrainOptions o;
    o.rows = o.cols = 1000;
    o.pixel_pitch_um = 3.0;
    o.scale_khz = 15.5;
    o.seed = 1;
    const StrainMap map = synthesize_strain_map(o);
    std::vector<double> sizes;
    for (int i = 0; i < 12; ++i) sizes.push_back(30.0 * std::pow(100.0, i / 11.0));
    const auto stats = partition_sweep(map, sizes);
    const ScalingResult r = scaling_metric(stats, 0.0);
    return {std::abs(r.exponent + 1.0) <= 0.05,
            "exponent = " + g(r.exponent) + " +- " + g(r.exponent_sigma) + ", want -1 +- 0.05"};
}

Outcome photophysics_structure() {
    const FiveLevelParams p;
    double worst = 0.0;
    for (double s : {0.0, 0.01, 0.1, 1.0, 10.0, 100.0}) {
        evolve(p, s, StateVector::ground_ms1(), 100.0, max_output_step(p, s),
               [&](std::size_t, const StateVector& st) { worst = std::max(worst, std::abs(st.sum() - 1.0)); });
    }
    std::vector<Intensity> grid;
    for (int i = 0; i < 40; ++i) grid.emplace_back(std::pow(10.0, -3.0 + 4.0 * i / 39.0));
    const auto band = ti_band(p, grid);
    bool monotone = true, ordered = true;
    for (std::size_t i = 0; i < band.size(); ++i) {
        ordered = ordered && band[i].lower_us <= band[i].upper_us;
        if (i > 0)
            monotone = monotone && band[i].lower_us <= band[i - 1].lower_us &&
                       band[i].upper_us <= band[i - 1].upper_us;
    }
    return {worst < 1e-9 && monotone && ordered,
            "max |sum - 1| = " + g(worst) + ", t_I monotone " + (monotone ? "yes" : "no") + ", band ordered " +
                (ordered ? "yes" : "no") + " (t_I " + g(band.front().lower_us) + " -> " + g(band.back().lower_us) +
                " us)"};
}

Outcome filter_response() {
    const ButterworthLowpass f(kDefaultFilterOrder, kDefaultCutoffMhz, 100.0);
    const double dc = f.magnitude(0.0), at_cut = f.magnitude(kDefaultCutoffMhz);
    const double rel = std::abs(at_cut * std::sqrt(2.0) - 1.0);
    return {std::abs(dc - 1.0) <= 1e-6 && rel <= 0.02, "|H(0)| = " + g(dc) + ", |H(fc)| = " + g(at_cut)};
}

Outcome ramsey_round_trip() {
    std::string detail;
    bool ok = true;
    for (double t2 : {17.7, 8.6}) {
        RamseyModel m;
        m.t2_star_us = t2;
        m.detuning_mhz = 0.4;
        m.amplitude = 1.0;
        m.baseline = 0.5;
        const auto tau = uniform_tau_grid(4.0 * t2, 0.05);
        const double clean = fit_ramsey(tau, synthesize(m, tau, 0.0, 1)).t2_star_us;
        const RamseyFitResult noisy = fit_ramsey(tau, synthesize(m, tau, 0.02, 1));
        const double rel_clean = std::abs(clean / t2 - 1.0), rel_noisy = std::abs(noisy.t2_star_us / t2 - 1.0);
        ok = ok && rel_clean <= 1e-6 && rel_noisy <= 0.05;
        detail += (detail.empty() ? "" : "; ") + g(t2) + " us -> " +
                  parenthesis_notation(noisy.t2_star_us, noisy.t2_star_sigma) + " (noise-free rel. " +
                  g(rel_clean) + ")";
    }
    return {ok, detail};
}

Outcome dq_model() {
    DephasingBudget sq;
    sq.rate_ns0 = 1.0 / 17.5;
    const double dq = dq_t2star(sq).us();
    return {std::abs(dq - 8.75) < 1e-12 && std::abs(dq / 8.6 - 1.0) <= 0.05, "DQ T2* = " + g(dq) + " us"};
}

Outcome optimal_tau_analytic() {
    SensingParams p;
    p.t2_star = DephasingTime::from_us(17.7);
    p.contrast = 0.03;
    p.n_avg = 0.1;
    const double tau = optimal_tau(p).tau_us;
    const double rel = std::abs(tau / (17.7 / 2.0) - 1.0);
    return {rel <= 1e-3, "tau* = " + g(tau) + " us vs T2*/2 = 8.85 (rel. " + g(rel) + ")"};
}

Outcome charge_fraction_check() {
    const double psi = charge_fraction(1.0, 1.0, 2.5);
    Spectrum minus, zero, measured;
    for (double x = 500.0; x <= 800.0; x += 1.0) {
        const double a = std::exp(-0.5 * std::pow((x - 700.0) / 45.0, 2));
        const double b = std::exp(-0.5 * std::pow((x - 620.0) / 35.0, 2));
        for (Spectrum* s : {&minus, &zero, &measured}) s->wavelength_nm.push_back(x);
        minus.counts.push_back(a);
        zero.counts.push_back(b);
        measured.counts.push_back(0.7 * a + 0.3 * b);
    }
    const ChargeDecomposition d = decompose(measured, minus, zero);
    return {std::abs(psi - 0.2857142857) <= 1e-9 && d.relative_residual <= 1e-12,
            "psi = " + g(psi) + ", exact-mix relative residual " + g(d.relative_residual)};
}

Outcome volume_crossover() {
    const auto a = fixtures::high_n_material();
    const auto b = fixtures::low_n_material();
    const auto ta = fixtures::high_n_table();
    const auto tb = fixtures::low_n_table();
    const EvaluationOptions opts;
    double crossing = 0.0;
    bool low_favored_below = true;
    double prev_i = 0.0, prev_r = 0.0;
    for (int i = 0; i <= 160; ++i) {
        const double intensity = std::pow(10.0, -3.0 + 4.0 * i / 160.0);
        const double r = sensitivity_ratio(a, ta, b, tb, Intensity(intensity), Protocol::SQ, opts);
        if (i > 0 && prev_r > 1.0 && r <= 1.0 && crossing == 0.0) crossing = std::sqrt(prev_i * intensity);
        if (crossing == 0.0 && r <= 1.0) low_favored_below = false;
        prev_i = intensity;
        prev_r = r;
    }
    const bool ok = crossing > 0.0 && low_favored_below && prev_r < 1.0;
    return {ok, "eta_highN / eta_lowN crosses 1 near " + g(crossing) + " mW/um^2, low-N favored below"};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "spin-bath limit", 1.0, spin_bath_limit},
        {2, "nitrogen bookkeeping", 1.0, nitrogen_bookkeeping_check},
        {3, "simplified metric ratio", 1000.0, metric_ratio},
        {4, "optimal-nitrogen asymptote", 1000.0, nitrogen_asymptote},
        {5, "strain conversion", 1.0, strain_conversion},
        {6, "scaling exponent", 30000.0, scaling_exponent},
        {7, "photophysics conservation and t_I band", 60000.0, photophysics_structure},
        {8, "Butterworth response", 1000.0, filter_response},
        {9, "Ramsey round trip", 10000.0, ramsey_round_trip},
        {10, "double-quantum T2*", 1.0, dq_model},
        {11, "optimal tau analytic", 10.0, optimal_tau_analytic},
        {12, "charge fraction", 10.0, charge_fraction_check},
        {13, "volume-normalized crossover", 5000.0, volume_crossover},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Outcome out;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            out = c.check();
        } catch (const std::exception& e) {
            out = {false, std::string("threw: ") + e.what()};
        }
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        const bool pass = out.pass && ms < c.limit_ms;
        if (!pass) ++failed;
        std::printf("%s %2d %-40s %s [%.3g ms, limit %g ms]\n", pass ? "PASS" : "FAIL", c.id, c.name,
                    out.detail.c_str(), ms, c.limit_ms);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
