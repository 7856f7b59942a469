#include "nvsk/dephasing.hpp"
#include "nvsk/numfmt.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace nvsk {

namespace {

std::string num(double v) { return format_g9(v); }

void require_rate(double r, const char* what) {
    if (!std::isfinite(r) || r < 0.0)
        throw ValidationError(std::string(what) + " must be finite and >= 0, got " + num(r));
}

void require_unit_interval(double v, const char* what) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0)
        throw ValidationError(std::string(what) + " out of [0,1]: " + num(v));
}

}  // namespace

void BathCoefficients::validate() const {
    require_rate(a_ns0_per_us_ppm, "a_ns0");
    require_rate(a_c13_per_us_ppm, "a_c13");
    require_rate(a_nv_par_per_us_ppm, "a_nv_par");
    require_rate(a_nv_nonpar_per_us_ppm, "a_nv_nonpar");
    require_unit_interval(zeta_par, "zeta_par");
    require_unit_interval(zeta_nonpar, "zeta_nonpar");
}

Concentration nitrogen_bookkeeping(Concentration ns0_as_grown, Concentration nv_total, double psi) {
    require_unit_interval(psi, "psi");
    const double consumed = nv_total.ppm() * (1.0 + psi);
    const double post = ns0_as_grown.ppm() - consumed;
    if (post < 0.0)
        throw ValidationError("nitrogen over-consumed: " + num(consumed) + " ppm needed, " +
                              num(ns0_as_grown.ppm()) + " ppm available");
    return Concentration(post);
}

DephasingBudget spin_bath_rates(Concentration ns0_post, Concentration c13, Concentration nv_minus,
                                const BathCoefficients& coeffs, int n_orientations_sensing) {
    coeffs.validate();
    if (n_orientations_sensing < 1 || n_orientations_sensing > 4)
        throw ValidationError("n_orientations_sensing must be in 1..4");
    const double par_fraction = n_orientations_sensing / 4.0;
    const double nv_par = nv_minus.ppm() * par_fraction;
    const double nv_nonpar = nv_minus.ppm() - nv_par;

    DephasingBudget b;
    b.rate_ns0 = coeffs.a_ns0_per_us_ppm * ns0_post.ppm();
    b.rate_c13 = coeffs.a_c13_per_us_ppm * c13.ppm();
    b.rate_nv_nv = coeffs.zeta_par * coeffs.a_nv_par_per_us_ppm * nv_par +
                   coeffs.zeta_nonpar * coeffs.a_nv_nonpar_per_us_ppm * nv_nonpar;
    return b;
}

DephasingBudget spin_bath_budget(const DiamondSample& sample, const BathCoefficients& coeffs) {
    const DiamondSample s = validate_sample(sample);
    const Concentration ns0_post =
        nitrogen_bookkeeping(s.ns0_as_grown, s.nv_total, s.charge_fraction_psi);
    const Concentration nv_minus(s.nv_total.ppm() * s.charge_fraction_psi);
    return spin_bath_rates(ns0_post, s.c13, nv_minus, coeffs, s.n_orientations_sensing);
}

StrainDephasing strain_rate_from_fwhm(double delta_khz) {
    if (!std::isfinite(delta_khz) || delta_khz < 0.0)
        throw ValidationError("strain FWHM must be finite and >= 0 kHz, got " + num(delta_khz));
    const double rate = std::numbers::pi * delta_khz * 1e-3;  // kHz -> 1/us
    return {rate, DephasingTime::from_rate(rate)};
}

DephasingTime combine_rates(std::span<const double> rates_per_us) {
    double sum = 0.0;
    for (double r : rates_per_us) {
        require_rate(r, "dephasing rate");
        sum += r;
    }
    return DephasingTime::from_rate(sum);
}

DephasingTime combine_times(std::span<const DephasingTime> times) {
    double sum = 0.0;
    for (const auto& t : times) sum += t.rate_per_us();
    return DephasingTime::from_rate(sum);
}

DephasingBudget combine_budget(const DephasingBudget& bath, double strain_rate_per_us,
                               double bias_rate_per_us) {
    require_rate(bath.rate_ns0, "N0s rate");
    require_rate(bath.rate_c13, "13C rate");
    require_rate(bath.rate_nv_nv, "NV-NV rate");
    require_rate(strain_rate_per_us, "strain rate");
    require_rate(bias_rate_per_us, "bias rate");
    DephasingBudget out = bath;
    out.rate_strain = strain_rate_per_us;
    out.rate_bias = bias_rate_per_us;
    return out;
}

DephasingTime dq_t2star(const DephasingBudget& sq_budget) {
    return DephasingTime::from_rate(2.0 * sq_budget.bath_rate());
}

}  // namespace nvsk
