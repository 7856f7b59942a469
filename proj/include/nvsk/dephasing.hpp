#pragma once

// T2* budgets: linear spin-bath model, strain broadening, harmonic
// combination of dephasing rates and the double-quantum variant.

#include <span>

#include "nvsk/core_types.hpp"

namespace nvsk {

/// Linear spin-bath scaling constants. All rates are stored per us.
struct BathCoefficients {
    double a_ns0_per_us_ppm = 0.101;
    double a_c13_per_us_ppm = 0.100e-3;  // 0.100 per ms per ppm
    double a_nv_par_per_us_ppm = 0.247;
    double a_nv_nonpar_per_us_ppm = 0.165;
    double zeta_par = 0.0;
    double zeta_nonpar = 0.5;

    void set_a_c13_per_ms_ppm(double v) { a_c13_per_us_ppm = v * 1e-3; }
    [[nodiscard]] double a_c13_per_ms_ppm() const { return a_c13_per_us_ppm * 1e3; }

    void validate() const;
};

/// Per-mechanism dephasing rates (1/us). Total T2* is the reciprocal of the
/// rate sum.
struct DephasingBudget {
    double rate_ns0 = 0.0;
    double rate_c13 = 0.0;
    double rate_nv_nv = 0.0;
    double rate_strain = 0.0;
    double rate_bias = 0.0;

    [[nodiscard]] double bath_rate() const noexcept { return rate_ns0 + rate_c13 + rate_nv_nv; }
    [[nodiscard]] double total_rate() const noexcept {
        return bath_rate() + rate_strain + rate_bias;
    }
    [[nodiscard]] DephasingTime t2_star_total() const { return DephasingTime::from_rate(total_rate()); }
    [[nodiscard]] DephasingTime t2_star_bath() const { return DephasingTime::from_rate(bath_rate()); }
};

/// Post-treatment substitutional nitrogen. Each NV0 consumes one nitrogen
/// atom and each NV- two: ns0_post = ns0_as_grown - nv_total * (1 + psi).
/// Throws ValidationError("nitrogen over-consumed") if the result is negative.
Concentration nitrogen_bookkeeping(Concentration ns0_as_grown, Concentration nv_total, double psi);

/// Bath rates from explicit post-treatment concentrations. [NV-] is split
/// between the sensing orientation(s) and the rest as n/4 : (4-n)/4.
DephasingBudget spin_bath_rates(Concentration ns0_post, Concentration c13, Concentration nv_minus,
                                const BathCoefficients& coeffs, int n_orientations_sensing = 1);

/// Bath budget for a sample: validates it, applies nitrogen bookkeeping and
/// evaluates the linear bath model with [NV-] = nv_total * psi.
DephasingBudget spin_bath_budget(const DiamondSample& sample, const BathCoefficients& coeffs);

struct StrainDephasing {
    double rate_per_us = 0.0;
    DephasingTime t2_star = DephasingTime::unbounded();
};

/// T2*_strain = 1 / (pi * FWHM). delta_khz >= 0; zero maps to no limit.
StrainDephasing strain_rate_from_fwhm(double delta_khz);

/// Harmonic combination of independent rates (1/us). Throws
/// ValidationError on a negative or non-finite rate.
DephasingTime combine_rates(std::span<const double> rates_per_us);
DephasingTime combine_times(std::span<const DephasingTime> times);

/// Adds strain and bias terms to a bath budget.
DephasingBudget combine_budget(const DephasingBudget& bath, double strain_rate_per_us,
                               double bias_rate_per_us = 0.0);

/// Double-quantum T2*: twice the bath rate, strain and bias terms dropped.
DephasingTime dq_t2star(const DephasingBudget& sq_budget);

}  // namespace nvsk
