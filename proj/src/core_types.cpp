#include "nvsk/core_types.hpp"
#include "nvsk/numfmt.hpp"

#include <string>

namespace nvsk {

namespace {

std::string num(double v) { return format_g9(v); }

}  // namespace

Concentration::Concentration(double ppm) : ppm_(ppm) {
    if (!std::isfinite(ppm) || ppm < 0.0)
        throw ValidationError("concentration must be finite and >= 0 ppm, got " + num(ppm));
}

double Concentration::per_cm3() const noexcept { return ppm_ * kCarbonSitesPerPpmCm3; }

Concentration Concentration::from_per_cm3(double density) {
    return Concentration(density / kCarbonSitesPerPpmCm3);
}

Intensity::Intensity(double mw_per_um2) : value_(mw_per_um2) {
    if (!std::isfinite(mw_per_um2) || mw_per_um2 < 0.0)
        throw ValidationError("intensity must be finite and >= 0 mW/um^2, got " + num(mw_per_um2));
}

const char* to_string(GammaConvention c) noexcept {
    return c == GammaConvention::Cyclic ? "cyclic" : "angular";
}

GammaConvention gamma_convention_from_string(const std::string& s) {
    if (s == "cyclic") return GammaConvention::Cyclic;
    if (s == "angular") return GammaConvention::Angular;
    throw ValidationError("gamma convention must be 'cyclic' or 'angular', got '" + s + "'");
}

void PhysicalConstants::validate() const {
    if (!std::isfinite(gamma_e_mhz_per_g) || gamma_e_mhz_per_g <= 0.0)
        throw ValidationError("gamma_e must be > 0, got " + num(gamma_e_mhz_per_g));
}

DephasingTime DephasingTime::from_rate(double rate_per_us) {
    if (!std::isfinite(rate_per_us) || rate_per_us < 0.0)
        throw ValidationError("dephasing rate must be finite and >= 0, got " + num(rate_per_us));
    return DephasingTime(rate_per_us);
}

DephasingTime DephasingTime::from_us(double t_us) {
    if (std::isinf(t_us) && t_us > 0.0) return unbounded();
    if (!(t_us > 0.0) || !std::isfinite(t_us))
        throw ValidationError("dephasing time must be > 0, got " + num(t_us));
    return DephasingTime(1.0 / t_us);
}

double DephasingTime::us() const {
    if (is_unbounded()) throw ComputationError("dephasing time is unbounded (zero total rate)");
    return 1.0 / rate_;
}

std::optional<double> DephasingTime::maybe_us() const noexcept {
    if (is_unbounded()) return std::nullopt;
    return 1.0 / rate_;
}

DiamondSample validate_sample(const DiamondSample& sample) {
    const double psi = sample.charge_fraction_psi;
    if (!std::isfinite(psi) || psi < 0.0 || psi > 1.0)
        throw ValidationError("psi out of [0,1]: " + num(psi));
    if (sample.nv_total > sample.ns0_as_grown)
        throw ValidationError("NV exceeds nitrogen: nv_total " + num(sample.nv_total.ppm()) +
                              " ppm > ns0_as_grown " + num(sample.ns0_as_grown.ppm()) + " ppm");
    if (sample.n_orientations_sensing < 1 || sample.n_orientations_sensing > 4)
        throw ValidationError("n_orientations_sensing must be in 1..4, got " +
                              std::to_string(sample.n_orientations_sensing));
    return sample;
}

}  // namespace nvsk
