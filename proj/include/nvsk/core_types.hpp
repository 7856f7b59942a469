#pragma once

// Shared value types, unit conventions and physical constants.
//
// Unit conventions used throughout the library:
//   time        microseconds (us)
//   frequency   MHz (strain shifts are carried in kHz and converted at use)
//   rate        1/us
//   intensity   mW/um^2
//   concentration  ppm of carbon sites

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace nvsk {

/// Input or invariant violation. CLI exit code 1.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A computation that could not produce a result (non-convergence,
/// undefined objective, ...). CLI exit code 2.
class ComputationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Concentration in ppm. Non-negative and finite.
class Concentration {
public:
    constexpr Concentration() = default;
    explicit Concentration(double ppm);

    [[nodiscard]] constexpr double ppm() const noexcept { return ppm_; }

    /// Number density in cm^-3 (1 ppm = 1.76e17 cm^-3 in diamond).
    [[nodiscard]] double per_cm3() const noexcept;
    static Concentration from_per_cm3(double density);

    friend constexpr bool operator==(Concentration, Concentration) = default;
    friend constexpr auto operator<=>(Concentration a, Concentration b) { return a.ppm_ <=> b.ppm_; }

private:
    double ppm_ = 0.0;
};

inline constexpr double kCarbonSitesPerPpmCm3 = 1.76e17;

/// Optical excitation intensity in mW/um^2. Non-negative and finite.
class Intensity {
public:
    constexpr Intensity() = default;
    explicit Intensity(double mw_per_um2);

    [[nodiscard]] constexpr double mw_per_um2() const noexcept { return value_; }

    friend constexpr bool operator==(Intensity, Intensity) = default;
    friend constexpr auto operator<=>(Intensity a, Intensity b) { return a.value_ <=> b.value_; }

private:
    double value_ = 0.0;
};

/// What the stored gyromagnetic ratio means. The sensitivity formula uses
/// the stored number as-is; the flag is carried into every output artifact.
enum class GammaConvention {
    Cyclic,  // value is gamma_e / 2pi (MHz/G)
    Angular  // value is gamma_e (rad MHz/G)
};

[[nodiscard]] const char* to_string(GammaConvention c) noexcept;
[[nodiscard]] GammaConvention gamma_convention_from_string(const std::string& s);

struct PhysicalConstants {
    double gamma_e_mhz_per_g = 2.8024;
    GammaConvention gamma_convention = GammaConvention::Cyclic;

    /// Throws ValidationError unless gamma_e > 0 and finite.
    void validate() const;
};

/// A dephasing time that may be unbounded (zero total rate). Stored as a
/// rate so harmonic sums stay well-defined.
class DephasingTime {
public:
    static DephasingTime from_rate(double rate_per_us);
    static DephasingTime from_us(double t_us);
    static constexpr DephasingTime unbounded() noexcept { return DephasingTime{}; }

    [[nodiscard]] constexpr bool is_unbounded() const noexcept { return rate_ == 0.0; }
    [[nodiscard]] constexpr double rate_per_us() const noexcept { return rate_; }
    /// Finite time in us; throws ComputationError if unbounded.
    [[nodiscard]] double us() const;
    /// Finite time or std::nullopt.
    [[nodiscard]] std::optional<double> maybe_us() const noexcept;

private:
    constexpr DephasingTime() = default;
    explicit constexpr DephasingTime(double rate) : rate_(rate) {}
    double rate_ = 0.0;
};

/// Material description of a diamond sample.
struct DiamondSample {
    Concentration ns0_as_grown;
    Concentration c13;
    Concentration nv_total;
    double charge_fraction_psi = 0.0;  // [NV-] / ([NV-] + [NV0])
    int n_orientations_sensing = 1;    // out of 4
};

/// Returns the sample unchanged if every invariant holds, otherwise throws
/// ValidationError naming the first violated invariant.
DiamondSample validate_sample(const DiamondSample& sample);

}  // namespace nvsk
