#pragma once

// NV charge state from PL spectra: non-negative two-component decomposition
// into NV- and NV0 basis spectra, then a brightness correction.

#include <optional>
#include <vector>

namespace nvsk {

struct Spectrum {
    std::vector<double> wavelength_nm;  // strictly increasing
    std::vector<double> counts;         // finite, >= 0
    double longpass_nm = 550.0;

    void validate() const;
    /// Linear interpolation; x must lie inside the grid.
    [[nodiscard]] double at(double wavelength_nm) const;
};

inline constexpr double kDefaultBrightnessRatio = 2.5;   // NV- over NV0 PL per center
inline constexpr double kValidatedIntensityLimit = 0.1;  // mW/um^2

struct DecomposeOptions {
    double brightness_ratio = kDefaultBrightnessRatio;
    std::optional<double> intensity_mw_um2;  // sets the validated-regime flag
    double max_condition_number = 1e8;
};

struct ChargeDecomposition {
    double w_minus = 0.0;
    double w_zero = 0.0;
    double psi = 0.0;
    double residual_rms = 0.0;
    double relative_residual = 0.0;  // |r| / |measured|
    double brightness_ratio = kDefaultBrightnessRatio;
    double condition_number = 0.0;
    std::vector<double> grid_nm;     // common grid the fit ran on
    bool outside_validated_regime = false;
};

/// psi = w_minus / (w_minus + ratio * w_zero).
double charge_fraction(double w_minus, double w_zero, double brightness_ratio = kDefaultBrightnessRatio);

/// The common grid: points of the coarsest input spectrum that lie in the
/// overlap of all three supports and above the measured long-pass edge.
std::vector<double> common_grid(const Spectrum& measured, const Spectrum& basis_minus,
                                const Spectrum& basis_zero);

/// measured ~ w_minus * basis_minus + w_zero * basis_zero with both weights
/// >= 0. Throws ValidationError on non-overlapping grids and
/// ComputationError when the bases are collinear.
ChargeDecomposition decompose(const Spectrum& measured, const Spectrum& basis_minus,
                              const Spectrum& basis_zero, const DecomposeOptions& options = {});

}  // namespace nvsk
