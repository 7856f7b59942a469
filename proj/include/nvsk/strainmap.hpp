#pragma once

// Wide-field strain-shift maps: histogram linewidths and how they change
// when the map is cut into sensor-sized tiles.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nvsk {

/// Row-major grid of frequency shifts (kHz). An empty mask means every
/// pixel is valid; otherwise mask[i] != 0 marks pixel i valid.
struct StrainMap {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values_khz;
    std::vector<std::uint8_t> mask;
    double pixel_pitch_um = 1.0;
    int orientation = 1;  // NV axis label, 1..4

    void validate() const;
    [[nodiscard]] bool valid(std::size_t i) const noexcept { return mask.empty() || mask[i] != 0; }
    [[nodiscard]] std::size_t valid_count() const noexcept;
    /// Values of valid pixels, row-major.
    [[nodiscard]] std::vector<double> valid_values() const;
};

/// Subtracts the mean of the valid pixels. Masked pixels are left as is.
StrainMap mean_subtract(StrainMap map);

struct HistogramOptions {
    std::optional<double> bin_width_khz;  // Freedman-Diaconis when unset
    double range_iqr_multiple = 10.0;     // bins cover median +- this * IQR
    std::size_t max_bins = 20000;
};

struct Histogram {
    double lo = 0.0;     // left edge of bin 0
    double width = 0.0;  // bin width
    std::vector<double> counts;

    [[nodiscard]] double center(std::size_t i) const noexcept { return lo + (i + 0.5) * width; }
    [[nodiscard]] double hi() const noexcept { return lo + width * static_cast<double>(counts.size()); }
};

/// Counts values into fixed bins [lo + i w, lo + (i+1) w). Values outside
/// the bin range are dropped.
Histogram bin_values(std::span<const double> values, double lo, double width, std::size_t n_bins);

/// Histogram with data-driven edges (see HistogramOptions).
Histogram make_histogram(std::span<const double> values, const HistogramOptions& options = {});

struct LorentzianFit {
    double center_khz = 0.0;
    double fwhm_khz = 0.0;
    double amplitude = 0.0;  // A in A / ((f - f0)^2 + (fwhm/2)^2)
    double offset = 0.0;
    double residual_rms = 0.0;
    double bin_width_khz = 0.0;
    std::size_t n_pixels = 0;
};

inline constexpr std::size_t kMinFitPixels = 100;

/// Least-squares Lorentzian fit to the histogram of the given values,
/// initialized at center = median and FWHM = IQR.
LorentzianFit histogram_fwhm(std::span<const double> values, const HistogramOptions& options = {});
LorentzianFit histogram_fwhm(const StrainMap& map, const HistogramOptions& options = {});

struct Quantiles {
    double p10, p25, p75, p90;
};

struct PartitionStats {
    double sensor_size_um = 0.0;
    std::size_t tile_px = 0;
    std::vector<double> fwhm_khz;  // successful tiles, row-major tile order
    std::size_t n_tiles = 0;
    std::size_t n_failed = 0;
    double min_khz = 0.0;
    double median_khz = 0.0;
    std::optional<Quantiles> quantiles;  // only with more than 5 tiles
};

struct PartitionOptions {
    std::size_t tile_offset_px = 0;  // origin shift along both axes
    std::size_t min_tile_px = 4;
    HistogramOptions histogram;
};

/// Linear-interpolation sample quantile, q in [0, 1]. Input need not be
/// sorted.
double quantile(std::vector<double> values, double q);

/// Cuts the map into non-overlapping square tiles of side round(L / pitch)
/// anchored at the (offset) origin, drops partial edge tiles, mean-subtracts
/// and fits each tile. Tiles whose fit fails (too few valid pixels, under-
/// resolved linewidth) are counted in n_failed.
std::vector<PartitionStats> partition_sweep(const StrainMap& map, std::span<const double> sizes_um,
                                            const PartitionOptions& options = {});

struct ScalingPoint {
    double sensor_size_um;
    double median_fwhm_khz;
    double t2_eff_us;
    double metric;  // 1 / (T2*eff * L)
};

struct ScalingResult {
    std::vector<ScalingPoint> points;
    double exponent = 0.0;
    double exponent_sigma = 0.0;
    double log10_prefactor = 0.0;
};

/// Metric per size from the median linewidth combined with the other
/// dephasing rates (1/us), and a least-squares power law in log-log space.
ScalingResult scaling_metric(std::span<const PartitionStats> stats, double other_rate_per_us);

/// Straight-line least squares y = a + b x, with the standard error of b.
struct LineFit {
    double intercept, slope, slope_sigma;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

enum class SyntheticStrain { Stationary, TwoRegion, Gradient };

std::string to_string(SyntheticStrain m);
SyntheticStrain synthetic_strain_from_string(const std::string& s);

struct SyntheticStrainOptions {
    SyntheticStrain model = SyntheticStrain::Stationary;
    std::size_t rows = 1000;
    std::size_t cols = 1000;
    double pixel_pitch_um = 3.0;
    double scale_khz = 10.0;          // Cauchy scale (half width) of the background
    double high_scale_khz = 40.0;     // two-region: scale inside the strained patch
    double region_fraction = 0.25;    // two-region: patch side as a fraction of the map
    double gradient_khz_per_px = 1.0; // gradient: shift = g * (row + col)
    double mean_khz = 0.0;
    std::uint64_t seed = 1;
};

/// Seeded synthetic maps: i.i.d. Cauchy pixels, a Cauchy background with a
/// broader square patch in the top-left corner, or a linear ramp.
StrainMap synthesize_strain_map(const SyntheticStrainOptions& options);

}  // namespace nvsk
