#include "nvsk/strainmap.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "nvsk/core_types.hpp"
#include "nvsk/dephasing.hpp"
#include "nvsk/levenberg_marquardt.hpp"
#include "nvsk/numfmt.hpp"
#include "nvsk/parallel.hpp"

namespace nvsk {

void StrainMap::validate() const {
    if (rows == 0 || cols == 0) throw ValidationError("strain map is empty");
    if (values_khz.size() != rows * cols)
        throw ValidationError("strain map has " + std::to_string(values_khz.size()) +
                              " values, expected rows * cols = " + std::to_string(rows * cols));
    if (!mask.empty() && mask.size() != values_khz.size())
        throw ValidationError("strain map mask size does not match the grid");
    if (!(pixel_pitch_um > 0.0) || !std::isfinite(pixel_pitch_um))
        throw ValidationError("pixel pitch must be > 0");
    if (orientation < 1 || orientation > 4) throw ValidationError("orientation must be an NV axis 1..4");
    std::size_t n_valid = 0;
    for (std::size_t i = 0; i < values_khz.size(); ++i) {
        if (!valid(i)) continue;
        if (!std::isfinite(values_khz[i]))
            throw ValidationError("non-finite strain value at row " + std::to_string(i / cols) +
                                  ", col " + std::to_string(i % cols));
        ++n_valid;
    }
    if (n_valid == 0) throw ValidationError("strain map is fully masked");
}

std::size_t StrainMap::valid_count() const noexcept {
    if (mask.empty()) return values_khz.size();
    return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](auto m) { return m != 0; }));
}

std::vector<double> StrainMap::valid_values() const {
    if (mask.empty()) return values_khz;
    std::vector<double> out;
    out.reserve(valid_count());
    for (std::size_t i = 0; i < values_khz.size(); ++i)
        if (mask[i] != 0) out.push_back(values_khz[i]);
    return out;
}

StrainMap mean_subtract(StrainMap map) {
    map.validate();
    // Two-pass mean keeps the residual mean at rounding level.
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < map.values_khz.size(); ++i)
        if (map.valid(i)) {
            sum += map.values_khz[i];
            ++n;
        }
    double mean = sum / static_cast<double>(n);
    double corr = 0.0;
    for (std::size_t i = 0; i < map.values_khz.size(); ++i)
        if (map.valid(i)) corr += map.values_khz[i] - mean;
    mean += corr / static_cast<double>(n);
    for (std::size_t i = 0; i < map.values_khz.size(); ++i)
        if (map.valid(i)) map.values_khz[i] -= mean;
    return map;
}

double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw ValidationError("quantile of an empty set");
    if (!(q >= 0.0 && q <= 1.0)) throw ValidationError("quantile level must be in [0, 1]");
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto k = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(k);
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
    const double lo = v[k];
    if (frac == 0.0 || k + 1 >= v.size()) return lo;
    const double hi = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(k) + 1, v.end());
    return lo + frac * (hi - lo);
}

Histogram bin_values(std::span<const double> values, double lo, double width, std::size_t n_bins) {
    if (!(width > 0.0) || n_bins == 0) throw ValidationError("histogram needs width > 0 and >= 1 bin");
    Histogram h{lo, width, std::vector<double>(n_bins, 0.0)};
    const double hi = h.hi();
    for (double v : values) {
        if (!(v >= lo) || !(v < hi)) continue;
        auto i = static_cast<std::size_t>((v - lo) / width);
        if (i >= n_bins) i = n_bins - 1;
        h.counts[i] += 1.0;
    }
    return h;
}

namespace {

struct Spread {
    double median, iqr, min, max;
};

Spread spread_of(std::span<const double> values) {
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const auto at = [&](double q) {
        const double pos = q * static_cast<double>(v.size() - 1);
        const auto k = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(k);
        return k + 1 < v.size() ? v[k] + frac * (v[k + 1] - v[k]) : v[k];
    };
    return {at(0.5), at(0.75) - at(0.25), v.front(), v.back()};
}

Histogram histogram_from_spread(std::span<const double> values, const Spread& s,
                                const HistogramOptions& options) {
    if (!(s.iqr > 0.0)) throw ValidationError("under-resolved linewidth: interquartile range is zero");
    double width;
    if (options.bin_width_khz) {
        width = *options.bin_width_khz;
        if (!(width > 0.0)) throw ValidationError("bin width must be > 0");
    } else {
        width = 2.0 * s.iqr / std::cbrt(static_cast<double>(values.size()));
    }
    const double lo = std::max(s.median - options.range_iqr_multiple * s.iqr, s.min);
    const double hi = std::min(s.median + options.range_iqr_multiple * s.iqr, s.max);
    auto n = static_cast<std::size_t>(std::ceil((hi - lo) / width));
    if (n == 0) n = 1;
    if (n > options.max_bins) {
        if (options.bin_width_khz)
            throw ValidationError("fixed bin width " + format_g9(width) + " kHz needs " +
                                  std::to_string(n) + " bins, above the limit of " +
                                  std::to_string(options.max_bins));
        n = options.max_bins;
        width = (hi - lo) / static_cast<double>(n);
    }
    // Nudge the top edge so that the maximum lands inside the last bin.
    Histogram h = bin_values(values, lo, width, n);
    if (hi >= h.hi()) {
        for (double v : values)
            if (v == hi) h.counts.back() += 1.0;
    }
    return h;
}

}  // namespace

Histogram make_histogram(std::span<const double> values, const HistogramOptions& options) {
    if (values.empty()) throw ValidationError("histogram of an empty set");
    return histogram_from_spread(values, spread_of(values), options);
}

LorentzianFit histogram_fwhm(std::span<const double> values, const HistogramOptions& options) {
    if (values.size() < kMinFitPixels)
        throw ValidationError("linewidth fit needs at least " + std::to_string(kMinFitPixels) +
                              " valid pixels, got " + std::to_string(values.size()));
    const Spread s = spread_of(values);
    const Histogram h = histogram_from_spread(values, s, options);
    if (h.counts.size() < 5)
        throw ValidationError("under-resolved linewidth: only " + std::to_string(h.counts.size()) +
                              " histogram bins");

    const auto m = static_cast<Eigen::Index>(h.counts.size());
    const ResidualFunction residuals = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r,
                                           Eigen::MatrixXd* jac) {
        const double a = x(0), f0 = x(1), half = 0.5 * x(2), off = x(3);
        for (Eigen::Index i = 0; i < m; ++i) {
            const double d = h.center(static_cast<std::size_t>(i)) - f0;
            const double den = d * d + half * half;
            r(i) = a / den + off - h.counts[static_cast<std::size_t>(i)];
            if (jac) {
                (*jac)(i, 0) = 1.0 / den;
                (*jac)(i, 1) = 2.0 * a * d / (den * den);
                (*jac)(i, 2) = -a * half / (den * den);
                (*jac)(i, 3) = 1.0;
            }
        }
    };
    const ParameterGuard guard = [](const Eigen::VectorXd& x) { return x(2) > 0.0 && x.allFinite(); };

    const double peak = *std::max_element(h.counts.begin(), h.counts.end());
    Eigen::VectorXd x0(4);
    x0 << peak * 0.25 * s.iqr * s.iqr, s.median, s.iqr, 0.0;
    const auto res = levenberg_marquardt(residuals, x0, static_cast<int>(m), {}, guard);
    if (!res.converged) throw ComputationError("Lorentzian fit did not converge: " + res.message);

    LorentzianFit fit;
    fit.amplitude = res.x(0);
    fit.center_khz = res.x(1);
    fit.fwhm_khz = res.x(2);
    fit.offset = res.x(3);
    fit.residual_rms = res.residual_rms;
    fit.bin_width_khz = h.width;
    fit.n_pixels = values.size();
    if (fit.fwhm_khz < h.width)
        throw ValidationError("under-resolved linewidth: fitted FWHM " + format_g9(fit.fwhm_khz) +
                              " kHz is below the bin width " + format_g9(h.width) + " kHz");
    return fit;
}

LorentzianFit histogram_fwhm(const StrainMap& map, const HistogramOptions& options) {
    map.validate();
    const std::vector<double> v = map.valid_values();
    return histogram_fwhm(std::span<const double>(v), options);
}

std::vector<PartitionStats> partition_sweep(const StrainMap& map, std::span<const double> sizes_um,
                                            const PartitionOptions& options) {
    map.validate();
    if (sizes_um.empty()) throw ValidationError("partition sweep needs at least one sensor size");
    const std::size_t off = options.tile_offset_px;
    if (off >= map.rows || off >= map.cols) throw ValidationError("tile offset exceeds the map");
    const std::size_t avail_r = map.rows - off, avail_c = map.cols - off;

    std::vector<PartitionStats> out;
    for (double size : sizes_um) {
        if (!(size > 0.0) || !std::isfinite(size)) throw ValidationError("sensor size must be > 0");
        const auto px = static_cast<std::size_t>(std::llround(size / map.pixel_pitch_um));
        if (px < options.min_tile_px)
            throw ValidationError("sensor size " + format_g9(size) + " um is " + std::to_string(px) +
                                  " px across, below the minimum of " +
                                  std::to_string(options.min_tile_px));
        if (px > avail_r || px > avail_c)
            throw ValidationError("sensor size " + format_g9(size) + " um exceeds the map extent");

        const std::size_t tr = avail_r / px, tc = avail_c / px;
        const std::size_t n_tiles = tr * tc;
        std::vector<std::optional<double>> fwhm(n_tiles);
        parallel_for(n_tiles, [&](std::size_t t) {
            const std::size_t r0 = off + (t / tc) * px, c0 = off + (t % tc) * px;
            std::vector<double> vals;
            vals.reserve(px * px);
            for (std::size_t r = r0; r < r0 + px; ++r)
                for (std::size_t c = c0; c < c0 + px; ++c) {
                    const std::size_t i = r * map.cols + c;
                    if (map.valid(i)) vals.push_back(map.values_khz[i]);
                }
            if (vals.size() < kMinFitPixels) return;
            double mean = 0.0;
            for (double v : vals) mean += v;
            mean /= static_cast<double>(vals.size());
            for (double& v : vals) v -= mean;
            try {
                fwhm[t] = histogram_fwhm(std::span<const double>(vals), options.histogram).fwhm_khz;
            } catch (const std::runtime_error&) {
                // Counted as a failed tile below.
            }
        });

        PartitionStats st;
        st.sensor_size_um = size;
        st.tile_px = px;
        st.n_tiles = n_tiles;
        for (const auto& f : fwhm) {
            if (f) st.fwhm_khz.push_back(*f);
            else ++st.n_failed;
        }
        if (st.fwhm_khz.empty())
            throw ComputationError("no tile of size " + format_g9(size) + " um (" + std::to_string(px) +
                                   " px) produced a linewidth fit; tiles need at least " +
                                   std::to_string(kMinFitPixels) + " valid pixels");
        st.min_khz = *std::min_element(st.fwhm_khz.begin(), st.fwhm_khz.end());
        st.median_khz = quantile(st.fwhm_khz, 0.5);
        if (st.fwhm_khz.size() > 5)
            st.quantiles = Quantiles{quantile(st.fwhm_khz, 0.10), quantile(st.fwhm_khz, 0.25),
                                     quantile(st.fwhm_khz, 0.75), quantile(st.fwhm_khz, 0.90)};
        out.push_back(std::move(st));
    }
    return out;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw ValidationError("line fit needs >= 2 paired points");
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw ValidationError("line fit needs at least two distinct x values");
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - intercept - slope * x[i];
        rss += e * e;
    }
    const double sigma = x.size() > 2 ? std::sqrt(rss / (n - 2.0) / sxx) : 0.0;
    return {intercept, slope, sigma};
}

ScalingResult scaling_metric(std::span<const PartitionStats> stats, double other_rate_per_us) {
    if (stats.size() < 3) throw ValidationError("scaling metric needs at least 3 sensor sizes");
    if (!(other_rate_per_us >= 0.0) || !std::isfinite(other_rate_per_us))
        throw ValidationError("other dephasing rate must be finite and >= 0");
    ScalingResult out;
    std::vector<double> lx, ly;
    for (const auto& s : stats) {
        const double rate = other_rate_per_us + strain_rate_from_fwhm(s.median_khz).rate_per_us;
        if (!(rate > 0.0)) throw ComputationError("total dephasing rate is zero; metric undefined");
        const double t2 = 1.0 / rate;
        const double metric = 1.0 / (t2 * s.sensor_size_um);
        out.points.push_back({s.sensor_size_um, s.median_khz, t2, metric});
        lx.push_back(std::log10(s.sensor_size_um));
        ly.push_back(std::log10(metric));
    }
    const LineFit f = fit_line(lx, ly);
    out.exponent = f.slope;
    out.exponent_sigma = f.slope_sigma;
    out.log10_prefactor = f.intercept;
    return out;
}

std::string to_string(SyntheticStrain m) {
    switch (m) {
        case SyntheticStrain::Stationary: return "stationary";
        case SyntheticStrain::TwoRegion: return "two-region";
        case SyntheticStrain::Gradient: return "gradient";
    }
    return "?";
}

SyntheticStrain synthetic_strain_from_string(const std::string& s) {
    if (s == "stationary") return SyntheticStrain::Stationary;
    if (s == "two-region") return SyntheticStrain::TwoRegion;
    if (s == "gradient") return SyntheticStrain::Gradient;
    throw ValidationError("unknown synthetic strain model '" + s +
                          "' (expected stationary, two-region or gradient)");
}

StrainMap synthesize_strain_map(const SyntheticStrainOptions& o) {
    if (o.rows == 0 || o.cols == 0) throw ValidationError("synthetic map needs rows, cols >= 1");
    if (!(o.scale_khz > 0.0) || !(o.high_scale_khz > 0.0))
        throw ValidationError("synthetic Cauchy scales must be > 0");
    if (!(o.region_fraction > 0.0 && o.region_fraction <= 1.0))
        throw ValidationError("region fraction must be in (0, 1]");
    StrainMap map;
    map.rows = o.rows;
    map.cols = o.cols;
    map.pixel_pitch_um = o.pixel_pitch_um;
    map.values_khz.resize(o.rows * o.cols);

    // Uniforms from raw engine bits so the stream is the same on every
    // standard library.
    std::mt19937_64 rng(o.seed);
    const auto uniform = [&] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
    const auto cauchy = [&](double scale) { return scale * std::tan(std::numbers::pi * (uniform() - 0.5)); };

    const auto patch_r = static_cast<std::size_t>(std::llround(o.region_fraction * o.rows));
    const auto patch_c = static_cast<std::size_t>(std::llround(o.region_fraction * o.cols));
    for (std::size_t r = 0; r < o.rows; ++r)
        for (std::size_t c = 0; c < o.cols; ++c) {
            double v = 0.0;
            switch (o.model) {
                case SyntheticStrain::Stationary: v = cauchy(o.scale_khz); break;
                case SyntheticStrain::TwoRegion:
                    v = cauchy(r < patch_r && c < patch_c ? o.high_scale_khz : o.scale_khz);
                    break;
                case SyntheticStrain::Gradient:
                    v = o.gradient_khz_per_px * static_cast<double>(r + c);
                    break;
            }
            map.values_khz[r * o.cols + c] = o.mean_khz + v;
        }
    map.validate();
    return map;
}

}  // namespace nvsk
