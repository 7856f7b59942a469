#include "nvsk/charge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "nvsk/core_types.hpp"
#include "nvsk/numfmt.hpp"

namespace nvsk {

void Spectrum::validate() const {
    if (wavelength_nm.size() != counts.size())
        throw ValidationError("spectrum wavelength and count columns differ in length");
    if (wavelength_nm.size() < 2) throw ValidationError("spectrum needs at least 2 points");
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (!std::isfinite(wavelength_nm[i]) || !std::isfinite(counts[i]))
            throw ValidationError("spectrum has a non-finite value at row " + std::to_string(i + 1));
        if (counts[i] < 0.0)
            throw ValidationError("spectrum has negative counts at row " + std::to_string(i + 1));
        if (i > 0 && !(wavelength_nm[i] > wavelength_nm[i - 1]))
            throw ValidationError("spectrum wavelengths must increase (row " + std::to_string(i + 1) + ")");
    }
}

double Spectrum::at(double x) const {
    if (x < wavelength_nm.front() || x > wavelength_nm.back())
        throw ValidationError("wavelength " + format_g9(x) + " nm outside the spectrum");
    auto it = std::upper_bound(wavelength_nm.begin(), wavelength_nm.end(), x);
    if (it == wavelength_nm.end()) return counts.back();
    const auto k = static_cast<std::size_t>(it - wavelength_nm.begin());
    const double x0 = wavelength_nm[k - 1], x1 = wavelength_nm[k];
    const double f = (x - x0) / (x1 - x0);
    return counts[k - 1] + f * (counts[k] - counts[k - 1]);
}

double charge_fraction(double w_minus, double w_zero, double brightness_ratio) {
    if (!(w_minus >= 0.0) || !(w_zero >= 0.0) || !std::isfinite(w_minus) || !std::isfinite(w_zero))
        throw ValidationError("PL weights must be finite and >= 0");
    if (!(brightness_ratio > 0.0) || !std::isfinite(brightness_ratio))
        throw ValidationError("brightness ratio must be > 0");
    if (w_minus == 0.0 && w_zero == 0.0) throw ValidationError("both PL weights are zero; psi undefined");
    return w_minus / (w_minus + brightness_ratio * w_zero);
}

std::vector<double> common_grid(const Spectrum& measured, const Spectrum& basis_minus,
                                const Spectrum& basis_zero) {
    const Spectrum* all[] = {&measured, &basis_minus, &basis_zero};
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (const Spectrum* s : all) {
        s->validate();
        lo = std::max(lo, s->wavelength_nm.front());
        hi = std::min(hi, s->wavelength_nm.back());
    }
    if (!(lo < hi)) throw ValidationError("spectra do not overlap in wavelength");
    lo = std::max(lo, measured.longpass_nm);
    if (!(lo < hi)) throw ValidationError("spectral overlap lies below the long-pass edge");

    // Coarsest = fewest samples inside the overlap.
    std::vector<double> best;
    for (const Spectrum* s : all) {
        std::vector<double> g;
        for (double x : s->wavelength_nm)
            if (x >= lo && x <= hi) g.push_back(x);
        if (best.empty() || g.size() < best.size()) best = std::move(g);
    }
    if (best.size() < 2) throw ValidationError("spectral overlap holds fewer than 2 grid points");
    return best;
}

ChargeDecomposition decompose(const Spectrum& measured, const Spectrum& basis_minus,
                              const Spectrum& basis_zero, const DecomposeOptions& options) {
    if (!(options.brightness_ratio > 0.0)) throw ValidationError("brightness ratio must be > 0");
    if (options.intensity_mw_um2 && !(*options.intensity_mw_um2 >= 0.0))
        throw ValidationError("intensity must be >= 0");

    ChargeDecomposition out;
    out.grid_nm = common_grid(measured, basis_minus, basis_zero);
    const auto m = static_cast<Eigen::Index>(out.grid_nm.size());
    Eigen::MatrixXd a(m, 2);
    Eigen::VectorXd y(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double x = out.grid_nm[static_cast<std::size_t>(i)];
        a(i, 0) = basis_minus.at(x);
        a(i, 1) = basis_zero.at(x);
        y(i) = measured.at(x);
    }

    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const auto sv = svd.singularValues();
    out.condition_number = sv(1) > 0.0 ? sv(0) / sv(1) : std::numeric_limits<double>::infinity();
    if (!(out.condition_number <= options.max_condition_number))
        throw ComputationError("basis spectra are collinear (condition number " +
                               format_g9(out.condition_number) + ")");

    // Two-variable NNLS: the unconstrained optimum if feasible, else the
    // better of the two single-basis fits.
    Eigen::Vector2d w = a.colPivHouseholderQr().solve(y);
    if (w(0) < 0.0 || w(1) < 0.0) {
        double best = std::numeric_limits<double>::infinity();
        Eigen::Vector2d best_w = Eigen::Vector2d::Zero();
        for (int k = 0; k < 2; ++k) {
            const double nn = a.col(k).squaredNorm();
            Eigen::Vector2d c = Eigen::Vector2d::Zero();
            c(k) = nn > 0.0 ? std::max(0.0, a.col(k).dot(y) / nn) : 0.0;
            const double cost = (a * c - y).squaredNorm();
            if (cost < best) {
                best = cost;
                best_w = c;
            }
        }
        w = best_w;
    }
    out.w_minus = w(0);
    out.w_zero = w(1);
    const Eigen::VectorXd r = a * w - y;
    out.residual_rms = std::sqrt(r.squaredNorm() / static_cast<double>(m));
    const double ny = y.norm();
    out.relative_residual = ny > 0.0 ? r.norm() / ny : r.norm();
    out.brightness_ratio = options.brightness_ratio;
    out.psi = charge_fraction(out.w_minus, out.w_zero, options.brightness_ratio);
    out.outside_validated_regime =
        options.intensity_mw_um2 && *options.intensity_mw_um2 > kValidatedIntensityLimit;
    return out;
}

}  // namespace nvsk
