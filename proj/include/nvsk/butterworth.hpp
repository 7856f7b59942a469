#pragma once

#include <span>
#include <vector>

namespace nvsk {

/// One second-order section, direct form II transposed:
/// H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2).
struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;
    double z1 = 0.0, z2 = 0.0;

    double process(double x) noexcept {
        const double y = b0 * x + z1;
        z1 = b1 * x - a1 * y + z2;
        z2 = b2 * x - a2 * y;
        return y;
    }
};

/// Causal digital Butterworth low-pass, designed by the bilinear transform
/// with the cutoff prewarped so the -3 dB point lands exactly on f_cut.
/// Realized as cascaded biquads (plus one first-order section for odd
/// orders), each normalized to unit DC gain.
class ButterworthLowpass {
public:
    /// Frequencies in any consistent unit (MHz here). Requires order >= 1
    /// and 0 < f_cut < fs/2.
    ButterworthLowpass(int order, double f_cut, double fs);

    double process(double x) noexcept;
    void process(std::span<double> samples) noexcept;
    void reset() noexcept;

    /// |H(e^{j 2 pi f / fs})| of the realized sections.
    [[nodiscard]] double magnitude(double f) const;

    [[nodiscard]] int order() const noexcept { return order_; }
    [[nodiscard]] double f_cut() const noexcept { return f_cut_; }
    [[nodiscard]] double fs() const noexcept { return fs_; }
    [[nodiscard]] const std::vector<Biquad>& sections() const noexcept { return sections_; }

private:
    int order_;
    double f_cut_;
    double fs_;
    std::vector<Biquad> sections_;
};

}  // namespace nvsk
