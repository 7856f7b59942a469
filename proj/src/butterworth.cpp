#include "nvsk/butterworth.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "nvsk/core_types.hpp"

namespace nvsk {

ButterworthLowpass::ButterworthLowpass(int order, double f_cut, double fs)
    : order_(order), f_cut_(f_cut), fs_(fs) {
    if (order < 1) throw ValidationError("Butterworth order must be >= 1");
    if (!(fs > 0.0) || !(f_cut > 0.0) || !(f_cut < 0.5 * fs))
        throw ValidationError("Butterworth cutoff must satisfy 0 < f_cut < fs/2");

    const double w = std::tan(std::numbers::pi * f_cut / fs);  // prewarped
    const double k = w * w;
    for (int i = 0; i < order / 2; ++i) {
        // Pole pair with damping 1/Q = 2 sin((2i+1) pi / (2n)).
        const double inv_q = 2.0 * std::sin(std::numbers::pi * (2 * i + 1) / (2.0 * order));
        const double norm = 1.0 / (1.0 + w * inv_q + k);
        Biquad s;
        s.b0 = k * norm;
        s.b1 = 2.0 * s.b0;
        s.b2 = s.b0;
        s.a1 = 2.0 * (k - 1.0) * norm;
        s.a2 = (1.0 - w * inv_q + k) * norm;
        sections_.push_back(s);
    }
    if (order % 2 == 1) {
        Biquad s;
        s.b0 = w / (1.0 + w);
        s.b1 = s.b0;
        s.a1 = (w - 1.0) / (w + 1.0);
        sections_.push_back(s);
    }
}

double ButterworthLowpass::process(double x) noexcept {
    for (auto& s : sections_) x = s.process(x);
    return x;
}

void ButterworthLowpass::process(std::span<double> samples) noexcept {
    for (double& x : samples) x = process(x);
}

void ButterworthLowpass::reset() noexcept {
    for (auto& s : sections_) s.z1 = s.z2 = 0.0;
}

double ButterworthLowpass::magnitude(double f) const {
    const std::complex<double> zinv = std::polar(1.0, -2.0 * std::numbers::pi * f / fs_);
    std::complex<double> h = 1.0;
    for (const auto& s : sections_) {
        const auto num = s.b0 + zinv * (s.b1 + zinv * s.b2);
        const auto den = 1.0 + zinv * (s.a1 + zinv * s.a2);
        h *= num / den;
    }
    return std::abs(h);
}

}  // namespace nvsk
