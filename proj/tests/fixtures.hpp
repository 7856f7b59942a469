#pragma once

// Synthetic intensity tables and materials shared by the unit and acceptance tests.

#include <cmath>
#include <vector>

#include "nvsk/sensitivity.hpp"

namespace nvsk::fixtures {

// Smooth step in log10(intensity) from the low- to the high-intensity
// value, centered at 0.03 mW/um^2 with a half-decade width.
inline double ramp(double intensity, double at_low, double at_high) {
    const double x = (std::log10(intensity) - std::log10(0.03)) / 0.5;
    return at_low + (at_high - at_low) / (1.0 + std::exp(-x));
}

inline IntensityTable shaped_table(double c_low, double c_high, double psi_low, double psi_high,
                                   int rows = 13) {
    std::vector<IntensityRow> r;
    for (int i = 0; i < rows; ++i) {
        const double logi = -3.0 + 4.0 * i / (rows - 1);
        const double intensity = std::pow(10.0, logi);
        IntensityRow row;
        row.intensity = Intensity(intensity);
        row.contrast = ramp(intensity, c_low, c_high);
        row.psi = ramp(intensity, psi_low, psi_high);
        // Initialization time falls from ~1 ms to ~10 us across the sweep.
        row.t_overhead_us = std::pow(10.0, 3.0 - 2.0 * (logi + 3.0) / 4.0);
        r.push_back(row);
    }
    return IntensityTable(std::move(r));
}

// Low nitrogen: long T2*, charge state bleached at high intensity.
inline SensorMaterial low_n_material() {
    SensorMaterial m;
    m.sample = {Concentration(0.8), Concentration(108), Concentration(0.39), 0.2, 1};
    return m;
}
inline IntensityTable low_n_table() { return shaped_table(0.03, 0.01, 0.6, 0.1); }

// High nitrogen: short T2*, NV- stabilized and brighter contrast at high intensity.
inline SensorMaterial high_n_material() {
    SensorMaterial m;
    m.sample = {Concentration(14.0), Concentration(108), Concentration(4.0), 0.7, 1};
    return m;
}
inline IntensityTable high_n_table() { return shaped_table(0.015, 0.04, 0.6, 0.85); }

}  // namespace nvsk::fixtures
