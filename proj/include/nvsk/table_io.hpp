#pragma once

// CSV and sidecar readers for the input data sets.

#include <string>
#include <vector>

#include "nvsk/charge.hpp"
#include "nvsk/sensitivity.hpp"
#include "nvsk/strainmap.hpp"

namespace nvsk {

/// A numeric CSV with one header row. Blank lines and lines starting with
/// '#' are skipped. Fields are parsed as doubles ("nan" allowed here;
/// callers decide whether it is acceptable).
struct NumericCsv {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<int> line_numbers;  // source line of each row

    /// Index of a column, or -1.
    [[nodiscard]] int find(const std::string& name) const;
    /// Index of a required column; ValidationError naming it if absent.
    [[nodiscard]] std::size_t require(const std::string& name, const std::string& source) const;
};

NumericCsv parse_numeric_csv(const std::string& text, const std::string& source);
NumericCsv read_numeric_csv(const std::string& path);

/// Columns intensity_mw_um2, contrast, psi, overhead_us and optionally
/// photon_rate_kcps, readout_us. Rows must already be in increasing
/// intensity order; duplicates and NaN are rejected with the row number.
IntensityTable read_intensity_table(const std::string& path);
IntensityTable parse_intensity_table(const std::string& text, const std::string& source);

/// Columns wavelength_nm, counts.
Spectrum read_spectrum(const std::string& path, double longpass_nm = 550.0);

/// Columns tau_us, signal.
struct RamseyData {
    std::vector<double> tau_us;
    std::vector<double> signal;
};
RamseyData read_ramsey_signal(const std::string& path);

/// Headerless numeric grid (kHz); "nan" or empty cells are masked. The
/// sidecar {pixel_pitch_um, orientation, units: "kHz"} defaults to the CSV
/// path with its extension replaced by ".json".
StrainMap read_strain_map(const std::string& csv_path, std::string sidecar_path = {});
void write_strain_map(const StrainMap& map, const std::string& csv_path);
std::string strain_sidecar_path(const std::string& csv_path);

std::string read_text_file(const std::string& path);

}  // namespace nvsk
