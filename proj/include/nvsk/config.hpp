#pragma once

// Line-oriented configuration files.
//
//   # comment
//   [sample]
//   ns0_as_grown_ppm = 0.8
//   psi = 0.2
//   c13_ppm = 108 ppm        # optional trailing unit, checked against the key
//
// Keys are unique within a section. Keys that are unique across all
// sections may also appear before the first section header.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nvsk/charge.hpp"
#include "nvsk/core_types.hpp"
#include "nvsk/dephasing.hpp"
#include "nvsk/photophysics.hpp"
#include "nvsk/ramsey.hpp"
#include "nvsk/sensitivity.hpp"
#include "nvsk/strainmap.hpp"

namespace nvsk {

struct Config {
    PhysicalConstants constants;
    DiamondSample sample;
    BathCoefficients bath;
    double strain_fwhm_khz = 0.0;
    double bias_rate_per_us = 0.0;
    double stretch_p = 1.0;
    PhotonModel photon;
    TauPolicy tau_policy = TauPolicy::Optimal;
    FiveLevelParams photophysics;
    ContrastOptions contrast;
    MetricConfig metric;
    RamseyFitOptions ramsey;
    HistogramOptions histogram;
    std::size_t tile_offset_px = 0;
    double brightness_ratio = kDefaultBrightnessRatio;
    double longpass_nm = 550.0;
    double max_condition_number = 1e8;

    /// "section.key" -> where the value came from ("path:line" or "--set").
    std::map<std::string, std::string> provenance;

    /// Throws ValidationError naming the sample keys that were never set.
    void require_sample() const;
    [[nodiscard]] SensorMaterial material() const;
    [[nodiscard]] EvaluationOptions evaluation() const;
    /// Every resolved value, in schema order.
    [[nodiscard]] nlohmann::ordered_json to_json() const;
};

/// Parses config text; `origin` prefixes diagnostics ("file.cfg:12: ...").
/// Throws ValidationError on syntax errors, unknown keys, unit mismatches,
/// type errors and out-of-range values.
void apply_config_text(Config& cfg, const std::string& text, const std::string& origin);

/// Reads and applies a file. A missing file is a ValidationError.
void apply_config_file(Config& cfg, const std::string& path);

/// Applies one "section.key=value" override.
void apply_override(Config& cfg, const std::string& assignment);

/// Defaults, then each file in order, then the overrides.
Config resolve_config(const std::vector<std::string>& paths, const std::vector<std::string>& overrides = {});

/// Schema listing for documentation: section, key, unit ("" if none).
struct ConfigKeyInfo {
    std::string section, key, unit;
};
std::vector<ConfigKeyInfo> config_schema();

}  // namespace nvsk
