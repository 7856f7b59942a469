#include "nvsk/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "nvsk/numfmt.hpp"

namespace nvsk {

namespace {

using nlohmann::ordered_json;

enum class Kind { Real, Integer, Boolean, Text };

struct Entry {
    std::string section;
    std::string key;
    std::string unit;  // empty: dimensionless or not numeric
    Kind kind;
    std::function<void(Config&, const std::string&)> set;
    std::function<ordered_json(const Config&)> get;
};

double parse_real(const std::string& s) {
    double v = 0.0;
    const char* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ValidationError("expected a number, got '" + s + "'");
    if (!std::isfinite(v)) throw ValidationError("value must be finite, got '" + s + "'");
    return v;
}

long parse_integer(const std::string& s) {
    long v = 0;
    const char* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ValidationError("expected an integer, got '" + s + "'");
    return v;
}

bool parse_bool(const std::string& s) {
    if (s == "true" || s == "yes" || s == "1") return true;
    if (s == "false" || s == "no" || s == "0") return false;
    throw ValidationError("expected true or false, got '" + s + "'");
}

double non_negative(double v, const char* what) {
    if (v < 0.0) throw ValidationError(std::string(what) + " must be >= 0, got " + format_g9(v));
    return v;
}

double positive(double v, const char* what) {
    if (!(v > 0.0)) throw ValidationError(std::string(what) + " must be > 0, got " + format_g9(v));
    return v;
}

double unit_interval(double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0))
        throw ValidationError(std::string(what) + " out of [0,1]: " + format_g9(v));
    return v;
}

// Builders for the common entry shapes.
template <class Get, class Set>
Entry real(std::string section, std::string key, std::string unit, Get get, Set set) {
    return {std::move(section), std::move(key), std::move(unit), Kind::Real,
            [set](Config& c, const std::string& raw) { set(c, parse_real(raw)); },
            [get](const Config& c) { return ordered_json(get(c)); }};
}

template <class Get, class Set>
Entry integer(std::string section, std::string key, std::string unit, Get get, Set set) {
    return {std::move(section), std::move(key), std::move(unit), Kind::Integer,
            [set](Config& c, const std::string& raw) { set(c, parse_integer(raw)); },
            [get](const Config& c) { return ordered_json(get(c)); }};
}

const std::vector<Entry>& schema() {
    static const std::vector<Entry> entries = [] {
        std::vector<Entry> e;
        // constants
        e.push_back(real("constants", "gamma_e_mhz_per_g", "MHz/G",
                         [](const Config& c) { return c.constants.gamma_e_mhz_per_g; },
                         [](Config& c, double v) { c.constants.gamma_e_mhz_per_g = positive(v, "gamma_e"); }));
        e.push_back({"constants", "gamma_convention", "", Kind::Text,
                     [](Config& c, const std::string& raw) {
                         c.constants.gamma_convention = gamma_convention_from_string(raw);
                     },
                     [](const Config& c) { return ordered_json(to_string(c.constants.gamma_convention)); }});

        // sample
        e.push_back(real("sample", "ns0_as_grown_ppm", "ppm",
                         [](const Config& c) { return c.sample.ns0_as_grown.ppm(); },
                         [](Config& c, double v) { c.sample.ns0_as_grown = Concentration(v); }));
        e.push_back(real("sample", "c13_ppm", "ppm", [](const Config& c) { return c.sample.c13.ppm(); },
                         [](Config& c, double v) { c.sample.c13 = Concentration(v); }));
        e.push_back(real("sample", "nv_total_ppm", "ppm",
                         [](const Config& c) { return c.sample.nv_total.ppm(); },
                         [](Config& c, double v) { c.sample.nv_total = Concentration(v); }));
        e.push_back(real("sample", "psi", "", [](const Config& c) { return c.sample.charge_fraction_psi; },
                         [](Config& c, double v) { c.sample.charge_fraction_psi = unit_interval(v, "psi"); }));
        e.push_back(integer("sample", "n_orientations", "",
                            [](const Config& c) { return c.sample.n_orientations_sensing; },
                            [](Config& c, long v) {
                                if (v < 1 || v > 4) throw ValidationError("n_orientations must be 1..4");
                                c.sample.n_orientations_sensing = static_cast<int>(v);
                            }));

        // bath
        e.push_back(real("bath", "a_ns0_per_us_ppm", "1/us/ppm",
                         [](const Config& c) { return c.bath.a_ns0_per_us_ppm; },
                         [](Config& c, double v) { c.bath.a_ns0_per_us_ppm = non_negative(v, "a_ns0"); }));
        e.push_back(real("bath", "a_c13_per_ms_ppm", "1/ms/ppm",
                         [](const Config& c) { return c.bath.a_c13_per_ms_ppm(); },
                         [](Config& c, double v) { c.bath.set_a_c13_per_ms_ppm(non_negative(v, "a_c13")); }));
        e.push_back(real("bath", "a_nv_par_per_us_ppm", "1/us/ppm",
                         [](const Config& c) { return c.bath.a_nv_par_per_us_ppm; },
                         [](Config& c, double v) { c.bath.a_nv_par_per_us_ppm = non_negative(v, "a_nv_par"); }));
        e.push_back(real("bath", "a_nv_nonpar_per_us_ppm", "1/us/ppm",
                         [](const Config& c) { return c.bath.a_nv_nonpar_per_us_ppm; },
                         [](Config& c, double v) {
                             c.bath.a_nv_nonpar_per_us_ppm = non_negative(v, "a_nv_nonpar");
                         }));
        e.push_back(real("bath", "zeta_par", "", [](const Config& c) { return c.bath.zeta_par; },
                         [](Config& c, double v) { c.bath.zeta_par = unit_interval(v, "zeta_par"); }));
        e.push_back(real("bath", "zeta_nonpar", "", [](const Config& c) { return c.bath.zeta_nonpar; },
                         [](Config& c, double v) { c.bath.zeta_nonpar = unit_interval(v, "zeta_nonpar"); }));

        // dephasing
        e.push_back(real("dephasing", "strain_fwhm_khz", "kHz", [](const Config& c) { return c.strain_fwhm_khz; },
                         [](Config& c, double v) { c.strain_fwhm_khz = non_negative(v, "strain_fwhm"); }));
        e.push_back(real("dephasing", "bias_rate_per_us", "1/us",
                         [](const Config& c) { return c.bias_rate_per_us; },
                         [](Config& c, double v) { c.bias_rate_per_us = non_negative(v, "bias_rate"); }));
        e.push_back(real("dephasing", "stretch_p", "", [](const Config& c) { return c.stretch_p; },
                         [](Config& c, double v) {
                             if (!(v >= 1.0 && v <= 3.0)) throw ValidationError("stretch_p must be in [1, 3]");
                             c.stretch_p = v;
                         }));

        // sensing
        e.push_back({"sensing", "tau_policy", "", Kind::Text,
                     [](Config& c, const std::string& raw) {
                         if (raw == "optimal") c.tau_policy = TauPolicy::Optimal;
                         else if (raw == "at-t2star") c.tau_policy = TauPolicy::AtT2Star;
                         else throw ValidationError("tau_policy must be optimal or at-t2star, got '" + raw + "'");
                     },
                     [](const Config& c) {
                         return ordered_json(c.tau_policy == TauPolicy::Optimal ? "optimal" : "at-t2star");
                     }});

        // photon
        e.push_back(real("photon", "reference_rate_kcps", "kcps",
                         [](const Config& c) { return c.photon.reference_rate_kcps; },
                         [](Config& c, double v) { c.photon.reference_rate_kcps = positive(v, "reference_rate"); }));
        e.push_back(real("photon", "reference_intensity_mw_um2", "mW/um^2",
                         [](const Config& c) { return c.photon.reference_intensity_mw_um2; },
                         [](Config& c, double v) {
                             c.photon.reference_intensity_mw_um2 = positive(v, "reference_intensity");
                         }));
        e.push_back(real("photon", "i_sat_mw_um2", "mW/um^2", [](const Config& c) { return c.photon.i_sat_mw_um2; },
                         [](Config& c, double v) { c.photon.i_sat_mw_um2 = positive(v, "i_sat"); }));
        e.push_back({"photon", "readout_window_us", "us", Kind::Real,
                     [](Config& c, const std::string& raw) {
                         c.photon.readout_window_us = positive(parse_real(raw), "readout_window");
                     },
                     [](const Config& c) {
                         return c.photon.readout_window_us ? ordered_json(*c.photon.readout_window_us)
                                                           : ordered_json(nullptr);
                     }});

        // photophysics
        e.push_back(real("photophysics", "gamma_per_us", "1/us",
                         [](const Config& c) { return c.photophysics.gamma_per_us; },
                         [](Config& c, double v) { c.photophysics.gamma_per_us = positive(v, "gamma"); }));
        e.push_back(real("photophysics", "kappa_45", "", [](const Config& c) { return c.photophysics.kappa_45; },
                         [](Config& c, double v) { c.photophysics.kappa_45 = non_negative(v, "kappa_45"); }));
        e.push_back(real("photophysics", "kappa_35", "", [](const Config& c) { return c.photophysics.kappa_35; },
                         [](Config& c, double v) { c.photophysics.kappa_35 = non_negative(v, "kappa_35"); }));
        e.push_back(real("photophysics", "kappa_52", "", [](const Config& c) { return c.photophysics.kappa_52; },
                         [](Config& c, double v) { c.photophysics.kappa_52 = non_negative(v, "kappa_52"); }));
        e.push_back(real("photophysics", "kappa_51", "", [](const Config& c) { return c.photophysics.kappa_51; },
                         [](Config& c, double v) { c.photophysics.kappa_51 = non_negative(v, "kappa_51"); }));
        e.push_back(real("photophysics", "i_sat_low_mw_um2", "mW/um^2",
                         [](const Config& c) { return c.photophysics.i_sat_low.mw_per_um2(); },
                         [](Config& c, double v) { c.photophysics.i_sat_low = Intensity(positive(v, "i_sat_low")); }));
        e.push_back(real("photophysics", "i_sat_high_mw_um2", "mW/um^2",
                         [](const Config& c) { return c.photophysics.i_sat_high.mw_per_um2(); },
                         [](Config& c, double v) { c.photophysics.i_sat_high = Intensity(positive(v, "i_sat_high")); }));
        e.push_back({"photophysics", "filter", "", Kind::Boolean,
                     [](Config& c, const std::string& raw) { c.contrast.filter = parse_bool(raw); },
                     [](const Config& c) { return ordered_json(c.contrast.filter); }});
        e.push_back(integer("photophysics", "filter_order", "", [](const Config& c) { return c.contrast.filter_order; },
                            [](Config& c, long v) {
                                if (v < 1 || v > 12) throw ValidationError("filter_order must be 1..12");
                                c.contrast.filter_order = static_cast<int>(v);
                            }));
        e.push_back(real("photophysics", "filter_cutoff_mhz", "MHz", [](const Config& c) { return c.contrast.f_cut_mhz; },
                         [](Config& c, double v) { c.contrast.f_cut_mhz = positive(v, "filter_cutoff"); }));
        e.push_back(integer("photophysics", "max_points", "",
                            [](const Config& c) { return static_cast<long>(c.contrast.max_points); },
                            [](Config& c, long v) {
                                if (v < 2) throw ValidationError("max_points must be >= 2");
                                c.contrast.max_points = static_cast<std::size_t>(v);
                            }));

        // metric
        e.push_back(real("metric", "c13_ppm", "ppm", [](const Config& c) { return c.metric.c13.ppm(); },
                         [](Config& c, double v) { c.metric.c13 = Concentration(v); }));
        e.push_back(real("metric", "t_overhead_us", "us", [](const Config& c) { return c.metric.t_overhead_us; },
                         [](Config& c, double v) { c.metric.t_overhead_us = non_negative(v, "t_overhead"); }));

        // ramsey
        e.push_back(integer("ramsey", "n_hyperfine", "", [](const Config& c) { return c.ramsey.n_hyperfine; },
                            [](Config& c, long v) {
                                if (v < 1 || v > 8) throw ValidationError("n_hyperfine must be 1..8");
                                c.ramsey.n_hyperfine = static_cast<int>(v);
                            }));
        e.push_back({"ramsey", "fit_splitting", "", Kind::Boolean,
                     [](Config& c, const std::string& raw) { c.ramsey.fit_splitting = parse_bool(raw); },
                     [](const Config& c) { return ordered_json(c.ramsey.fit_splitting); }});
        e.push_back(real("ramsey", "hyperfine_splitting_mhz", "MHz",
                         [](const Config& c) { return c.ramsey.hyperfine_splitting_mhz; },
                         [](Config& c, double v) { c.ramsey.hyperfine_splitting_mhz = positive(v, "hyperfine_splitting"); }));
        e.push_back(integer("ramsey", "max_iterations", "", [](const Config& c) { return c.ramsey.max_iterations; },
                            [](Config& c, long v) {
                                if (v < 1) throw ValidationError("max_iterations must be >= 1");
                                c.ramsey.max_iterations = static_cast<int>(v);
                            }));

        // strain
        e.push_back({"strain", "bin_width_khz", "kHz", Kind::Real,
                     [](Config& c, const std::string& raw) {
                         c.histogram.bin_width_khz = positive(parse_real(raw), "bin_width");
                     },
                     [](const Config& c) {
                         return c.histogram.bin_width_khz ? ordered_json(*c.histogram.bin_width_khz)
                                                          : ordered_json(nullptr);
                     }});
        e.push_back(real("strain", "range_iqr_multiple", "", [](const Config& c) { return c.histogram.range_iqr_multiple; },
                         [](Config& c, double v) { c.histogram.range_iqr_multiple = positive(v, "range_iqr_multiple"); }));
        e.push_back(integer("strain", "tile_offset_px", "px",
                            [](const Config& c) { return static_cast<long>(c.tile_offset_px); },
                            [](Config& c, long v) {
                                if (v < 0) throw ValidationError("tile_offset_px must be >= 0");
                                c.tile_offset_px = static_cast<std::size_t>(v);
                            }));

        // charge
        e.push_back(real("charge", "brightness_ratio", "", [](const Config& c) { return c.brightness_ratio; },
                         [](Config& c, double v) { c.brightness_ratio = positive(v, "brightness_ratio"); }));
        e.push_back(real("charge", "longpass_nm", "nm", [](const Config& c) { return c.longpass_nm; },
                         [](Config& c, double v) { c.longpass_nm = non_negative(v, "longpass"); }));
        e.push_back(real("charge", "max_condition_number", "", [](const Config& c) { return c.max_condition_number; },
                         [](Config& c, double v) { c.max_condition_number = positive(v, "max_condition_number"); }));
        return e;
    }();
    return entries;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string normalize_unit(std::string u) {
    // Accept the micro sign for "u".
    for (const std::string micro : {"\xC2\xB5", "\xCE\xBC"}) {
        for (auto pos = u.find(micro); pos != std::string::npos; pos = u.find(micro))
            u.replace(pos, micro.size(), "u");
    }
    return u;
}

const Entry* find_entry(const std::string& section, const std::string& key, std::string& error) {
    const Entry* found = nullptr;
    int matches = 0;
    for (const Entry& e : schema()) {
        if (e.key != key) continue;
        if (!section.empty() && e.section != section) continue;
        found = &e;
        ++matches;
    }
    if (matches == 1) return found;
    if (matches == 0)
        error = "unknown key '" + (section.empty() ? key : section + "." + key) + "'";
    else
        error = "key '" + key + "' exists in several sections; place it under a [section] header";
    return nullptr;
}

bool known_section(const std::string& s) {
    for (const Entry& e : schema())
        if (e.section == s) return true;
    return false;
}

void assign(Config& cfg, const Entry& entry, const std::string& value_text, const std::string& where) {
    std::istringstream tokens(value_text);
    std::string value, unit, extra;
    tokens >> value >> unit >> extra;
    if (value.empty()) throw ValidationError(where + ": missing value for '" + entry.key + "'");
    if (!extra.empty()) throw ValidationError(where + ": unexpected text after value of '" + entry.key + "'");
    if (!unit.empty()) {
        if (entry.kind != Kind::Real && entry.kind != Kind::Integer)
            throw ValidationError(where + ": unit given for non-numeric key '" + entry.key + "'");
        if (entry.unit.empty())
            throw ValidationError(where + ": unit mismatch for '" + entry.key + "': dimensionless, got '" +
                                  unit + "'");
        if (normalize_unit(unit) != entry.unit)
            throw ValidationError(where + ": unit mismatch for '" + entry.key + "': expected " + entry.unit +
                                  ", got '" + unit + "'");
    }
    try {
        entry.set(cfg, value);
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        throw ValidationError(where + ": " + (msg.rfind(entry.key, 0) == 0 ? msg : entry.key + ": " + msg));
    }
    cfg.provenance[entry.section + "." + entry.key] = where;
}

}  // namespace

void apply_config_text(Config& cfg, const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line, section;
    std::set<std::string> seen;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (number == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        const std::string where = origin + ":" + std::to_string(number);
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ValidationError(where + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!known_section(section)) throw ValidationError(where + ": unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ValidationError(where + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        std::string error;
        const Entry* entry = find_entry(section, key, error);
        if (!entry) throw ValidationError(where + ": " + error);
        const std::string full = entry->section + "." + entry->key;
        if (!seen.insert(full).second) throw ValidationError(where + ": duplicate key '" + full + "'");
        assign(cfg, *entry, trim(line.substr(eq + 1)), where);
    }
}

void apply_config_file(Config& cfg, const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << f.rdbuf();
    apply_config_text(cfg, buf.str(), path);
}

void apply_override(Config& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ValidationError("--set expects section.key=value, got '" + assignment + "'");
    const std::string name = trim(assignment.substr(0, eq));
    const auto dot = name.find('.');
    const std::string section = dot == std::string::npos ? "" : name.substr(0, dot);
    const std::string key = dot == std::string::npos ? name : name.substr(dot + 1);
    std::string error;
    const Entry* entry = find_entry(section, key, error);
    if (!entry) throw ValidationError("--set: " + error);
    assign(cfg, *entry, trim(assignment.substr(eq + 1)), "--set " + name);
}

Config resolve_config(const std::vector<std::string>& paths, const std::vector<std::string>& overrides) {
    Config cfg;
    for (const auto& p : paths) apply_config_file(cfg, p);
    for (const auto& o : overrides) apply_override(cfg, o);
    cfg.constants.validate();
    cfg.bath.validate();
    cfg.photon.validate();
    cfg.photophysics.validate();
    return cfg;
}

void Config::require_sample() const {
    std::string missing;
    for (const char* k : {"ns0_as_grown_ppm", "c13_ppm", "nv_total_ppm", "psi"})
        if (!provenance.count(std::string("sample.") + k)) missing += std::string(missing.empty() ? "" : ", ") + k;
    if (!missing.empty()) throw ValidationError("config is missing sample keys: " + missing);
    validate_sample(sample);
}

SensorMaterial Config::material() const {
    require_sample();
    SensorMaterial m;
    m.sample = sample;
    m.bath = bath;
    m.strain_fwhm_khz = strain_fwhm_khz;
    m.bias_rate_per_us = bias_rate_per_us;
    m.stretch_p = stretch_p;
    return m;
}

EvaluationOptions Config::evaluation() const {
    EvaluationOptions o;
    o.constants = constants;
    o.photon = photon;
    o.tau_policy = tau_policy;
    return o;
}

nlohmann::ordered_json Config::to_json() const {
    ordered_json out = ordered_json::object();
    for (const Entry& e : schema()) {
        if (!out.contains(e.section)) out[e.section] = ordered_json::object();
        out[e.section][e.key] = e.get(*this);
    }
    return out;
}

std::vector<ConfigKeyInfo> config_schema() {
    std::vector<ConfigKeyInfo> out;
    for (const Entry& e : schema()) out.push_back({e.section, e.key, e.unit});
    return out;
}

}  // namespace nvsk
