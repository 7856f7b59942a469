#include "nvsk/table_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "nvsk/core_types.hpp"
#include "nvsk/emit.hpp"
#include "nvsk/numfmt.hpp"

namespace nvsk {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_cell(const std::string& s, const std::string& where) {
    if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const char* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ValidationError(where + ": not a number: '" + s + "'");
    return v;
}

bool skip_line(const std::string& line) { return line.empty() || line.front() == '#'; }

}  // namespace

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << f.rdbuf();
    return buf.str();
}

int NumericCsv::find(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return static_cast<int>(i);
    return -1;
}

std::size_t NumericCsv::require(const std::string& name, const std::string& source) const {
    const int i = find(name);
    if (i < 0) throw ValidationError(source + ": missing column '" + name + "'");
    return static_cast<std::size_t>(i);
}

NumericCsv parse_numeric_csv(const std::string& text, const std::string& source) {
    NumericCsv csv;
    std::istringstream in(text);
    std::string line;
    int number = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++number;
        if (number == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        line = trim(line);
        if (skip_line(line)) continue;
        const auto fields = split(line);
        if (!have_header) {
            csv.columns = fields;
            for (std::size_t i = 0; i < fields.size(); ++i) {
                if (fields[i].empty()) throw ValidationError(source + ":" + std::to_string(number) + ": empty column name");
                for (std::size_t j = 0; j < i; ++j)
                    if (fields[j] == fields[i])
                        throw ValidationError(source + ": duplicate column '" + fields[i] + "'");
            }
            have_header = true;
            continue;
        }
        const std::string where = source + ":" + std::to_string(number);
        if (fields.size() != csv.columns.size())
            throw ValidationError(where + ": expected " + std::to_string(csv.columns.size()) + " fields, got " +
                                  std::to_string(fields.size()));
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields) row.push_back(parse_cell(f, where));
        csv.rows.push_back(std::move(row));
        csv.line_numbers.push_back(number);
    }
    if (!have_header) throw ValidationError(source + ": empty file");
    return csv;
}

NumericCsv read_numeric_csv(const std::string& path) { return parse_numeric_csv(read_text_file(path), path); }

IntensityTable parse_intensity_table(const std::string& text, const std::string& source) {
    const NumericCsv csv = parse_numeric_csv(text, source);
    const std::size_t ci = csv.require("intensity_mw_um2", source);
    const std::size_t cc = csv.require("contrast", source);
    const std::size_t cp = csv.require("psi", source);
    const std::size_t co = csv.require("overhead_us", source);
    const int cr = csv.find("photon_rate_kcps");
    const int cw = csv.find("readout_us");
    for (const auto& name : csv.columns)
        if (name != "intensity_mw_um2" && name != "contrast" && name != "psi" && name != "overhead_us" &&
            name != "photon_rate_kcps" && name != "readout_us")
            throw ValidationError(source + ": unknown column '" + name + "'");

    std::vector<IntensityRow> rows;
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const auto& v = csv.rows[r];
        const std::string where = source + ":" + std::to_string(csv.line_numbers[r]);
        for (std::size_t k = 0; k < v.size(); ++k)
            if (!std::isfinite(v[k]))
                throw ValidationError(where + ": non-finite value in column '" + csv.columns[k] + "'");
        try {
            IntensityRow row;
            row.intensity = Intensity(v[ci]);
            row.contrast = v[cc];
            row.psi = v[cp];
            row.t_overhead_us = v[co];
            if (cr >= 0) row.photon_rate_kcps = v[static_cast<std::size_t>(cr)];
            if (cw >= 0) row.readout_us = v[static_cast<std::size_t>(cw)];
            rows.push_back(row);
        } catch (const ValidationError& e) {
            throw ValidationError(where + ": " + e.what());
        }
    }
    try {
        return IntensityTable(std::move(rows));
    } catch (const ValidationError& e) {
        throw ValidationError(source + ": " + e.what());
    }
}

IntensityTable read_intensity_table(const std::string& path) {
    return parse_intensity_table(read_text_file(path), path);
}

Spectrum read_spectrum(const std::string& path, double longpass_nm) {
    const NumericCsv csv = read_numeric_csv(path);
    const std::size_t cw = csv.require("wavelength_nm", path);
    const std::size_t cc = csv.require("counts", path);
    Spectrum s;
    s.longpass_nm = longpass_nm;
    for (const auto& row : csv.rows) {
        s.wavelength_nm.push_back(row[cw]);
        s.counts.push_back(row[cc]);
    }
    try {
        s.validate();
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
    return s;
}

RamseyData read_ramsey_signal(const std::string& path) {
    const NumericCsv csv = read_numeric_csv(path);
    const std::size_t ct = csv.require("tau_us", path);
    const std::size_t cs = csv.require("signal", path);
    RamseyData d;
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const double t = csv.rows[r][ct], y = csv.rows[r][cs];
        if (!std::isfinite(t) || !std::isfinite(y))
            throw ValidationError(path + ":" + std::to_string(csv.line_numbers[r]) + ": non-finite value");
        d.tau_us.push_back(t);
        d.signal.push_back(y);
    }
    return d;
}

std::string strain_sidecar_path(const std::string& csv_path) {
    const auto slash = csv_path.find_last_of('/');
    const auto dot = csv_path.find_last_of('.');
    if (dot != std::string::npos && (slash == std::string::npos || dot > slash))
        return csv_path.substr(0, dot) + ".json";
    return csv_path + ".json";
}

StrainMap read_strain_map(const std::string& csv_path, std::string sidecar_path) {
    if (sidecar_path.empty()) sidecar_path = strain_sidecar_path(csv_path);
    StrainMap map;
    {
        const std::string text = read_text_file(sidecar_path);
        nlohmann::json meta;
        try {
            meta = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(sidecar_path + ": " + e.what());
        }
        if (!meta.contains("pixel_pitch_um") || !meta["pixel_pitch_um"].is_number())
            throw ValidationError(sidecar_path + ": missing numeric 'pixel_pitch_um'");
        map.pixel_pitch_um = meta["pixel_pitch_um"].get<double>();
        if (meta.contains("orientation")) {
            if (!meta["orientation"].is_number_integer())
                throw ValidationError(sidecar_path + ": 'orientation' must be an integer 1..4");
            map.orientation = meta["orientation"].get<int>();
        }
        if (meta.contains("units") && meta["units"] != "kHz")
            throw ValidationError(sidecar_path + ": units must be \"kHz\"");
    }

    const std::string text = read_text_file(csv_path);
    std::istringstream in(text);
    std::string line;
    int number = 0;
    bool any_masked = false;
    while (std::getline(in, line)) {
        ++number;
        line = trim(line);
        if (skip_line(line)) continue;
        const auto fields = split(line);
        const std::string where = csv_path + ":" + std::to_string(number);
        if (map.cols == 0) map.cols = fields.size();
        else if (fields.size() != map.cols)
            throw ValidationError(where + ": expected " + std::to_string(map.cols) + " values, got " +
                                  std::to_string(fields.size()));
        for (const auto& f : fields) {
            const double v = parse_cell(f, where);
            if (std::isinf(v)) throw ValidationError(where + ": infinite strain value");
            const bool ok = std::isfinite(v);
            any_masked = any_masked || !ok;
            map.values_khz.push_back(ok ? v : 0.0);
            map.mask.push_back(ok ? 1 : 0);
        }
        ++map.rows;
    }
    if (!any_masked) map.mask.clear();
    try {
        map.validate();
    } catch (const ValidationError& e) {
        throw ValidationError(csv_path + ": " + e.what());
    }
    return map;
}

void write_strain_map(const StrainMap& map, const std::string& csv_path) {
    map.validate();
    std::string out;
    out.reserve(map.values_khz.size() * 12);
    for (std::size_t r = 0; r < map.rows; ++r) {
        for (std::size_t c = 0; c < map.cols; ++c) {
            const std::size_t i = r * map.cols + c;
            if (c) out += ',';
            out += map.valid(i) ? format_g9(map.values_khz[i]) : std::string("nan");
        }
        out += '\n';
    }
    write_file(csv_path, out);
    nlohmann::ordered_json meta;
    meta["pixel_pitch_um"] = map.pixel_pitch_um;
    meta["orientation"] = map.orientation;
    meta["units"] = "kHz";
    write_file(strain_sidecar_path(csv_path), format_json(meta));
}

}  // namespace nvsk
