#pragma once

// Result serialization: deterministic JSON/CSV plus a provenance manifest
// next to every output.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace nvsk {

inline constexpr const char* kToolVersion = "0.1.0";

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

/// Recursively rounds every floating-point number to 9 significant digits.
nlohmann::ordered_json round_floats(const nlohmann::ordered_json& j);

/// Header row then one line per row, numbers at 9 significant digits, LF
/// line endings.
std::string format_csv(const CsvTable& table);
std::string format_json(const nlohmann::ordered_json& j);

/// Writes bytes to a file, surfacing I/O errors verbatim.
void write_file(const std::string& path, const std::string& content);

/// Hex SHA-256 of a file's contents.
std::string sha256_file(const std::string& path);
std::string sha256_hex(const std::string& bytes);

struct RunManifest {
    std::string command;
    nlohmann::ordered_json config;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::optional<std::uint64_t> seed;
    double gamma_e_mhz_per_g = 0.0;
    std::string gamma_convention;
};

std::string manifest_path(const std::string& output_path);

/// Writes `<first output>.manifest.json` with input and output digests
/// (outputs must already exist). The timestamp honours SOURCE_DATE_EPOCH.
std::string write_manifest(const RunManifest& manifest);

}  // namespace nvsk
