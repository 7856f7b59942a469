#include "nvsk/emit.hpp"

#include <openssl/evp.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <fstream>
#include <memory>

#include "nvsk/core_types.hpp"
#include "nvsk/numfmt.hpp"

namespace nvsk {

using nlohmann::ordered_json;

ordered_json round_floats(const ordered_json& j) {
    if (j.is_number_float()) {
        const double v = j.get<double>();
        if (!std::isfinite(v)) return nullptr;  // JSON has no NaN/inf
        return std::strtod(format_g9(v).c_str(), nullptr);
    }
    if (j.is_array()) {
        ordered_json out = ordered_json::array();
        for (const auto& e : j) out.push_back(round_floats(e));
        return out;
    }
    if (j.is_object()) {
        ordered_json out = ordered_json::object();
        for (const auto& [k, v] : j.items()) out[k] = round_floats(v);
        return out;
    }
    return j;
}

std::string format_json(const ordered_json& j) { return round_floats(j).dump(2) + "\n"; }

std::string format_csv(const CsvTable& table) {
    std::string out;
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        if (i) out += ',';
        out += table.columns[i];
    }
    out += '\n';
    for (const auto& row : table.rows) {
        if (row.size() != table.columns.size())
            throw ComputationError("CSV row width does not match the header");
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += format_g9(row[i]);
        }
        out += '\n';
    }
    return out;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ValidationError("cannot write '" + path + "': " + std::strerror(errno));
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.close();
    if (!f) throw ValidationError("write to '" + path + "' failed: " + std::strerror(errno));
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw ComputationError("SHA-256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

std::string sha256_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot open '" + path + "' for hashing");
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return sha256_hex(bytes);
}

std::string manifest_path(const std::string& output_path) { return output_path + ".manifest.json"; }

namespace {

std::string utc_timestamp() {
    std::time_t t = std::time(nullptr);
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

ordered_json digests(const std::vector<std::string>& paths) {
    ordered_json out = ordered_json::array();
    for (const auto& p : paths) out.push_back({{"path", p}, {"sha256", sha256_file(p)}});
    return out;
}

}  // namespace

std::string write_manifest(const RunManifest& m) {
    if (m.outputs.empty()) throw ComputationError("manifest needs at least one output");
    ordered_json j;
    j["tool"] = "nvsk";
    j["version"] = kToolVersion;
    j["command"] = m.command;
    j["created_utc"] = utc_timestamp();
    j["seed"] = m.seed ? ordered_json(*m.seed) : ordered_json(nullptr);
    j["gamma_e_mhz_per_g"] = m.gamma_e_mhz_per_g;
    j["gamma_convention"] = m.gamma_convention;
    j["inputs"] = digests(m.inputs);
    j["outputs"] = digests(m.outputs);
    j["config"] = m.config;
    const std::string path = manifest_path(m.outputs.front());
    write_file(path, format_json(j));
    return path;
}

}  // namespace nvsk
