#include "onebit/binary_io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "onebit/errors.hpp"

namespace onebit::io {

namespace {

template <class Float, class Bits>
void write_le(std::ostream& out, std::span<const Float> values) {
    static_assert(sizeof(Float) == sizeof(Bits));
    std::vector<unsigned char> buf(values.size() * sizeof(Float));
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto bits = std::bit_cast<Bits>(values[i]);
        for (std::size_t b = 0; b < sizeof(Bits); ++b) {
            buf[i * sizeof(Bits) + b] = static_cast<unsigned char>((bits >> (8 * b)) & 0xff);
        }
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

template <class Float, class Bits>
std::vector<Float> read_le(std::span<const std::byte> bytes) {
    if (bytes.size() % sizeof(Bits) != 0) {
        throw ParseError("binary blob size " + std::to_string(bytes.size()) + " is not a multiple of " +
                         std::to_string(sizeof(Bits)));
    }
    std::vector<Float> values(bytes.size() / sizeof(Bits));
    for (std::size_t i = 0; i < values.size(); ++i) {
        Bits bits = 0;
        for (std::size_t b = 0; b < sizeof(Bits); ++b) {
            bits |= static_cast<Bits>(std::to_integer<unsigned>(bytes[i * sizeof(Bits) + b])) << (8 * b);
        }
        values[i] = std::bit_cast<Float>(bits);
    }
    return values;
}

}  // namespace

std::string format_version() {
    return std::to_string(kFormatMajor) + "." + std::to_string(kFormatMinor);
}

void check_format_version(const nlohmann::json& manifest, const std::string& where) {
    const auto& v = require(manifest, "format_version", where);
    if (!v.is_string()) throw ParseError(where + ": format_version must be a string");
    const auto text = v.get<std::string>();
    int major = 0;
    int minor = 0;
    char tail = 0;
    if (std::sscanf(text.c_str(), "%d.%d%c", &major, &minor, &tail) != 2) {
        throw ParseError(where + ": malformed format_version '" + text + "'");
    }
    if (major > kFormatMajor) {
        throw ParseError(where + ": format_version " + text + " is newer than supported " + format_version());
    }
}

void write_f64_le(std::ostream& out, std::span<const double> values) { write_le<double, std::uint64_t>(out, values); }
void write_f32_le(std::ostream& out, std::span<const float> values) { write_le<float, std::uint32_t>(out, values); }
std::vector<double> read_f64_le(std::span<const std::byte> bytes) { return read_le<double, std::uint64_t>(bytes); }
std::vector<float> read_f32_le(std::span<const std::byte> bytes) { return read_le<float, std::uint32_t>(bytes); }

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path.string() + ": cannot open file");
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::vector<std::byte> bytes(raw.size());
    std::memcpy(bytes.data(), raw.data(), raw.size());
    return bytes;
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path.string() + ": cannot open file");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& value) {
    write_text_file(path, value.dump(2) + "\n");
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(path.string() + ": cannot open for writing");
    out << text;
    if (!out) throw Error(path.string() + ": write failed");
}

std::filesystem::path blob_path(const std::filesystem::path& manifest_path, const nlohmann::json& manifest) {
    if (auto it = manifest.find("blob"); it != manifest.end()) {
        if (!it->is_string()) throw ParseError(manifest_path.string() + ": 'blob' must be a string");
        return manifest_path.parent_path() / it->get<std::string>();
    }
    auto p = manifest_path;
    p.replace_extension(".bin");
    return p;
}

const nlohmann::json& require(const nlohmann::json& object, const char* key, const std::string& where) {
    if (!object.is_object()) throw ParseError(where + ": expected a JSON object");
    auto it = object.find(key);
    if (it == object.end()) throw ParseError(where + ": missing key '" + key + "'");
    return *it;
}

std::string format_double(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

}  // namespace onebit::io
