#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace onebit::io {

/// Serialized formats carry "format_version": "<major>.<minor>".
inline constexpr int kFormatMajor = 1;
inline constexpr int kFormatMinor = 0;
std::string format_version();

/// Throws ParseError if `version` is malformed or has a newer major.
void check_format_version(const nlohmann::json& manifest, const std::string& where);

void write_f64_le(std::ostream& out, std::span<const double> values);
void write_f32_le(std::ostream& out, std::span<const float> values);
std::vector<double> read_f64_le(std::span<const std::byte> bytes);
std::vector<float> read_f32_le(std::span<const std::byte> bytes);

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path);
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& value);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Resolves the blob referenced by a manifest: the "blob" key relative to
/// the manifest directory, or the manifest path with extension ".bin".
std::filesystem::path blob_path(const std::filesystem::path& manifest_path, const nlohmann::json& manifest);

/// Fetches a required key, raising ParseError naming `where` when absent.
const nlohmann::json& require(const nlohmann::json& object, const char* key, const std::string& where);

/// Round-trip exact decimal formatting for doubles.
std::string format_double(double value);

}  // namespace onebit::io
