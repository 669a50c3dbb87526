#pragma once

#include <filesystem>
#include <string>

namespace fpp {

/// Shortest-round-trip-safe text for CSV cells ("%.17g"; inf/nan spelled out).
std::string fmt_double(double x);

/// Writes `content` to `path`, creating parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(const std::string& bytes);

}  // namespace fpp
