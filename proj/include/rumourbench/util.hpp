#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace rumourbench::util {

/// Hex-encoded SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

/// Hex-encoded SHA-256 over a sequence of fields, length-prefixed so that
/// no two distinct field sequences can produce the same digest input.
std::string sha256_hex(const std::vector<std::string_view>& parts);

/// Ordering for decimal-string identifiers: shorter strings first, then
/// lexicographic. Equivalent to numeric order for non-padded decimals.
bool id_less(std::string_view a, std::string_view b);

std::string to_lower(std::string s);
std::string trim(std::string_view s);

/// Canonical text form of a temperature value, used in digests and file
/// names so that 0.8 and 0.80 hash identically.
std::string format_temperature(double t);

int64_t now_ms();

std::string read_file(const std::filesystem::path& path);

/// Write via a temp file in the same directory, then rename into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Append-only line writer that fsyncs after every line.
class AppendFile {
public:
    explicit AppendFile(const std::filesystem::path& path);
    ~AppendFile();
    AppendFile(const AppendFile&) = delete;
    AppendFile& operator=(const AppendFile&) = delete;

    void write_line(std::string_view line);

private:
    int fd_ = -1;
    std::filesystem::path path_;
};

} // namespace rumourbench::util
