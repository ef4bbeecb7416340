#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

namespace autoscore {

enum class LogLevel { Info, Warning, Error };

using LogSink = std::function<void(LogLevel, std::string_view)>;

// Replaces the process-wide sink (stderr by default). Passing an empty
// function restores the default.
void set_log_sink(LogSink sink);
void log(LogLevel level, std::string_view message);
inline void log_info(std::string_view m) { log(LogLevel::Info, m); }
inline void log_warning(std::string_view m) { log(LogLevel::Warning, m); }

// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
// Writes through a temporary sibling and renames over the target.
void write_text_file(const std::filesystem::path& path, std::string_view contents);

// UTC, second resolution: 2026-10-16T09:30:00Z
std::string utc_timestamp();

std::string format_fixed(double value, int decimals);

std::string_view trim(std::string_view s) noexcept;
std::string to_lower_ascii(std::string_view s);

}  // namespace autoscore
