// Small CSV helpers shared by the readers and writers.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rmtwarn::text {

std::vector<std::string_view> split(std::string_view line, char sep = ',');
std::string_view trim(std::string_view s);

/// Strict decimal parse of the whole (trimmed) field; nullopt on failure.
std::optional<double> parse_double(std::string_view field);

/// Shortest decimal that parses back to the identical double.
std::string format_double(double value);

std::string read_file(const std::filesystem::path& path);
/// Writes via a temporary sibling and renames, creating parent directories.
void write_file(const std::filesystem::path& path, std::string_view content);

/// Lines with trailing '\r' stripped; blank lines and lines starting with '#' dropped.
std::vector<std::string_view> data_lines(std::string_view text);

}  // namespace rmtwarn::text
