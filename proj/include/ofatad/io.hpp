#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace ofatad {

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

std::string sha256_hex(std::string_view data);

/// Quotes a CSV field when it holds a comma, quote or line break.
std::string csv_field(std::string_view text);

}  // namespace ofatad
