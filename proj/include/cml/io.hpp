#pragma once

#include <filesystem>
#include <string>

namespace cml {

/// Shortest text that round-trips exactly, or `precision` significant
/// digits when given; "inf", "-inf" and "nan" for non-finite values.
std::string format_double(double x, int precision = 0);

/// Parses the output of format_double (accepts "inf"/"-inf"/"nan").
double parse_double(const std::string& text);

/// Writes `content` to `path`, creating parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& content);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace cml
