#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace evidential {

std::string read_text_file(const std::filesystem::path& path);

/// Writes through a temporary sibling and renames, so readers never see a
/// half-written artifact.
void write_text_file(const std::filesystem::path& path, std::string_view contents);

/// %.17g formatting; round-trips every finite double.
std::string format_double(double value);

/// Parses a full string as a double; returns false on trailing garbage.
bool parse_double(std::string_view text, double& out);

std::vector<std::string> split(std::string_view text, char sep);

}  // namespace evidential
