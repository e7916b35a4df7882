#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace lyap {

/// Formats a double with 17 significant digits so that parsing the text
/// recovers the exact bit pattern. All artifact files go through this.
std::string fmt_double(double v);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

/// Splits on unquoted whitespace; empty tokens are dropped.
std::vector<std::string> split_ws(const std::string& line);

} // namespace lyap
