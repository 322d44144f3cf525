#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace regcal::csv {

// Shortest round-trip decimal form (std::to_chars). Reparsing the string
// recovers the exact double, which is what makes byte-identical reruns and
// save/load equality checks meaningful.
std::string format_double(double v);

double parse_double(std::string_view field, const std::string& context);

std::vector<std::string> split_line(std::string_view line);

std::string join(const std::vector<std::string>& fields);

// Reads all non-empty lines. Throws on unreadable file.
std::vector<std::string> read_lines(const std::string& path);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace regcal::csv
