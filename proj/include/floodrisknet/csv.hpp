// Strict CSV helpers: UTF-8, comma separators, '.' decimal point, no quoting
// (none of the schemas need it). Doubles are printed with the shortest
// round-trip representation so identical data always serializes to identical
// bytes.

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace frn {
namespace csv {

std::string format_double(double v);

// Strict numeric parsing; the whole field must be consumed.
double parse_double(std::string_view field, const std::string& context);
long long parse_int(std::string_view field, const std::string& context);

std::vector<std::string_view> split_line(std::string_view line);

// Splits into lines, tolerating trailing newline and CRLF endings.
std::vector<std::string_view> split_lines(std::string_view text);

// Throws SchemaError unless the first line equals `expected` exactly.
void require_header(const std::vector<std::string_view>& lines, std::string_view expected,
                    const std::string& path);

}  // namespace csv
}  // namespace frn
