#include "floodrisknet/csv.hpp"

#include <charconv>
#include <cmath>
#include <system_error>

#include "floodrisknet/errors.hpp"

namespace frn {
namespace csv {

std::string format_double(double v) {
  if (v == 0.0) return "0";  // avoid "-0"
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view field, const std::string& context) {
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw SchemaError(context + ": invalid number '" + std::string(field) + "'");
  }
  if (!std::isfinite(v)) {
    throw SchemaError(context + ": non-finite number '" + std::string(field) + "'");
  }
  return v;
}

long long parse_int(std::string_view field, const std::string& context) {
  long long v = 0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw SchemaError(context + ": invalid integer '" + std::string(field) + "'");
  }
  return v;
}

std::vector<std::string_view> split_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = nl + 1;
  }
  return lines;
}

void require_header(const std::vector<std::string_view>& lines, std::string_view expected,
                    const std::string& path) {
  if (lines.empty()) throw SchemaError(path + ": file is empty");
  if (lines[0] != expected) {
    throw SchemaError(path + ": bad header '" + std::string(lines[0]) + "', expected '" +
                      std::string(expected) + "'");
  }
}

}  // namespace csv
}  // namespace frn
