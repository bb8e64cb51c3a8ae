#include "clml/text_io.hpp"

#include <charconv>
#include <cmath>
#include <istream>

#include "clml/errors.hpp"

namespace clml::text {

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

double parse_double(std::string_view field, std::size_t line_no) {
  double x = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), x);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size() || !std::isfinite(x)) {
    throw ParseError(line_no, "expected a finite number, got '" + std::string(field) + "'");
  }
  return x;
}

long long parse_int(std::string_view field, std::size_t line_no) {
  long long x = 0;
  const char* first = field.data();
  if (!field.empty() && field.front() == '+') ++first;
  const auto res = std::from_chars(first, field.data() + field.size(), x);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size() || first == field.data() + field.size()) {
    throw ParseError(line_no, "expected an integer, got '" + std::string(field) + "'");
  }
  return x;
}

std::size_t parse_count(std::string_view field, std::size_t line_no) {
  const long long x = parse_int(field, line_no);
  if (x < 0) throw ParseError(line_no, "expected a nonnegative count, got '" + std::string(field) + "'");
  return static_cast<std::size_t>(x);
}

bool read_line(std::istream& in, std::string& line, std::size_t& line_no) {
  if (!std::getline(in, line)) return false;
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

}  // namespace clml::text
