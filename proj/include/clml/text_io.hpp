#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace clml::text {

/// Shortest decimal that parses back to the same double.
std::string format_double(double x);

/// Splits on runs of spaces/tabs.
std::vector<std::string_view> split_fields(std::string_view line);

/// Parsers that throw ParseError tagged with `line_no` on bad input.
double parse_double(std::string_view field, std::size_t line_no);
long long parse_int(std::string_view field, std::size_t line_no);
std::size_t parse_count(std::string_view field, std::size_t line_no);

/// Reads a line, tracking a 1-based counter. Strips a trailing '\r'.
/// Returns false at end of input.
bool read_line(std::istream& in, std::string& line, std::size_t& line_no);

}  // namespace clml::text
