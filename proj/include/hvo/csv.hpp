#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace hvo::csv {

/// Shortest decimal text that parses back to the same double.
std::string format_number(double value);

/// Full-string double parse; accepts "nan" and "inf". Throws ParseError.
double parse_number(std::string_view text);

long long parse_integer(std::string_view text);

/// Splits one CSV line on commas. No quoting; fields are trimmed of spaces
/// and a trailing carriage return.
std::vector<std::string_view> split(std::string_view line);

std::string join(const std::vector<std::string>& fields);

}  // namespace hvo::csv
