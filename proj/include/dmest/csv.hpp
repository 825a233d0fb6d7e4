#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dmest::csv {

// Fixed "%.12g" rendering so output is byte-stable; NaN prints as "nan".
std::string num(double v);

std::string join(const std::vector<std::string>& fields, char sep = ',');

// Splits one line on `sep`; no quoting support.
std::vector<std::string> split(std::string_view line, char sep = ',');

// Replaces characters that would break an unquoted CSV field.
std::string sanitize(std::string_view text);

std::string trim(std::string_view s);

}  // namespace dmest::csv
