#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace fpg {

/// Shortest decimal that parses back to the same double.
std::string format_double(double x);

/// Whole-string decimal parse; throws a Config error naming `what`.
double parse_double(std::string_view text, std::string_view what);

/// One decimal per line; blank lines and `#` comments skipped.
std::vector<double> read_value_file(const std::string& path, std::string_view what);

}  // namespace fpg
