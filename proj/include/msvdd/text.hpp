#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace msvdd::text {

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

/// Whole-string parse; a leading '+' is accepted. Rejects non-finite values
/// unless `allow_nonfinite` ("nan", "inf", "-inf").
bool parse_double(std::string_view text, double& out, bool allow_nonfinite = false);
bool parse_int(std::string_view text, long long& out);

std::vector<std::string_view> split_whitespace(std::string_view line);
std::vector<std::string_view> split_char(std::string_view line, char sep);

/// Replaces separators and line breaks so the text fits in one CSV field.
std::string csv_safe(std::string_view text);

}  // namespace msvdd::text
