#pragma once

#include <string>
#include <string_view>
#include <vector>

// Small string helpers shared across modules.
namespace robocoder::text {

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);
std::string to_lower(std::string_view s);
bool starts_with_ci(std::string_view s, std::string_view prefix);

/// Fixed-point rendering, e.g. fixed(-0.785, 2) == "-0.79".
std::string fixed(double value, int precision);

/// Shortest text that parses back to exactly `value`.
std::string shortest(double value);

/// Strict full-string parse; returns false on any trailing garbage.
bool parse_double(std::string_view s, double& out);
bool parse_int(std::string_view s, long long& out);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace robocoder::text
