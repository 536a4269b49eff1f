#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace fixseeker::util {

/// Replaces every invalid UTF-8 sequence with U+FFFD.
std::string utf8_lossy(std::string_view bytes);

/// Splits on '\n'. A trailing newline does not produce an empty final line;
/// a trailing '\r' on each line is kept.
std::vector<std::string> split_lines(std::string_view text);

std::vector<std::string_view> split(std::string_view text, char sep);

bool starts_with(std::string_view s, std::string_view prefix) noexcept;

std::string to_lower(std::string_view s);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// Fixed-precision rendering for human-facing tables.
std::string format_fixed(double value, int digits);

}  // namespace fixseeker::util
