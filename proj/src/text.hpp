#pragma once

// Small text helpers shared by the CSV reader/writers.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace synthctl::detail {

std::string_view trim(std::string_view s) noexcept;

/// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_csv_line(std::string_view line);

std::optional<double> parse_double(std::string_view s) noexcept;
std::optional<long long> parse_integer(std::string_view s) noexcept;

/// Shortest representation that parses back to the identical double.
std::string format_double(double v);

}  // namespace synthctl::detail
