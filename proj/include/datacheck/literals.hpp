#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace datacheck {

/// "seven" -> 7 for zero..twenty.
std::optional<int> parse_number_word(std::string_view word);
std::string number_word(int value);

/// "4th" / "fourth" -> 4.
std::optional<int> parse_ordinal(std::string_view token);
std::string format_ordinal(int value);
std::string ordinal_word(int value);

/// Scale words used in claims ("300 million").
std::optional<double> scale_word(std::string_view word);

/// Round-half-away-from-zero of x * 10^decimals. Numbers claimed with d
/// decimals are compared through this scaled integer.
double scaled_round(double x, int decimals);
bool rounds_equal(double actual, double claimed, int decimals);
/// Formats round(x, decimals) with exactly `decimals` fractional digits.
std::string format_fixed(double x, int decimals);
/// Shortest round-trip representation.
std::string format_shortest(double x);
/// Decimal digits of the shortest representation of x (0 for integers).
int shortest_decimals(double x);

}  // namespace datacheck
