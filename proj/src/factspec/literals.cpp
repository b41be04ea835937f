#include "datacheck/literals.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "datacheck/dataset.hpp"

namespace datacheck {

namespace {

constexpr std::array<std::string_view, 21> kWords = {
    "zero",   "one",     "two",      "three",    "four",    "five",    "six",
    "seven",  "eight",   "nine",     "ten",      "eleven",  "twelve",  "thirteen",
    "fourteen", "fifteen", "sixteen", "seventeen", "eighteen", "nineteen", "twenty"};

constexpr std::array<std::string_view, 21> kOrdinalWords = {
    "zeroth",     "first",      "second",      "third",      "fourth",     "fifth",     "sixth",
    "seventh",    "eighth",     "ninth",       "tenth",      "eleventh",   "twelfth",   "thirteenth",
    "fourteenth", "fifteenth",  "sixteenth",   "seventeenth", "eighteenth", "nineteenth", "twentieth"};

double pow10(int n) {
    double p = 1.0;
    for (int i = 0; i < n; ++i) p *= 10.0;
    return p;
}

}  // namespace

std::optional<int> parse_number_word(std::string_view word) {
    const std::string w = to_lower(word);
    for (std::size_t i = 0; i < kWords.size(); ++i)
        if (w == kWords[i]) return static_cast<int>(i);
    return std::nullopt;
}

std::string number_word(int value) {
    if (value >= 0 && value < static_cast<int>(kWords.size())) return std::string(kWords[static_cast<std::size_t>(value)]);
    return std::to_string(value);
}

std::optional<int> parse_ordinal(std::string_view token) {
    const std::string t = to_lower(token);
    for (std::size_t i = 1; i < kOrdinalWords.size(); ++i)
        if (t == kOrdinalWords[i]) return static_cast<int>(i);
    if (t.size() < 3) return std::nullopt;
    const std::string suffix = t.substr(t.size() - 2);
    const std::string digits = t.substr(0, t.size() - 2);
    int v = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (ec != std::errc() || ptr != digits.data() + digits.size() || v < 1) return std::nullopt;
    if (format_ordinal(v).substr(std::to_string(v).size()) != suffix) return std::nullopt;
    return v;
}

std::string format_ordinal(int value) {
    const int mod100 = value % 100;
    const int mod10 = value % 10;
    const char* suffix = "th";
    if (mod100 < 11 || mod100 > 13) {
        if (mod10 == 1)
            suffix = "st";
        else if (mod10 == 2)
            suffix = "nd";
        else if (mod10 == 3)
            suffix = "rd";
    }
    return std::to_string(value) + suffix;
}

std::string ordinal_word(int value) {
    if (value >= 1 && value < static_cast<int>(kOrdinalWords.size()))
        return std::string(kOrdinalWords[static_cast<std::size_t>(value)]);
    return format_ordinal(value);
}

std::optional<double> scale_word(std::string_view word) {
    const std::string w = to_lower(word);
    if (w == "thousand") return 1e3;
    if (w == "million") return 1e6;
    if (w == "billion") return 1e9;
    if (w == "trillion") return 1e12;
    return std::nullopt;
}

double scaled_round(double x, int decimals) { return std::round(x * pow10(decimals)); }

bool rounds_equal(double actual, double claimed, int decimals) {
    return scaled_round(actual, decimals) == scaled_round(claimed, decimals);
}

std::string format_fixed(double x, int decimals) {
    const double k = scaled_round(x, decimals);
    if (k == 0) return decimals > 0 ? "0." + std::string(static_cast<std::size_t>(decimals), '0') : "0";
    char buf[512];
    std::snprintf(buf, sizeof buf, "%.0f", std::fabs(k));
    std::string digits = buf;
    if (decimals > 0) {
        if (digits.size() <= static_cast<std::size_t>(decimals))
            digits.insert(0, static_cast<std::size_t>(decimals) + 1 - digits.size(), '0');
        digits.insert(digits.size() - static_cast<std::size_t>(decimals), ".");
    }
    return (k < 0 ? "-" : "") + digits;
}

std::string format_shortest(double x) {
    if (x == 0) return "0";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

int shortest_decimals(double x) {
    const std::string s = format_shortest(x);
    const auto e = s.find_first_of("eE");
    const auto dot = s.find('.');
    int frac = 0;
    if (dot != std::string::npos) frac = static_cast<int>((e == std::string::npos ? s.size() : e) - dot - 1);
    if (e != std::string::npos) {
        int exp = 0;
        std::size_t start = e + 1;
        if (start < s.size() && s[start] == '+') ++start;
        std::from_chars(s.data() + start, s.data() + s.size(), exp);
        frac -= exp;
    }
    return frac < 0 ? 0 : frac;
}

}  // namespace datacheck
