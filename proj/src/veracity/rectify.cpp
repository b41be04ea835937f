#include <cctype>

#include "datacheck/grammar.hpp"
#include "datacheck/literals.hpp"
#include "datacheck/veracity.hpp"

namespace datacheck {

namespace {

bool is_word(std::string_view t) {
    for (char c : t)
        if (!std::isalpha(static_cast<unsigned char>(c)) && c != '-') return false;
    return !t.empty();
}

bool ends_with_ed(std::string_view t) { return t.size() > 2 && to_lower(t.substr(t.size() - 2)) == "ed"; }

std::string match_case(const std::string& original, std::string replacement) {
    if (!original.empty() && !replacement.empty() && std::isupper(static_cast<unsigned char>(original[0])))
        replacement[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(replacement[0])));
    return replacement;
}

std::string group_thousands(const std::string& number) {
    const auto dot = number.find('.');
    std::string int_part = number.substr(0, dot);
    const std::string frac = dot == std::string::npos ? "" : number.substr(dot);
    std::string sign;
    if (!int_part.empty() && int_part[0] == '-') {
        sign = "-";
        int_part.erase(0, 1);
    }
    std::string out;
    for (std::size_t i = 0; i < int_part.size(); ++i) {
        if (i > 0 && (int_part.size() - i) % 3 == 0) out += ',';
        out += int_part[i];
    }
    return sign + out + frac;
}

struct Hit {
    std::size_t first = 0;  // token range [first, last)
    std::size_t last = 0;
    std::string replacement;
};

/// Restyles the rectified number the way the claimed literal was written.
std::optional<std::string> restyle_number(std::span<const Token> toks, const Number& target) {
    std::string num = toks[0].text;
    std::string prefix;
    if (!num.empty() && num[0] == '$') {
        prefix = "$";
        num.erase(0, 1);
    }
    const bool grouped = num.find(',') != std::string::npos;
    if (toks.size() == 2) {
        const double scale = scale_word(toks[1].text).value();
        auto base = Number::parse(num);
        if (!base) {
            auto v = parse_number(num);
            if (!v) return std::nullopt;
            base = Number{*v, 0};
        }
        const double scaled = target.value / scale;
        for (int k = std::max(0, base->decimals); k <= base->decimals + 15; ++k) {
            const std::string text = format_fixed(scaled, k);
            const double back = std::stod(text) * scale;
            if (rounds_equal(back, target.value, target.decimals))
                return prefix + (grouped ? group_thousands(text) : text) + " " + toks[1].text;
        }
        return std::nullopt;
    }
    const std::string text = format_fixed(target.value, target.decimals);
    return prefix + (grouped ? group_thousands(text) : text);
}

}  // namespace

RectifyOutcome rectify(std::string_view claim_text, const VerificationResult& r, std::optional<CharSpan> value_span) {
    RectifyOutcome out{std::string(claim_text), false, std::nullopt};
    if (r.verdict != Verdict::Inaccurate || !r.rectification) {
        out.diagnostic = Diagnostic{"NotRectifiable", "The claim has no rectification to apply."};
        return out;
    }
    const std::string& rect = *r.rectification;
    const auto all = tokenize(claim_text);
    std::vector<Token> toks;
    for (const auto& t : all)
        if (!value_span || (t.begin >= value_span->begin && t.end <= value_span->end)) toks.push_back(t);

    const FactType type = fact_type_of(r.subtype);
    std::vector<Hit> hits;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        const std::string& t = toks[i].text;
        switch (type) {
            case FactType::Rank: {
                auto v = parse_ordinal(t);
                if (v && r.claimed.is_number_integer() && *v == r.claimed.get<int>()) {
                    const int n = parse_ordinal(rect).value();
                    hits.push_back({i, i + 1, is_word(t) ? match_case(t, ordinal_word(n)) : format_ordinal(n)});
                }
                break;
            }
            case FactType::Categorization: {
                std::optional<int> v = parse_number_word(t);
                if (!v)
                    if (auto n = Number::parse(t); n && n->decimals == 0) v = static_cast<int>(n->value);
                if (v && *v == r.claimed.get<int>()) {
                    const int n = std::stoi(rect);
                    hits.push_back({i, i + 1, is_word(t) ? match_case(t, number_word(n)) : rect});
                }
                break;
            }
            case FactType::Proportion: {
                const auto claimed = parse_percent(r.claimed.get<std::string>());
                if (!claimed) break;
                if (auto p = parse_percent(t); p && t.back() == '%' && p->value == claimed->value) {
                    hits.push_back({i, i + 1, rect});
                } else if (auto n = Number::parse(t); n && n->value == claimed->value && i + 1 < toks.size() &&
                                                      to_lower(toks[i + 1].text) == "percent") {
                    hits.push_back({i, i + 1, rect.substr(0, rect.size() - 1)});
                }
                break;
            }
            case FactType::Value:
            case FactType::Difference: {
                const double claimed = r.claimed.get<double>();
                const Number target = Number::parse(rect).value();
                for (std::size_t len : {std::size_t{2}, std::size_t{1}}) {
                    if (i + len > toks.size()) continue;
                    std::string text = toks[i].text;
                    if (len == 2) text += " " + toks[i + 1].text;
                    auto n = parse_claimed_number(text);
                    if (!n && len == 1) {
                        std::string plain = t;
                        if (!plain.empty() && plain[0] == '$') plain.erase(0, 1);
                        if (auto v = parse_number(plain); v && plain.find('%') == std::string::npos) n = Number{*v, 0};
                    }
                    if (!n || n->value != claimed) continue;
                    if (auto styled = restyle_number(std::span<const Token>(toks).subspan(i, len), target)) {
                        hits.push_back({i, i + len, *styled});
                        break;
                    }
                }
                break;
            }
            case FactType::Trend:
                if (auto d = direction_word(t); d && to_string(*d) == r.claimed.get<std::string>())
                    hits.push_back({i, i + 1, match_case(t, rect)});
                break;
            case FactType::Extreme:
                if (auto e = extreme_word(t); e && to_string(*e) == r.claimed.get<std::string>())
                    hits.push_back({i, i + 1, match_case(t, std::string(extreme_phrase(rect == "max" ? ExtremeKind::Max
                                                                                                       : ExtremeKind::Min)))});
                break;
            case FactType::Association:
                if (auto c = correlation_word(t); c && to_string(*c) == r.claimed.get<std::string>())
                    hits.push_back({i, i + 1, match_case(t, rect)});
                break;
            case FactType::Distribution:
                if (auto s = skew_word(t); s && parse_skew(r.claimed.get<std::string>()) == s) {
                    auto to = parse_skew(rect).value();
                    std::string w(skew_phrase(to));
                    if (ends_with_ed(t)) w += "ed";
                    hits.push_back({i, i + 1, match_case(t, w)});
                }
                break;
            case FactType::Outlier: break;
        }
    }
    if (hits.empty()) {
        out.diagnostic = Diagnostic{"LiteralNotFound", "The claimed literal was not found in the claim text."};
        return out;
    }
    const Hit& h = type == FactType::Value && !value_span ? hits.back() : hits.front();
    std::size_t b = toks[h.first].begin;
    const std::size_t e = toks[h.last - 1].end;
    std::string replacement = h.replacement;
    // "an increase" -> "a decrease"
    if (h.first > 0 && !replacement.empty() && std::isalpha(static_cast<unsigned char>(replacement[0]))) {
        const Token& prev = toks[h.first - 1];
        const std::string article = to_lower(prev.text);
        if (article == "a" || article == "an") {
            const bool vowel = std::string_view("aeiou").find(static_cast<char>(
                                   std::tolower(static_cast<unsigned char>(replacement[0])))) != std::string_view::npos;
            replacement = match_case(prev.text, vowel ? "an" : "a") +
                          std::string(claim_text.substr(prev.end, b - prev.end)) + replacement;
            b = prev.begin;
        }
    }
    out.text = std::string(claim_text.substr(0, b)) + replacement + std::string(claim_text.substr(e));
    out.changed = out.text != claim_text;
    return out;
}

}  // namespace datacheck
