#include "datacheck/factspec.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <set>

#include "datacheck/literals.hpp"

namespace datacheck {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr std::array<std::pair<FactType, std::string_view>, kFactTypeCount> kFactTypeNames = {{
    {FactType::Value, "value"},
    {FactType::Proportion, "proportion"},
    {FactType::Trend, "trend"},
    {FactType::Extreme, "extreme"},
    {FactType::Rank, "rank"},
    {FactType::Association, "association"},
    {FactType::Difference, "difference"},
    {FactType::Categorization, "categorization"},
    {FactType::Distribution, "distribution"},
    {FactType::Outlier, "outlier"},
}};

constexpr std::array<std::pair<Subtype, std::string_view>, kSubtypeCount> kSubtypeNames = {{
    {Subtype::ValueMean, "value_mean"},
    {Subtype::ValueMedian, "value_median"},
    {Subtype::ValueSum, "value_sum"},
    {Subtype::Proportion, "proportion"},
    {Subtype::Trend, "trend"},
    {Subtype::Extreme, "extreme"},
    {Subtype::Rank, "rank"},
    {Subtype::Association, "association"},
    {Subtype::Difference, "difference"},
    {Subtype::Categorization, "categorization"},
    {Subtype::Distribution, "distribution"},
    {Subtype::Outlier1D, "outlier_1d"},
    {Subtype::Outlier2D, "outlier_2d"},
}};

std::string quote(std::string_view s) {
    std::string out = "\"";
    for (char raw : s) {
        const auto c = static_cast<unsigned char>(raw);
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (c < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    out += buf;
                } else {
                    out.push_back(raw);
                }
        }
    }
    out += "\"";
    return out;
}

// ---------------------------------------------------------------------------
// Reader for the spec text format: JSON plus predicate entries
// (`{"attr" op literal}` or unbraced `"attr" op literal` inside arrays).

struct Node {
    enum class Kind { Object, Array, String, Number, Predicate, Null };
    Kind kind = Kind::Null;
    std::vector<std::pair<std::string, Node>> members;
    std::vector<Node> items;
    std::string text;
    Number number;
    FilterPredicate predicate;

    const Node* find(std::string_view key) const {
        for (const auto& [k, v] : members)
            if (k == key) return &v;
        return nullptr;
    }
};

class Reader {
public:
    explicit Reader(std::string_view text) : s_(text) {}

    Node parse_document() {
        Node n = parse_value();
        skip_ws();
        if (pos_ != s_.size()) fail("trailing characters");
        return n;
    }

private:
    std::string_view s_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw SpecParseError(SpecParseError::Kind::Syntax, "", what + " at offset " + std::to_string(pos_));
    }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool peek(char c) {
        skip_ws();
        return pos_ < s_.size() && s_[pos_] == c;
    }

    void expect(char c) {
        skip_ws();
        if (pos_ >= s_.size() || s_[pos_] != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    std::optional<CompareOp> try_op() {
        skip_ws();
        if (pos_ >= s_.size()) return std::nullopt;
        auto two = s_.substr(pos_, 2);
        if (two == "!=" || two == ">=" || two == "<=" || two == "==") {
            pos_ += 2;
            return two == "==" ? CompareOp::Eq : compare_op_from_string(two);
        }
        const char c = s_[pos_];
        if (c == '=' || c == '>' || c == '<') {
            ++pos_;
            return compare_op_from_string(std::string_view(&s_[pos_ - 1], 1));
        }
        return std::nullopt;
    }

    std::string parse_string() {
        expect('"');
        std::string out;
        while (pos_ < s_.size()) {
            const char c = s_[pos_++];
            if (c == '"') return out;
            if (c == '\\') {
                if (pos_ >= s_.size()) fail("bad escape");
                const char e = s_[pos_++];
                switch (e) {
                    case 'n': out.push_back('\n'); break;
                    case 't': out.push_back('\t'); break;
                    case 'r': out.push_back('\r'); break;
                    case 'b': out.push_back('\b'); break;
                    case 'f': out.push_back('\f'); break;
                    case 'u': {
                        if (pos_ + 4 > s_.size()) fail("bad unicode escape");
                        unsigned cp = 0;
                        auto [p, ec] = std::from_chars(s_.data() + pos_, s_.data() + pos_ + 4, cp, 16);
                        if (ec != std::errc()) fail("bad unicode escape");
                        pos_ += 4;
                        if (cp < 0x80) {
                            out.push_back(static_cast<char>(cp));
                        } else if (cp < 0x800) {
                            out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
                            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
                        } else {
                            out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
                            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
                            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
                        }
                        break;
                    }
                    default: out.push_back(e);
                }
            } else {
                out.push_back(c);
            }
        }
        fail("unterminated string");
    }

    Number parse_number_token() {
        skip_ws();
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '-' ||
                                    s_[pos_] == '+' || s_[pos_] == '.' || s_[pos_] == 'e' || s_[pos_] == 'E'))
            ++pos_;
        auto n = Number::parse(s_.substr(start, pos_ - start));
        if (!n) fail("bad number");
        return *n;
    }

    Literal parse_literal() {
        skip_ws();
        if (peek('"')) return Literal::text(parse_string());
        return Literal{parse_number_token()};
    }

    Node parse_value() {
        skip_ws();
        if (pos_ >= s_.size()) fail("unexpected end");
        const char c = s_[pos_];
        if (c == '{') return parse_object();
        if (c == '[') return parse_array();
        if (c == '"') {
            Node n;
            n.kind = Node::Kind::String;
            n.text = parse_string();
            return n;
        }
        if (s_.substr(pos_, 4) == "null") {
            pos_ += 4;
            return Node{};
        }
        Node n;
        n.kind = Node::Kind::Number;
        n.number = parse_number_token();
        return n;
    }

    Node parse_object() {
        expect('{');
        Node n;
        n.kind = Node::Kind::Object;
        if (peek('}')) {
            ++pos_;
            return n;
        }
        std::string key = parse_string();
        if (auto op = try_op()) {
            n.kind = Node::Kind::Predicate;
            n.predicate = FilterPredicate{std::move(key), *op, parse_literal()};
            expect('}');
            return n;
        }
        while (true) {
            expect(':');
            n.members.emplace_back(std::move(key), parse_value());
            if (peek(',')) {
                ++pos_;
                key = parse_string();
                continue;
            }
            expect('}');
            return n;
        }
    }

    Node parse_array() {
        expect('[');
        Node n;
        n.kind = Node::Kind::Array;
        if (peek(']')) {
            ++pos_;
            return n;
        }
        while (true) {
            skip_ws();
            if (peek('"')) {
                std::string s = parse_string();
                if (auto op = try_op()) {
                    Node p;
                    p.kind = Node::Kind::Predicate;
                    p.predicate = FilterPredicate{std::move(s), *op, parse_literal()};
                    n.items.push_back(std::move(p));
                } else {
                    Node str;
                    str.kind = Node::Kind::String;
                    str.text = std::move(s);
                    n.items.push_back(std::move(str));
                }
            } else {
                n.items.push_back(parse_value());
            }
            if (peek(',')) {
                ++pos_;
                continue;
            }
            expect(']');
            return n;
        }
    }
};

[[noreturn]] void bad_literal(const std::string& field, const std::string& detail) {
    throw SpecParseError(SpecParseError::Kind::BadLiteral, field, detail);
}

// A predicate given as a plain string, e.g. "\"IMDb_score\" > 7" or "year = 2020".
std::optional<FilterPredicate> predicate_from_string(std::string_view text) {
    static constexpr std::array<std::string_view, 7> ops = {"!=", ">=", "<=", "==", "=", ">", "<"};
    for (auto op : ops) {
        const auto at = text.find(op);
        if (at == std::string_view::npos || at == 0) continue;
        std::string attr = trim(text.substr(0, at));
        std::string lit = trim(text.substr(at + op.size()));
        if (attr.size() >= 2 && attr.front() == '"' && attr.back() == '"') attr = attr.substr(1, attr.size() - 2);
        if (attr.empty() || lit.empty()) return std::nullopt;
        Literal literal;
        if (lit.size() >= 2 && lit.front() == '"' && lit.back() == '"')
            literal = Literal::text(lit.substr(1, lit.size() - 2));
        else if (auto n = Number::parse(lit))
            literal = Literal{*n};
        else
            literal = Literal::text(lit);
        return FilterPredicate{attr, op == "==" ? CompareOp::Eq : *compare_op_from_string(op), literal};
    }
    return std::nullopt;
}

FilterPredicate to_predicate(const Node& n, const std::string& field) {
    switch (n.kind) {
        case Node::Kind::Predicate: return n.predicate;
        case Node::Kind::Object:
            if (n.members.size() == 1) {
                const auto& [k, v] = n.members.front();
                if (v.kind == Node::Kind::String) return {k, CompareOp::Eq, Literal::text(v.text)};
                if (v.kind == Node::Kind::Number) return {k, CompareOp::Eq, Literal{v.number}};
            }
            break;
        case Node::Kind::String:
            if (auto p = predicate_from_string(n.text)) return *p;
            break;
        case Node::Kind::Array:
            if (n.items.size() == 1) return to_predicate(n.items.front(), field);
            break;
        default: break;
    }
    bad_literal(field, "expected a filter predicate");
}

FilterList to_predicates(const Node* n, const std::string& field) {
    FilterList out;
    if (!n || n->kind == Node::Kind::Null) return out;
    if (n->kind != Node::Kind::Array) {
        out.push_back(to_predicate(*n, field));
        return out;
    }
    for (const auto& item : n->items) out.push_back(to_predicate(item, field));
    return out;
}

std::string to_text(const Node* n, const std::string& field) {
    if (!n) return {};
    if (n->kind == Node::Kind::String) return n->text;
    if (n->kind == Node::Kind::Number) return n->number.text();
    if (n->kind == Node::Kind::Null) return {};
    bad_literal(field, "expected a string");
}

std::string require_text(const Node& obj, const std::string& field) {
    const Node* n = obj.find(field);
    if (!n) throw SpecParseError(SpecParseError::Kind::UnknownShape, field, "missing key " + field);
    return to_text(n, field);
}

Number to_claimed_number(const Node& n, const std::string& field) {
    if (n.kind == Node::Kind::Number) return n.number;
    if (n.kind == Node::Kind::String) {
        if (auto num = Number::parse(trim(n.text))) return *num;
        if (auto v = parse_number(n.text)) {
            std::string t = trim(n.text);
            const auto dot = t.find('.');
            int decimals = 0;
            if (dot != std::string::npos) {
                for (std::size_t i = dot + 1; i < t.size() && std::isdigit(static_cast<unsigned char>(t[i])); ++i)
                    ++decimals;
            }
            return Number{*v, decimals};
        }
    }
    bad_literal(field, "expected a number");
}

int to_integer(const Node& n, const std::string& field, bool allow_ordinal, bool allow_word) {
    double v = 0;
    if (n.kind == Node::Kind::Number) {
        v = n.number.value;
    } else if (n.kind == Node::Kind::String) {
        const std::string t = trim(n.text);
        if (auto p = parse_number(t))
            v = *p;
        else if (auto o = allow_ordinal ? parse_ordinal(t) : std::nullopt)
            v = *o;
        else if (auto w = allow_word ? parse_number_word(t) : std::nullopt)
            v = *w;
        else
            bad_literal(field, "expected an integer");
    } else {
        bad_literal(field, "expected an integer");
    }
    if (v != std::floor(v) || std::fabs(v) > 1e9) bad_literal(field, "expected an integer");
    return static_cast<int>(v);
}

std::string keys_of(const Node& obj) {
    std::string out;
    for (const auto& [k, v] : obj.members) {
        if (!out.empty()) out += ",";
        out += k;
    }
    return out;
}

void check_keys(const Node& obj, std::initializer_list<std::string_view> allowed) {
    for (const auto& [k, v] : obj.members) {
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
            throw SpecParseError(SpecParseError::Kind::UnknownShape, k, "unexpected key " + k + " in {" + keys_of(obj) + "}");
    }
}

std::string lower_trim(std::string_view s) { return to_lower(trim(s)); }

std::optional<TrendDirection> direction_from(std::string_view s) {
    const auto t = lower_trim(s);
    if (t == "increase") return TrendDirection::Increase;
    if (t == "decrease") return TrendDirection::Decrease;
    return std::nullopt;
}

std::optional<ExtremeKind> extreme_from(std::string_view s) {
    const auto t = lower_trim(s);
    if (t == "max" || t == "maximum" || t == "highest") return ExtremeKind::Max;
    if (t == "min" || t == "minimum" || t == "lowest") return ExtremeKind::Min;
    return std::nullopt;
}

std::optional<Correlation> correlation_from(std::string_view s) {
    const auto t = lower_trim(s);
    if (t == "positive") return Correlation::Positive;
    if (t == "negative") return Correlation::Negative;
    return std::nullopt;
}

FactSpec build_spec(const Node& obj) {
    if (obj.kind != Node::Kind::Object) throw SpecParseError(SpecParseError::Kind::UnknownShape, "", "top level must be an object");
    if (obj.members.empty()) throw SpecParseError(SpecParseError::Kind::UnknownShape, "", "UnknownShape({})");

    const Node* value = obj.find("value");
    const bool has_measure = obj.find("measure") != nullptr;
    const bool has_focus = obj.find("focus") != nullptr;
    const auto unknown = [&] {
        return SpecParseError(SpecParseError::Kind::UnknownShape, "", "UnknownShape({" + keys_of(obj) + "})");
    };

    if (obj.find("measure_x")) {
        check_keys(obj, {"measure_x", "measure_y", "value", "subspace", "identifier_key"});
        AssociationFact f;
        f.measure_x = require_text(obj, "measure_x");
        f.measure_y = require_text(obj, "measure_y");
        auto c = correlation_from(require_text(obj, "value"));
        if (!c) bad_literal("value", "expected positive or negative");
        f.value = *c;
        f.identifier_key = to_text(obj.find("identifier_key"), "identifier_key");
        if (const Node* s = obj.find("subspace")) f.subspace = to_predicates(s, "subspace");
        return f;
    }
    if (obj.find("aggregation")) {
        check_keys(obj, {"measure", "value", "aggregation", "subspace", "identifier_key"});
        ValueFact f;
        f.measure = require_text(obj, "measure");
        if (!value) throw unknown();
        f.value = to_claimed_number(*value, "value");
        auto agg = aggregation_from_string(require_text(obj, "aggregation"));
        if (!agg) bad_literal("aggregation", "expected average, median or sum");
        f.aggregation = *agg;
        f.subspace = to_predicates(obj.find("subspace"), "subspace");
        f.identifier_key = to_text(obj.find("identifier_key"), "identifier_key");
        return f;
    }
    if (obj.find("focus_x") || obj.find("focus_y")) {
        check_keys(obj, {"measure", "value", "focus_x", "focus_y", "subspace"});
        DifferenceFact f;
        f.measure = require_text(obj, "measure");
        if (!value || !obj.find("focus_x") || !obj.find("focus_y")) throw unknown();
        f.value = to_claimed_number(*value, "value");
        f.focus_x = to_predicate(*obj.find("focus_x"), "focus_x");
        f.focus_y = to_predicate(*obj.find("focus_y"), "focus_y");
        f.subspace = to_predicates(obj.find("subspace"), "subspace");
        return f;
    }
    if (!has_measure) {
        if (!value) throw unknown();
        check_keys(obj, {"value", "subspace", "identifier_key"});
        CategorizationFact f;
        f.value = to_integer(*value, "value", false, true);
        if (f.value < 0) bad_literal("value", "count must be non-negative");
        f.subspace = to_predicates(obj.find("subspace"), "subspace");
        f.identifier_key = to_text(obj.find("identifier_key"), "identifier_key");
        return f;
    }
    if (!value) {
        check_keys(obj, {"measure", "measure_y", "focus", "subspace", "identifier_key"});
        if (!has_focus) throw unknown();
        OutlierFact f;
        f.measure = require_text(obj, "measure");
        if (const Node* y = obj.find("measure_y")) f.measure_y = to_text(y, "measure_y");
        f.focus = to_predicate(*obj.find("focus"), "focus");
        f.subspace = to_predicates(obj.find("subspace"), "subspace");
        f.identifier_key = to_text(obj.find("identifier_key"), "identifier_key");
        return f;
    }

    const std::string measure = require_text(obj, "measure");
    if (value->kind == Node::Kind::String) {
        const std::string& v = value->text;
        if (!has_focus && direction_from(v)) {
            check_keys(obj, {"measure", "value", "subspace"});
            return TrendFact{measure, *direction_from(v), to_predicates(obj.find("subspace"), "subspace")};
        }
        if (auto e = extreme_from(v)) {
            check_keys(obj, {"measure", "value", "focus", "subspace", "identifier_key"});
            return ExtremeFact{measure, *e, to_predicates(obj.find("focus"), "focus"),
                               to_predicates(obj.find("subspace"), "subspace"),
                               to_text(obj.find("identifier_key"), "identifier_key")};
        }
        if (!trim(v).empty() && trim(v).back() == '%') {
            check_keys(obj, {"measure", "value", "focus", "subspace", "identifier_key"});
            auto pct = parse_percent(v);
            if (!pct || pct->value < 0 || pct->value > 100) bad_literal("value", "percentage must lie in [0,100]");
            return ProportionFact{measure, trim(v), to_predicates(obj.find("focus"), "focus"),
                                  to_predicates(obj.find("subspace"), "subspace"),
                                  to_text(obj.find("identifier_key"), "identifier_key")};
        }
        if (!has_focus && parse_skew(v)) {
            check_keys(obj, {"measure", "value", "subspace", "identifier_key"});
            DistributionFact f{measure, v, to_text(obj.find("identifier_key"), "identifier_key"), std::nullopt};
            if (const Node* s = obj.find("subspace")) f.subspace = to_predicates(s, "subspace");
            return f;
        }
    }
    if (has_focus) {
        check_keys(obj, {"measure", "value", "focus", "subspace", "identifier_key"});
        RankFact f;
        f.measure = measure;
        f.value = to_integer(*value, "value", true, false);
        if (f.value < 1) bad_literal("value", "rank must be >= 1");
        f.focus = to_predicates(obj.find("focus"), "focus");
        f.subspace = to_predicates(obj.find("subspace"), "subspace");
        f.identifier_key = to_text(obj.find("identifier_key"), "identifier_key");
        return f;
    }
    throw unknown();
}

// --- serialization ---------------------------------------------------------

std::string predicate_body(const FilterPredicate& p) {
    return quote(p.attribute) + std::string(to_string(p.op)) + p.literal.token();
}

std::string braced(const FilterPredicate& p) { return "{" + predicate_body(p) + "}"; }

std::string list(const FilterList& preds, bool bare = false) {
    std::string out = "[";
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (i) out += ",";
        out += bare ? predicate_body(preds[i]) : braced(preds[i]);
    }
    return out + "]";
}

class ObjectWriter {
public:
    ObjectWriter& field(std::string_view key, const std::string& raw_value) {
        out_ += first_ ? "" : ",";
        first_ = false;
        out_ += quote(key) + ":" + raw_value;
        return *this;
    }
    std::string str() const { return "{" + out_ + "}"; }

private:
    std::string out_;
    bool first_ = true;
};

}  // namespace

// ---------------------------------------------------------------------------

const std::vector<FactType>& all_fact_types() {
    static const std::vector<FactType> types = [] {
        std::vector<FactType> v;
        for (const auto& [t, n] : kFactTypeNames) v.push_back(t);
        return v;
    }();
    return types;
}

const std::vector<Subtype>& all_subtypes() {
    static const std::vector<Subtype> types = [] {
        std::vector<Subtype> v;
        for (const auto& [t, n] : kSubtypeNames) v.push_back(t);
        return v;
    }();
    return types;
}

std::string_view to_string(FactType type) {
    for (const auto& [t, n] : kFactTypeNames)
        if (t == type) return n;
    return "value";
}

std::string_view to_string(Subtype subtype) {
    for (const auto& [t, n] : kSubtypeNames)
        if (t == subtype) return n;
    return "value_mean";
}

std::optional<FactType> fact_type_from_string(std::string_view name) {
    const std::string n = to_lower(name);
    for (const auto& [t, s] : kFactTypeNames)
        if (s == n) return t;
    return std::nullopt;
}

std::optional<Subtype> subtype_from_string(std::string_view name) {
    const std::string n = to_lower(name);
    for (const auto& [t, s] : kSubtypeNames)
        if (s == n) return t;
    return std::nullopt;
}

std::vector<Subtype> subtypes_of(FactType type) {
    std::vector<Subtype> out;
    for (Subtype s : all_subtypes())
        if (fact_type_of(s) == type) out.push_back(s);
    return out;
}

FactType fact_type_of(Subtype subtype) {
    switch (subtype) {
        case Subtype::ValueMean:
        case Subtype::ValueMedian:
        case Subtype::ValueSum: return FactType::Value;
        case Subtype::Proportion: return FactType::Proportion;
        case Subtype::Trend: return FactType::Trend;
        case Subtype::Extreme: return FactType::Extreme;
        case Subtype::Rank: return FactType::Rank;
        case Subtype::Association: return FactType::Association;
        case Subtype::Difference: return FactType::Difference;
        case Subtype::Categorization: return FactType::Categorization;
        case Subtype::Distribution: return FactType::Distribution;
        case Subtype::Outlier1D:
        case Subtype::Outlier2D: return FactType::Outlier;
    }
    return FactType::Value;
}

std::string_view to_string(Verdict verdict) {
    switch (verdict) {
        case Verdict::Accurate: return "accurate";
        case Verdict::Inaccurate: return "inaccurate";
        case Verdict::Unverifiable: return "unverifiable";
    }
    return "unverifiable";
}

std::optional<Verdict> verdict_from_string(std::string_view name) {
    const std::string n = to_lower(name);
    if (n == "accurate") return Verdict::Accurate;
    if (n == "inaccurate") return Verdict::Inaccurate;
    if (n == "unverifiable") return Verdict::Unverifiable;
    return std::nullopt;
}

std::string_view to_string(CompareOp op) {
    switch (op) {
        case CompareOp::Eq: return "=";
        case CompareOp::Ne: return "!=";
        case CompareOp::Gt: return ">";
        case CompareOp::Ge: return ">=";
        case CompareOp::Lt: return "<";
        case CompareOp::Le: return "<=";
    }
    return "=";
}

std::optional<CompareOp> compare_op_from_string(std::string_view text) {
    if (text == "=" || text == "==") return CompareOp::Eq;
    if (text == "!=") return CompareOp::Ne;
    if (text == ">") return CompareOp::Gt;
    if (text == ">=") return CompareOp::Ge;
    if (text == "<") return CompareOp::Lt;
    if (text == "<=") return CompareOp::Le;
    return std::nullopt;
}

bool is_ordering(CompareOp op) { return op != CompareOp::Eq && op != CompareOp::Ne; }

std::string Number::text() const { return format_fixed(value, decimals); }

std::optional<Number> Number::parse(std::string_view raw) {
    const std::string t = trim(raw);
    if (t.empty()) return std::nullopt;
    std::size_t i = 0;
    if (t[i] == '-' || t[i] == '+') ++i;
    const std::size_t int_start = i;
    while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i;
    const bool has_int = i > int_start;
    int frac = 0;
    if (i < t.size() && t[i] == '.') {
        ++i;
        while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) {
            ++i;
            ++frac;
        }
    }
    if (!has_int && frac == 0) return std::nullopt;
    int exp = 0;
    if (i < t.size() && (t[i] == 'e' || t[i] == 'E')) {
        ++i;
        std::size_t es = i;
        if (i < t.size() && (t[i] == '-' || t[i] == '+')) ++i;
        const std::size_t digits_start = i;
        while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i;
        if (i == digits_start) return std::nullopt;
        std::string e = t.substr(es, i - es);
        if (!e.empty() && e.front() == '+') e.erase(0, 1);
        std::from_chars(e.data(), e.data() + e.size(), exp);
    }
    if (i != t.size()) return std::nullopt;
    std::string body = t;
    if (body.front() == '+') body.erase(0, 1);
    double v = 0;
    auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
    if (ec != std::errc() || ptr != body.data() + body.size()) return std::nullopt;
    return Number{v, std::max(0, frac - exp)};
}

std::string Literal::text() const {
    if (const auto* n = std::get_if<Number>(&value)) return n->text();
    return std::get<std::string>(value);
}

std::optional<double> Literal::as_number() const {
    if (const auto* n = std::get_if<Number>(&value)) return n->value;
    const auto& s = std::get<std::string>(value);
    if (auto v = parse_number(s)) return v;
    // "300 million"
    const std::string t = trim(s);
    const auto space = t.rfind(' ');
    if (space != std::string::npos) {
        auto base = parse_number(t.substr(0, space));
        auto scale = scale_word(t.substr(space + 1));
        if (base && scale) return *base * *scale;
    }
    return std::nullopt;
}

std::optional<Date> Literal::as_date() const {
    if (const auto* s = std::get_if<std::string>(&value)) return parse_date(*s);
    return std::nullopt;
}

std::string Literal::token() const {
    if (const auto* n = std::get_if<Number>(&value)) return n->text();
    return quote(std::get<std::string>(value));
}

std::string FilterPredicate::describe() const {
    return attribute + " " + std::string(to_string(op)) + " " + literal.text();
}

std::string_view to_string(Aggregation agg) {
    switch (agg) {
        case Aggregation::Average: return "average";
        case Aggregation::Median: return "median";
        case Aggregation::Sum: return "sum";
    }
    return "average";
}

std::optional<Aggregation> aggregation_from_string(std::string_view text) {
    const std::string t = to_lower(trim(text));
    if (t == "average" || t == "mean" || t == "avg") return Aggregation::Average;
    if (t == "median") return Aggregation::Median;
    if (t == "sum" || t == "total") return Aggregation::Sum;
    return std::nullopt;
}

std::string_view to_string(TrendDirection d) { return d == TrendDirection::Increase ? "increase" : "decrease"; }
std::string_view to_string(ExtremeKind e) { return e == ExtremeKind::Max ? "max" : "min"; }
std::string_view to_string(Correlation c) { return c == Correlation::Positive ? "positive" : "negative"; }

FactType fact_type_of(const FactSpec& spec) { return fact_type_of(subtype_of(spec)); }

Subtype subtype_of(const FactSpec& spec) {
    return std::visit(
        Overloaded{
            [](const ValueFact& f) {
                switch (f.aggregation) {
                    case Aggregation::Average: return Subtype::ValueMean;
                    case Aggregation::Median: return Subtype::ValueMedian;
                    case Aggregation::Sum: return Subtype::ValueSum;
                }
                return Subtype::ValueMean;
            },
            [](const ProportionFact&) { return Subtype::Proportion; },
            [](const TrendFact&) { return Subtype::Trend; },
            [](const ExtremeFact&) { return Subtype::Extreme; },
            [](const RankFact&) { return Subtype::Rank; },
            [](const AssociationFact&) { return Subtype::Association; },
            [](const DifferenceFact&) { return Subtype::Difference; },
            [](const CategorizationFact&) { return Subtype::Categorization; },
            [](const DistributionFact&) { return Subtype::Distribution; },
            [](const OutlierFact& f) { return f.measure_y ? Subtype::Outlier2D : Subtype::Outlier1D; },
        },
        spec);
}

std::optional<Number> parse_percent(std::string_view text) {
    std::string t = trim(text);
    if (t.empty() || t.back() != '%') {
        const std::string lower = to_lower(t);
        if (lower.size() > 8 && lower.substr(lower.size() - 8) == " percent")
            t = trim(t.substr(0, t.size() - 8));
        else
            return std::nullopt;
    } else {
        t = trim(t.substr(0, t.size() - 1));
    }
    return Number::parse(t);
}

std::optional<Skew> parse_skew(std::string_view text) {
    const std::string t = to_lower(text);
    const bool right = t.find("right") != std::string::npos || t.find("positive") != std::string::npos;
    const bool left = t.find("left") != std::string::npos || t.find("negative") != std::string::npos;
    if (t.find("skew") == std::string::npos || right == left) return std::nullopt;
    return right ? Skew::Right : Skew::Left;
}

const FilterList& subspace_of(const FactSpec& spec) {
    static const FilterList empty;
    return std::visit(
        Overloaded{
            [&](const AssociationFact& f) -> const FilterList& { return f.subspace ? *f.subspace : empty; },
            [&](const DistributionFact& f) -> const FilterList& { return f.subspace ? *f.subspace : empty; },
            [](const auto& f) -> const FilterList& { return f.subspace; },
        },
        spec);
}

FilterList& subspace_of(FactSpec& spec) {
    return std::visit(
        Overloaded{
            [](AssociationFact& f) -> FilterList& {
                if (!f.subspace) f.subspace.emplace();
                return *f.subspace;
            },
            [](DistributionFact& f) -> FilterList& {
                if (!f.subspace) f.subspace.emplace();
                return *f.subspace;
            },
            [](auto& f) -> FilterList& { return f.subspace; },
        },
        spec);
}

std::vector<std::string> measures_of(const FactSpec& spec) {
    return std::visit(
        Overloaded{
            [](const AssociationFact& f) { return std::vector<std::string>{f.measure_x, f.measure_y}; },
            [](const CategorizationFact&) { return std::vector<std::string>{}; },
            [](const OutlierFact& f) {
                std::vector<std::string> v{f.measure};
                if (f.measure_y) v.push_back(*f.measure_y);
                return v;
            },
            [](const auto& f) { return std::vector<std::string>{f.measure}; },
        },
        spec);
}

std::vector<FilterPredicate> predicates_of(const FactSpec& spec) {
    std::vector<FilterPredicate> out = subspace_of(spec);
    std::visit(Overloaded{
                   [&](const ProportionFact& f) { out.insert(out.end(), f.focus.begin(), f.focus.end()); },
                   [&](const ExtremeFact& f) { out.insert(out.end(), f.focus.begin(), f.focus.end()); },
                   [&](const RankFact& f) { out.insert(out.end(), f.focus.begin(), f.focus.end()); },
                   [&](const DifferenceFact& f) {
                       out.push_back(f.focus_x);
                       out.push_back(f.focus_y);
                   },
                   [&](const OutlierFact& f) { out.push_back(f.focus); },
                   [](const auto&) {},
               },
               spec);
    return out;
}

SpecParseError::SpecParseError(Kind kind, std::string field, std::string detail)
    : std::runtime_error([&] {
          switch (kind) {
              case Kind::Syntax: return "Syntax: " + detail;
              case Kind::UnknownShape: return detail.rfind("UnknownShape", 0) == 0 ? detail : "UnknownShape: " + detail;
              case Kind::BadLiteral: return "BadLiteral(" + field + "): " + detail;
          }
          return detail;
      }()),
      kind_(kind),
      field_(std::move(field)) {}

std::string serialize_spec(const FactSpec& spec) {
    return std::visit(
        Overloaded{
            [](const ValueFact& f) {
                return ObjectWriter()
                    .field("measure", quote(f.measure))
                    .field("value", f.value.text())
                    .field("aggregation", quote(to_string(f.aggregation)))
                    .field("subspace", list(f.subspace))
                    .field("identifier_key", quote(f.identifier_key))
                    .str();
            },
            [](const ProportionFact& f) {
                return ObjectWriter()
                    .field("measure", quote(f.measure))
                    .field("value", quote(f.value))
                    .field("focus", list(f.focus))
                    .field("subspace", list(f.subspace))
                    .field("identifier_key", quote(f.identifier_key))
                    .str();
            },
            [](const TrendFact& f) {
                return ObjectWriter()
                    .field("measure", quote(f.measure))
                    .field("value", quote(to_string(f.value)))
                    .field("subspace", list(f.subspace))
                    .str();
            },
            [](const ExtremeFact& f) {
                return ObjectWriter()
                    .field("measure", quote(f.measure))
                    .field("value", quote(to_string(f.value)))
                    .field("focus", list(f.focus))
                    .field("subspace", list(f.subspace))
                    .field("identifier_key", quote(f.identifier_key))
                    .str();
            },
            [](const RankFact& f) {
                return ObjectWriter()
                    .field("measure", quote(f.measure))
                    .field("value", std::to_string(f.value))
                    .field("focus", list(f.focus))
                    .field("subspace", list(f.subspace))
                    .field("identifier_key", quote(f.identifier_key))
                    .str();
            },
            [](const AssociationFact& f) {
                ObjectWriter w;
                w.field("measure_x", quote(f.measure_x))
                    .field("measure_y", quote(f.measure_y))
                    .field("value", quote(to_string(f.value)));
                if (f.subspace) w.field("subspace", list(*f.subspace));
                w.field("identifier_key", quote(f.identifier_key));
                return w.str();
            },
            [](const DifferenceFact& f) {
                return ObjectWriter()
                    .field("measure", quote(f.measure))
                    .field("value", f.value.text())
                    .field("focus_x", braced(f.focus_x))
                    .field("focus_y", braced(f.focus_y))
                    .field("subspace", list(f.subspace))
                    .str();
            },
            [](const CategorizationFact& f) {
                return ObjectWriter()
                    .field("value", std::to_string(f.value))
                    .field("subspace", list(f.subspace))
                    .field("identifier_key", quote(f.identifier_key))
                    .str();
            },
            [](const DistributionFact& f) {
                ObjectWriter w;
                w.field("measure", quote(f.measure)).field("value", quote(f.value));
                if (f.subspace) w.field("subspace", list(*f.subspace));
                w.field("identifier_key", quote(f.identifier_key));
                return w.str();
            },
            [](const OutlierFact& f) {
                ObjectWriter w;
                w.field("measure", quote(f.measure));
                if (f.measure_y) w.field("measure_y", quote(*f.measure_y));
                w.field("focus", braced(f.focus))
                    .field("subspace", list(f.subspace, true))
                    .field("identifier_key", quote(f.identifier_key));
                return w.str();
            },
        },
        spec);
}

FactSpec parse_spec_json(std::string_view text) { return build_spec(Reader(text).parse_document()); }

std::string normalize_spec_whitespace(std::string_view text) {
    std::string out;
    bool in_string = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            out.push_back(c);
            if (c == '\\' && i + 1 < text.size()) {
                out.push_back(text[++i]);
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
            out.push_back(c);
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            out.push_back(c);
        }
    }
    return out;
}

// --- validation --------------------------------------------------------------

std::string_view to_string(Issue::Kind kind) {
    switch (kind) {
        case Issue::Kind::UnknownAttribute: return "UnknownAttribute";
        case Issue::Kind::TypeMismatch: return "TypeMismatch";
        case Issue::Kind::MissingTemporalAxis: return "MissingTemporalAxis";
    }
    return "UnknownAttribute";
}

std::vector<Issue> validate_spec(const FactSpec& spec, const Dataset& dataset) {
    std::vector<Issue> issues;
    for (const auto& m : measures_of(spec)) {
        auto idx = dataset.resolve(m);
        if (!idx) {
            issues.push_back({Issue::Kind::UnknownAttribute, m, std::nullopt, "UnknownAttribute(" + m + ")"});
        } else if (dataset.columns[*idx].kind != ColumnKind::Numeric) {
            issues.push_back({Issue::Kind::TypeMismatch, m, std::nullopt, "measure " + m + " is not numeric"});
        }
    }
    for (const auto& p : predicates_of(spec)) {
        auto idx = dataset.resolve(p.attribute);
        if (!idx) {
            issues.push_back({Issue::Kind::UnknownAttribute, p.attribute, std::nullopt,
                              "UnknownAttribute(" + p.attribute + ")"});
            continue;
        }
        const ColumnKind kind = dataset.columns[*idx].kind;
        bool ok = true;
        switch (kind) {
            case ColumnKind::Categorical: ok = !is_ordering(p.op); break;
            case ColumnKind::Numeric: ok = p.literal.as_number().has_value(); break;
            case ColumnKind::Temporal: ok = p.literal.as_date().has_value(); break;
        }
        if (!ok)
            issues.push_back({Issue::Kind::TypeMismatch, p.attribute, p.op,
                              "TypeMismatch(" + p.attribute + ", " + std::string(to_string(p.op)) + ")"});
    }
    if (std::holds_alternative<TrendFact>(spec)) {
        const bool any_temporal = std::any_of(dataset.columns.begin(), dataset.columns.end(),
                                              [](const Column& c) { return c.kind == ColumnKind::Temporal; });
        if (!any_temporal)
            issues.push_back({Issue::Kind::MissingTemporalAxis, "", std::nullopt, "dataset has no temporal column"});
    }
    return issues;
}

// --- structured JSON -----------------------------------------------------------

nlohmann::ordered_json predicate_to_json(const FilterPredicate& p) {
    nlohmann::ordered_json j;
    j["attribute"] = p.attribute;
    j["op"] = std::string(to_string(p.op));
    if (const auto* n = std::get_if<Number>(&p.literal.value))
        j["value"] = n->value;
    else
        j["value"] = std::get<std::string>(p.literal.value);
    return j;
}

namespace {

Number number_from_json(const nlohmann::json& j, const std::string& field) {
    if (j.is_number()) {
        const double v = j.get<double>();
        return Number{v, shortest_decimals(v)};
    }
    if (j.is_string()) {
        Node n;
        n.kind = Node::Kind::String;
        n.text = j.get<std::string>();
        return to_claimed_number(n, field);
    }
    bad_literal(field, "expected a number");
}

FilterList predicates_from_json(const nlohmann::json& j, const std::string& field) {
    FilterList out;
    if (j.is_null()) return out;
    if (!j.is_array()) bad_literal(field, "expected an array of predicates");
    for (const auto& item : j) out.push_back(predicate_from_json(item));
    return out;
}

std::string string_field(const nlohmann::json& j, const char* key, bool required = true) {
    if (!j.contains(key) || j.at(key).is_null()) {
        if (required) throw SpecParseError(SpecParseError::Kind::UnknownShape, key, std::string("missing key ") + key);
        return {};
    }
    if (!j.at(key).is_string()) bad_literal(key, "expected a string");
    return j.at(key).get<std::string>();
}

int int_field(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) throw SpecParseError(SpecParseError::Kind::UnknownShape, key, std::string("missing key ") + key);
    const auto& v = j.at(key);
    Node n;
    if (v.is_number()) {
        n.kind = Node::Kind::Number;
        n.number = Number{v.get<double>(), 0};
    } else if (v.is_string()) {
        n.kind = Node::Kind::String;
        n.text = v.get<std::string>();
    } else {
        bad_literal(key, "expected an integer");
    }
    return to_integer(n, key, true, true);
}

}  // namespace

FilterPredicate predicate_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        if (auto p = predicate_from_string(j.get<std::string>())) return *p;
        bad_literal("predicate", "unparseable predicate string");
    }
    if (!j.is_object()) bad_literal("predicate", "expected an object");
    if (!j.contains("attribute")) {
        if (j.size() == 1) {
            const auto& [k, v] = *j.items().begin();
            if (v.is_string()) return {k, CompareOp::Eq, Literal::text(v.get<std::string>())};
            if (v.is_number()) return {k, CompareOp::Eq, Literal{number_from_json(v, k)}};
        }
        bad_literal("predicate", "missing attribute");
    }
    FilterPredicate p;
    p.attribute = j.at("attribute").get<std::string>();
    auto op = compare_op_from_string(j.value("op", std::string("=")));
    if (!op) bad_literal("op", "unknown comparison operator");
    p.op = *op;
    if (!j.contains("value")) bad_literal("value", "predicate value missing");
    const auto& v = j.at("value");
    if (v.is_number())
        p.literal = Literal{number_from_json(v, "value")};
    else if (v.is_string())
        p.literal = Literal::text(v.get<std::string>());
    else
        bad_literal("value", "predicate value must be a number or string");
    return p;
}

nlohmann::ordered_json spec_to_json(const FactSpec& spec) {
    nlohmann::ordered_json j;
    j["fact_type"] = std::string(to_string(fact_type_of(spec)));
    j["subtype"] = std::string(to_string(subtype_of(spec)));
    auto preds = [](const FilterList& l) {
        auto a = nlohmann::ordered_json::array();
        for (const auto& p : l) a.push_back(predicate_to_json(p));
        return a;
    };
    std::visit(Overloaded{
                   [&](const ValueFact& f) {
                       j["measure"] = f.measure;
                       j["value"] = f.value.value;
                       j["aggregation"] = std::string(to_string(f.aggregation));
                       j["subspace"] = preds(f.subspace);
                       j["identifier_key"] = f.identifier_key;
                   },
                   [&](const ProportionFact& f) {
                       j["measure"] = f.measure;
                       j["value"] = f.value;
                       j["focus"] = preds(f.focus);
                       j["subspace"] = preds(f.subspace);
                       j["identifier_key"] = f.identifier_key;
                   },
                   [&](const TrendFact& f) {
                       j["measure"] = f.measure;
                       j["value"] = std::string(to_string(f.value));
                       j["subspace"] = preds(f.subspace);
                   },
                   [&](const ExtremeFact& f) {
                       j["measure"] = f.measure;
                       j["value"] = std::string(to_string(f.value));
                       j["focus"] = preds(f.focus);
                       j["subspace"] = preds(f.subspace);
                       j["identifier_key"] = f.identifier_key;
                   },
                   [&](const RankFact& f) {
                       j["measure"] = f.measure;
                       j["value"] = f.value;
                       j["focus"] = preds(f.focus);
                       j["subspace"] = preds(f.subspace);
                       j["identifier_key"] = f.identifier_key;
                   },
                   [&](const AssociationFact& f) {
                       j["measure_x"] = f.measure_x;
                       j["measure_y"] = f.measure_y;
                       j["value"] = std::string(to_string(f.value));
                       if (f.subspace) j["subspace"] = preds(*f.subspace);
                       j["identifier_key"] = f.identifier_key;
                   },
                   [&](const DifferenceFact& f) {
                       j["measure"] = f.measure;
                       j["value"] = f.value.value;
                       j["focus_x"] = predicate_to_json(f.focus_x);
                       j["focus_y"] = predicate_to_json(f.focus_y);
                       j["subspace"] = preds(f.subspace);
                   },
                   [&](const CategorizationFact& f) {
                       j["value"] = f.value;
                       j["subspace"] = preds(f.subspace);
                       j["identifier_key"] = f.identifier_key;
                   },
                   [&](const DistributionFact& f) {
                       j["measure"] = f.measure;
                       j["value"] = f.value;
                       if (f.subspace) j["subspace"] = preds(*f.subspace);
                       j["identifier_key"] = f.identifier_key;
                   },
                   [&](const OutlierFact& f) {
                       j["measure"] = f.measure;
                       if (f.measure_y) j["measure_y"] = *f.measure_y;
                       j["focus"] = predicate_to_json(f.focus);
                       j["subspace"] = preds(f.subspace);
                       j["identifier_key"] = f.identifier_key;
                   },
               },
               spec);
    return j;
}

FactSpec spec_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw SpecParseError(SpecParseError::Kind::UnknownShape, "", "expected an object");
    auto type = fact_type_from_string(string_field(j, "fact_type"));
    if (!type) bad_literal("fact_type", "unknown fact type");
    auto list_field = [&](const char* key) {
        return j.contains(key) ? predicates_from_json(j.at(key), key) : FilterList{};
    };
    auto opt_list_field = [&](const char* key) -> std::optional<FilterList> {
        if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
        return predicates_from_json(j.at(key), key);
    };
    auto value = [&]() -> const nlohmann::json& {
        if (!j.contains("value")) throw SpecParseError(SpecParseError::Kind::UnknownShape, "value", "missing key value");
        return j.at("value");
    };
    auto single = [&](const char* key) {
        if (!j.contains(key)) throw SpecParseError(SpecParseError::Kind::UnknownShape, key, std::string("missing key ") + key);
        const auto& v = j.at(key);
        if (v.is_array() && v.size() == 1) return predicate_from_json(v.front());
        return predicate_from_json(v);
    };
    auto text_value = [&]() {
        const auto& v = value();
        if (v.is_string()) return v.get<std::string>();
        if (v.is_number()) return format_shortest(v.get<double>());
        bad_literal("value", "expected a string");
    };

    switch (*type) {
        case FactType::Value: {
            auto agg = aggregation_from_string(string_field(j, "aggregation"));
            if (!agg) bad_literal("aggregation", "expected average, median or sum");
            return ValueFact{string_field(j, "measure"), number_from_json(value(), "value"), *agg,
                             list_field("subspace"), string_field(j, "identifier_key", false)};
        }
        case FactType::Proportion: {
            std::string v = text_value();
            if (value().is_number()) v += "%";
            auto pct = parse_percent(v);
            if (!pct || pct->value < 0 || pct->value > 100) bad_literal("value", "percentage must lie in [0,100]");
            return ProportionFact{string_field(j, "measure"), v, list_field("focus"), list_field("subspace"),
                                  string_field(j, "identifier_key", false)};
        }
        case FactType::Trend: {
            auto d = direction_from(text_value());
            if (!d) bad_literal("value", "expected increase or decrease");
            return TrendFact{string_field(j, "measure"), *d, list_field("subspace")};
        }
        case FactType::Extreme: {
            auto e = extreme_from(text_value());
            if (!e) bad_literal("value", "expected max or min");
            return ExtremeFact{string_field(j, "measure"), *e, list_field("focus"), list_field("subspace"),
                               string_field(j, "identifier_key", false)};
        }
        case FactType::Rank: {
            const int r = int_field(j, "value");
            if (r < 1) bad_literal("value", "rank must be >= 1");
            return RankFact{string_field(j, "measure"), r, list_field("focus"), list_field("subspace"),
                            string_field(j, "identifier_key", false)};
        }
        case FactType::Association: {
            auto c = correlation_from(text_value());
            if (!c) bad_literal("value", "expected positive or negative");
            return AssociationFact{string_field(j, "measure_x"), string_field(j, "measure_y"), *c,
                                   string_field(j, "identifier_key", false), opt_list_field("subspace")};
        }
        case FactType::Difference:
            return DifferenceFact{string_field(j, "measure"), number_from_json(value(), "value"), single("focus_x"),
                                  single("focus_y"), list_field("subspace")};
        case FactType::Categorization: {
            const int c = int_field(j, "value");
            if (c < 0) bad_literal("value", "count must be non-negative");
            return CategorizationFact{c, list_field("subspace"), string_field(j, "identifier_key", false)};
        }
        case FactType::Distribution: {
            std::string v = text_value();
            if (!parse_skew(v)) bad_literal("value", "expected a left- or right-skew description");
            return DistributionFact{string_field(j, "measure"), v, string_field(j, "identifier_key", false),
                                    opt_list_field("subspace")};
        }
        case FactType::Outlier: {
            OutlierFact f;
            f.measure = string_field(j, "measure");
            if (j.contains("measure_y") && !j.at("measure_y").is_null()) f.measure_y = string_field(j, "measure_y");
            f.focus = single("focus");
            f.subspace = list_field("subspace");
            f.identifier_key = string_field(j, "identifier_key", false);
            return f;
        }
    }
    throw SpecParseError(SpecParseError::Kind::UnknownShape, "", "unknown fact type");
}

FactSpec apply_spec_patch(const FactSpec& spec, const nlohmann::json& fragment) {
    if (!fragment.is_object()) throw SpecParseError(SpecParseError::Kind::UnknownShape, "", "patch must be an object");
    nlohmann::json merged = nlohmann::json::parse(spec_to_json(spec).dump());
    merged.erase("subtype");
    for (const auto& [k, v] : fragment.items()) {
        if (k == "subtype") continue;
        merged[k] = v;
    }
    FactSpec out = spec_from_json(merged);
    // Untouched numeric values keep their written precision.
    if (!fragment.contains("value") && out.index() == spec.index()) {
        std::visit(Overloaded{
                       [&](ValueFact& f) { f.value = std::get<ValueFact>(spec).value; },
                       [&](DifferenceFact& f) { f.value = std::get<DifferenceFact>(spec).value; },
                       [](auto&) {},
                   },
                   out);
    }
    auto restore = [](FilterList& patched, const FilterList& original) {
        for (auto& p : patched)
            for (const auto& o : original)
                if (o.attribute == p.attribute && o.op == p.op && o.literal.as_number() && p.literal.as_number() &&
                    *o.literal.as_number() == *p.literal.as_number() && o.literal.is_number() == p.literal.is_number())
                    p.literal = o.literal;
    };
    restore(subspace_of(out), subspace_of(spec));
    return out;
}

}  // namespace datacheck
