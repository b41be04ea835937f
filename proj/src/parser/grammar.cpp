#include "datacheck/grammar.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <set>

#include "datacheck/literals.hpp"

namespace datacheck {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }
bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

constexpr std::string_view kLeftDouble = "\xE2\x80\x9C";
constexpr std::string_view kRightDouble = "\xE2\x80\x9D";
constexpr std::string_view kRightSingle = "\xE2\x80\x99";

// Returns the byte length of a leading punctuation mark and its normalized form.
std::optional<std::pair<std::size_t, std::string>> leading_mark(std::string_view w) {
    if (w.empty()) return std::nullopt;
    if (starts_with(w, kLeftDouble) || starts_with(w, kRightDouble)) return std::pair{std::size_t{3}, std::string("\"")};
    if (w[0] == '"' || w[0] == '(') return std::pair{std::size_t{1}, std::string(1, w[0])};
    return std::nullopt;
}

std::optional<std::pair<std::size_t, std::string>> trailing_mark(std::string_view w) {
    if (w.empty()) return std::nullopt;
    if (ends_with(w, kLeftDouble) || ends_with(w, kRightDouble)) return std::pair{std::size_t{3}, std::string("\"")};
    static constexpr std::string_view marks = "\",.;:!?)";
    if (marks.find(w.back()) != std::string_view::npos) return std::pair{std::size_t{1}, std::string(1, w.back())};
    return std::nullopt;
}

void split_word(std::string_view text, std::size_t begin, std::size_t end, std::vector<Token>& out) {
    std::vector<Token> back;
    while (begin < end) {
        auto m = leading_mark(text.substr(begin, end - begin));
        if (!m) break;
        out.push_back({m->second, begin, begin + m->first});
        begin += m->first;
    }
    while (end > begin) {
        auto m = trailing_mark(text.substr(begin, end - begin));
        if (!m) break;
        back.push_back({m->second, end - m->first, end});
        end -= m->first;
    }
    if (begin < end) {
        std::string_view word = text.substr(begin, end - begin);
        std::size_t poss = 0;
        if (word.size() > 2 && (ends_with(word, "'s") || ends_with(word, "'S")))
            poss = 2;
        else if (word.size() > 4 && (ends_with(word, "\xE2\x80\x99s") || ends_with(word, "\xE2\x80\x99S")))
            poss = 4;
        if (poss) {
            out.push_back({std::string(word.substr(0, word.size() - poss)), begin, end - poss});
            out.push_back({"'s", end - poss, end});
        } else {
            std::string normalized(word);
            for (std::size_t at; (at = normalized.find(kRightSingle)) != std::string::npos;)
                normalized.replace(at, kRightSingle.size(), "'");
            out.push_back({normalized, begin, end});
        }
    }
    out.insert(out.end(), back.rbegin(), back.rend());
}

std::string lower(std::string_view s) { return to_lower(s); }

bool is_terminal(std::string_view t) { return t == "." || t == "!" || t == "?"; }

bool eq_ci(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    return true;
}

const std::map<std::string, FactType>& type_names() {
    static const std::map<std::string, FactType> names = [] {
        std::map<std::string, FactType> m;
        for (FactType t : all_fact_types()) {
            std::string n(to_string(t));
            for (auto& c : n) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
            m[n] = t;
        }
        return m;
    }();
    return names;
}

const std::map<SlotType, std::pair<std::string, std::vector<std::string>>>& slot_kinds() {
    // default kind, allowed kinds
    static const std::map<SlotType, std::pair<std::string, std::vector<std::string>>> kinds = {
        {SlotType::Measure, {"m", {"m", "x", "y"}}},
        {SlotType::Value,
         {"number", {"number", "percent", "ordinal", "count", "direction", "extreme", "corr", "skew"}}},
        {SlotType::Agg, {"", {""}}},
        {SlotType::Entity, {"focus", {"focus", "x", "y"}}},
        {SlotType::Filter, {"scope", {"scope", "bare"}}},
        {SlotType::IdKey, {"noun", {"noun", "singular", "alias"}}},
        {SlotType::Time, {"start", {"start", "end", "period"}}},
    };
    return kinds;
}

std::optional<SlotType> slot_type_from(std::string_view name) {
    if (name == "MEASURE") return SlotType::Measure;
    if (name == "VALUE") return SlotType::Value;
    if (name == "AGG") return SlotType::Agg;
    if (name == "ENTITY") return SlotType::Entity;
    if (name == "FILTER") return SlotType::Filter;
    if (name == "IDKEY") return SlotType::IdKey;
    if (name == "TIME") return SlotType::Time;
    return std::nullopt;
}

void add_literal_words(std::string_view text, std::size_t line, std::vector<PatternElement>& out) {
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        const std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) ++i;
        if (start == i) break;
        std::string_view word = text.substr(start, i - start);
        if (word.size() > 2 && word.front() == '(' && word.back() == ')' &&
            word.find('|') != std::string_view::npos) {
            LiteralToken alt;
            std::string_view inner = word.substr(1, word.size() - 2);
            std::size_t pos = 0;
            while (true) {
                const auto bar = inner.find('|', pos);
                std::string a = lower(inner.substr(pos, bar == std::string_view::npos ? inner.npos : bar - pos));
                if (a.empty()) throw GrammarError(line, "empty alternative in " + std::string(word));
                alt.alternatives.push_back(a);
                if (bar == std::string_view::npos) break;
                pos = bar + 1;
            }
            alt.display = alt.alternatives.front();
            out.emplace_back(std::move(alt));
            continue;
        }
        for (const auto& tok : tokenize(word)) out.emplace_back(LiteralToken{{lower(tok.text)}, tok.text});
    }
}

std::vector<PatternElement> parse_pattern(std::string_view pattern, std::size_t line) {
    std::vector<PatternElement> out;
    std::size_t pos = 0;
    while (pos < pattern.size()) {
        const auto open = pattern.find('{', pos);
        add_literal_words(pattern.substr(pos, open == std::string_view::npos ? pattern.npos : open - pos), line, out);
        if (open == std::string_view::npos) break;
        const auto close = pattern.find('}', open);
        if (close == std::string_view::npos) throw GrammarError(line, "unterminated slot");
        std::string body(pattern.substr(open + 1, close - open - 1));
        const auto colon = body.find(':');
        const std::string name = body.substr(0, colon);
        auto type = slot_type_from(name);
        if (!type) throw GrammarError(line, "unknown slot " + name);
        const auto& [def, allowed] = slot_kinds().at(*type);
        std::string kind = colon == std::string::npos ? def : lower(body.substr(colon + 1));
        if (std::find(allowed.begin(), allowed.end(), kind) == allowed.end())
            throw GrammarError(line, "unknown kind " + kind + " for slot " + name);
        out.emplace_back(Slot{*type, kind});
        pos = close + 1;
    }
    if (out.empty()) throw GrammarError(line, "empty pattern");
    return out;
}

// --- slot shapes ---------------------------------------------------------------

const std::set<std::string>& period_words() {
    static const std::set<std::string> w = {"annual", "yearly", "monthly", "quarterly", "weekly", "daily"};
    return w;
}

std::size_t max_span(const Slot& s) {
    switch (s.type) {
        case SlotType::Measure: return 6;
        case SlotType::IdKey: return 4;
        case SlotType::Entity: return 8;
        case SlotType::Filter: return 32;
        case SlotType::Time: return s.kind == "period" ? 1 : 3;
        case SlotType::Value: return s.kind == "number" || s.kind == "percent" ? 2 : 1;
        case SlotType::Agg: return 1;
    }
    return 1;
}

std::string joined(std::span<const Token> toks) {
    std::string out;
    for (const auto& t : toks) {
        if (!out.empty()) out += ' ';
        out += t.text;
    }
    return out;
}

bool free_token_ok(const Slot& s, std::string_view t) {
    if (is_terminal(t) || t == ";" || t == "\"") return false;
    if (s.type == SlotType::Filter) return true;
    return t != "," && t != "'s" && !eq_ci(t, "and") && t != "(" && t != ")";
}

bool shape_ok(const Slot& s, std::span<const Token> toks) {
    const std::string text = joined(toks);
    switch (s.type) {
        case SlotType::Measure:
        case SlotType::IdKey:
        case SlotType::Entity:
        case SlotType::Filter:
            return std::all_of(toks.begin(), toks.end(), [&](const Token& t) { return free_token_ok(s, t.text); });
        case SlotType::Agg: return aggregation_word(text).has_value();
        case SlotType::Time:
            if (s.kind == "period") return period_words().count(lower(text)) > 0;
            return parse_date(text).has_value();
        case SlotType::Value:
            if (s.kind == "number") return parse_claimed_number(text).has_value();
            if (s.kind == "percent") {
                if (toks.size() == 2 && !eq_ci(toks[1].text, "percent")) return false;
                return parse_percent(text).has_value();
            }
            if (s.kind == "ordinal") return parse_ordinal(text).has_value();
            if (s.kind == "count") {
                if (parse_number_word(text)) return true;
                auto n = Number::parse(text);
                return n && n->decimals == 0 && n->value >= 0;
            }
            if (s.kind == "direction") return direction_word(text).has_value();
            if (s.kind == "extreme") return extreme_word(text).has_value();
            if (s.kind == "corr") return correlation_word(text).has_value();
            if (s.kind == "skew") return skew_word(text).has_value();
            return false;
    }
    return false;
}

struct Matcher {
    std::span<const PatternElement> elements;
    std::span<const Token> tokens;
    std::size_t limit;
    const Template* tmpl;
    std::vector<SlotMatch> current;
    std::vector<TemplateMatch> out;

    void run(std::size_t e, std::size_t t) {
        if (out.size() >= limit) return;
        if (e == elements.size()) {
            if (t == tokens.size()) out.push_back({tmpl, current});
            return;
        }
        if (const auto* lit = std::get_if<LiteralToken>(&elements[e])) {
            if (t >= tokens.size()) return;
            const std::string tok = lower(tokens[t].text);
            if (std::find(lit->alternatives.begin(), lit->alternatives.end(), tok) == lit->alternatives.end()) return;
            run(e + 1, t + 1);
            return;
        }
        const Slot& slot = std::get<Slot>(elements[e]);
        // Tokens still needed by the literals that follow.
        std::size_t min_rest = 0;
        for (std::size_t k = e + 1; k < elements.size(); ++k) min_rest += 1;
        const std::size_t avail = tokens.size() - t;
        const std::size_t upper = std::min(max_span(slot), avail >= min_rest ? avail - min_rest : 0);
        for (std::size_t len = 1; len <= upper; ++len) {
            if (!shape_ok(slot, tokens.subspan(t, len))) {
                if (slot.type == SlotType::Measure || slot.type == SlotType::IdKey || slot.type == SlotType::Entity ||
                    slot.type == SlotType::Filter) {
                    // a forbidden token ends every longer span too
                    if (!free_token_ok(slot, tokens[t + len - 1].text)) break;
                }
                continue;
            }
            current.push_back({slot, t, t + len});
            run(e + 1, t + len);
            current.pop_back();
            if (out.size() >= limit) return;
        }
    }
};

// --- filter phrases ---------------------------------------------------------------

struct OpPhrase {
    CompareOp op;
    std::vector<std::string> words;
    bool date_only = false;
};

const std::vector<OpPhrase>& op_phrases() {
    static const std::vector<OpPhrase> phrases = [] {
        std::vector<OpPhrase> v = {
            {CompareOp::Gt, {"of", "more", "than"}},   {CompareOp::Ge, {"of", "at", "least"}},
            {CompareOp::Lt, {"of", "less", "than"}},   {CompareOp::Le, {"of", "at", "most"}},
            {CompareOp::Ne, {"not", "equal", "to"}},   {CompareOp::Gt, {"more", "than"}},
            {CompareOp::Gt, {"greater", "than"}},      {CompareOp::Ge, {"at", "least"}},
            {CompareOp::Lt, {"less", "than"}},         {CompareOp::Lt, {"fewer", "than"}},
            {CompareOp::Le, {"at", "most"}},           {CompareOp::Ne, {"other", "than"}},
            {CompareOp::Eq, {"equal", "to"}},          {CompareOp::Gt, {"over"}},
            {CompareOp::Gt, {"above"}},                {CompareOp::Lt, {"under"}},
            {CompareOp::Lt, {"below"}},                {CompareOp::Gt, {"after"}, true},
            {CompareOp::Lt, {"before"}, true},         {CompareOp::Ge, {"since"}, true},
            {CompareOp::Le, {"until"}, true},          {CompareOp::Eq, {"of"}},
            {CompareOp::Eq, {"is"}},
        };
        std::stable_sort(v.begin(), v.end(),
                         [](const OpPhrase& a, const OpPhrase& b) { return a.words.size() > b.words.size(); });
        return v;
    }();
    return phrases;
}

std::string_view render_op(CompareOp op) {
    switch (op) {
        case CompareOp::Eq: return "of";
        case CompareOp::Ne: return "other than";
        case CompareOp::Gt: return "over";
        case CompareOp::Ge: return "of at least";
        case CompareOp::Lt: return "under";
        case CompareOp::Le: return "of at most";
    }
    return "of";
}

bool phrase_at(std::span<const Token> toks, std::size_t p, const std::vector<std::string>& words) {
    if (p + words.size() > toks.size()) return false;
    for (std::size_t k = 0; k < words.size(); ++k)
        if (!eq_ci(toks[p + k].text, words[k])) return false;
    return true;
}

std::string source_text(std::span<const Token> toks, std::string_view source) {
    if (toks.empty()) return {};
    return std::string(source.substr(toks.front().begin, toks.back().end - toks.front().begin));
}

std::optional<Literal> typed_literal(const Dataset& ds, std::size_t col, CompareOp op, const std::string& text) {
    const std::string t = trim(text);
    if (t.empty()) return std::nullopt;
    switch (ds.columns[col].kind) {
        case ColumnKind::Numeric:
            if (auto n = parse_claimed_number(t)) return Literal{*n};
            return std::nullopt;
        case ColumnKind::Temporal:
            if (parse_date(t)) return Literal::text(t);
            return std::nullopt;
        case ColumnKind::Categorical:
            if (is_ordering(op)) return std::nullopt;
            if (auto c = canonical_category(ds, col, t)) return Literal::text(*c);
            return Literal::text(t);
    }
    return std::nullopt;
}

std::optional<FilterPredicate> parse_piece(std::span<const Token> toks, std::string_view source, const Dataset& ds) {
    if (!toks.empty() && (eq_ci(toks[0].text, "a") || eq_ci(toks[0].text, "an") || eq_ci(toks[0].text, "the")))
        toks = toks.subspan(1);
    if (toks.empty()) return std::nullopt;
    for (std::size_t p = 1; p + 1 < toks.size(); ++p) {
        for (const auto& phrase : op_phrases()) {
            if (!phrase_at(toks, p, phrase.words) || p + phrase.words.size() >= toks.size()) continue;
            const std::string attr = source_text(toks.subspan(0, p), source);
            const auto col = ds.resolve(attr);
            if (!col) continue;
            if (phrase.date_only && ds.columns[*col].kind != ColumnKind::Temporal) continue;
            auto lit = typed_literal(ds, *col, phrase.op, source_text(toks.subspan(p + phrase.words.size()), source));
            if (!lit) continue;
            return FilterPredicate{ds.columns[*col].name, phrase.op, *lit};
        }
    }
    for (const auto& phrase : op_phrases()) {
        if (!phrase.date_only || !phrase_at(toks, 0, phrase.words) || toks.size() <= phrase.words.size()) continue;
        auto col = time_column(ds);
        if (!col) break;
        const std::string lit = source_text(toks.subspan(phrase.words.size()), source);
        if (!parse_date(lit)) continue;
        return FilterPredicate{ds.columns[*col].name, phrase.op, Literal::text(trim(lit))};
    }
    if (toks.size() <= 4) return lookup_value(ds, source_text(toks, source));
    return std::nullopt;
}

bool is_separator(const Token& t) { return t.text == "," || eq_ci(t.text, "and"); }

std::optional<FilterList> parse_pieces(std::span<const Token> toks, std::size_t i, std::string_view source,
                                       const Dataset& ds) {
    while (i < toks.size() && is_separator(toks[i])) ++i;
    if (i >= toks.size()) return std::nullopt;
    for (std::size_t j = i + 1; j <= toks.size(); ++j) {
        if (j < toks.size() && !is_separator(toks[j])) continue;
        auto piece = parse_piece(toks.subspan(i, j - i), source, ds);
        if (!piece) continue;
        if (j == toks.size()) return FilterList{*piece};
        if (auto rest = parse_pieces(toks, j + 1, source, ds)) {
            rest->insert(rest->begin(), *piece);
            return rest;
        }
    }
    return std::nullopt;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        const std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) ++i;
        if (start < i) split_word(text, start, i, out);
    }
    return out;
}

std::string detokenize(std::span<const std::string> tokens) {
    static const std::set<std::string> glue_left = {".", ",", ";", ":", "!", "?", "%", "'s", ")"};
    std::string out;
    bool in_quote = false;
    bool attach = false;
    for (const auto& t : tokens) {
        if (t.empty()) continue;
        if (t == "\"") {
            if (!in_quote) {
                if (!out.empty()) out += ' ';
                attach = true;
            }
            out += '"';
            in_quote = !in_quote;
            continue;
        }
        if (!out.empty() && !attach && !glue_left.count(t)) out += ' ';
        out += t;
        attach = t == "(";
    }
    return out;
}

std::vector<CharSpan> split_sentences(std::string_view doc) {
    std::vector<CharSpan> out;
    bool in_quote = false;
    std::size_t start = 0;
    auto emit = [&](std::size_t end) {
        std::size_t b = start;
        while (b < end && is_space(doc[b])) ++b;
        std::size_t e = end;
        while (e > b && is_space(doc[e - 1])) --e;
        if (e > b) out.push_back({b, e});
        start = end;
    };
    for (std::size_t i = 0; i < doc.size(); ++i) {
        if (doc[i] == '"' || starts_with(doc.substr(i), kLeftDouble) || starts_with(doc.substr(i), kRightDouble)) {
            in_quote = !in_quote;
            continue;
        }
        if (in_quote) continue;
        const char c = doc[i];
        if ((c == '.' || c == '!' || c == '?') && (i + 1 == doc.size() || is_space(doc[i + 1]))) emit(i + 1);
    }
    emit(doc.size());
    return out;
}

std::string_view to_string(SlotType type) {
    switch (type) {
        case SlotType::Measure: return "MEASURE";
        case SlotType::Value: return "VALUE";
        case SlotType::Agg: return "AGG";
        case SlotType::Entity: return "ENTITY";
        case SlotType::Filter: return "FILTER";
        case SlotType::IdKey: return "IDKEY";
        case SlotType::Time: return "TIME";
    }
    return "MEASURE";
}

TemplateGrammar TemplateGrammar::parse(std::string_view text) {
    TemplateGrammar g;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    std::set<std::pair<FactType, std::string>> seen;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string line = trim(text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos));
        ++line_no;
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        if (line.empty() || line[0] == '#') continue;
        const auto sep = line.find("::=");
        if (sep == std::string::npos) throw GrammarError(line_no, "expected 'TYPE ::= pattern'");
        const std::string type_name = trim(line.substr(0, sep));
        const auto it = type_names().find(type_name);
        if (it == type_names().end()) throw GrammarError(line_no, "unknown fact type " + type_name);
        Template t;
        t.type = it->second;
        t.pattern = trim(line.substr(sep + 3));
        t.elements = parse_pattern(t.pattern, line_no);
        t.line = line_no;
        if (!seen.insert({t.type, t.pattern}).second) throw GrammarError(line_no, "duplicate template");
        g.templates_.push_back(std::move(t));
    }
    std::sort(g.templates_.begin(), g.templates_.end(), [](const Template& a, const Template& b) {
        if (a.type != b.type) return a.type < b.type;
        return a.pattern < b.pattern;
    });
    return g;
}

const TemplateGrammar& TemplateGrammar::builtin() {
    static const TemplateGrammar g = parse(builtin_text());
    return g;
}

std::vector<const Template*> TemplateGrammar::for_type(FactType type) const {
    std::vector<const Template*> out;
    for (const auto& t : templates_)
        if (t.type == type) out.push_back(&t);
    return out;
}

std::vector<const Template*> TemplateGrammar::for_subtype(Subtype subtype) const {
    std::vector<const Template*> out;
    for (const Template* t : for_type(fact_type_of(subtype))) {
        if (fact_type_of(subtype) == FactType::Outlier) {
            const bool bivariate = std::any_of(t->elements.begin(), t->elements.end(), [](const PatternElement& e) {
                const auto* s = std::get_if<Slot>(&e);
                return s && s->type == SlotType::Measure && s->kind == "y";
            });
            if (bivariate != (subtype == Subtype::Outlier2D)) continue;
        }
        out.push_back(t);
    }
    return out;
}

std::vector<TemplateMatch> match_template(const Template& tmpl, std::span<const Token> tokens, std::size_t limit) {
    std::span<const PatternElement> elements(tmpl.elements);
    while (!elements.empty()) {
        const auto* lit = std::get_if<LiteralToken>(&elements.back());
        if (!lit || lit->alternatives.size() != 1 || !is_terminal(lit->alternatives[0])) break;
        elements = elements.first(elements.size() - 1);
    }
    while (!tokens.empty() && is_terminal(tokens.back().text)) tokens = tokens.first(tokens.size() - 1);
    Matcher m{elements, tokens, limit, &tmpl, {}, {}};
    m.run(0, 0);
    return std::move(m.out);
}

// --- vocabulary ------------------------------------------------------------------

std::optional<Aggregation> aggregation_word(std::string_view word) {
    const std::string w = lower(trim(word));
    if (w == "average" || w == "mean") return Aggregation::Average;
    if (w == "median") return Aggregation::Median;
    if (w == "total" || w == "sum" || w == "combined") return Aggregation::Sum;
    return std::nullopt;
}

std::string_view aggregation_phrase(Aggregation agg) {
    switch (agg) {
        case Aggregation::Average: return "average";
        case Aggregation::Median: return "median";
        case Aggregation::Sum: return "total";
    }
    return "average";
}

std::optional<TrendDirection> direction_word(std::string_view word) {
    const std::string w = lower(trim(word));
    if (w == "increase" || w == "rise" || w == "growth" || w == "gain") return TrendDirection::Increase;
    if (w == "decrease" || w == "decline" || w == "drop" || w == "fall") return TrendDirection::Decrease;
    return std::nullopt;
}

std::optional<ExtremeKind> extreme_word(std::string_view word) {
    const std::string w = lower(trim(word));
    if (w == "highest" || w == "largest" || w == "greatest" || w == "maximum") return ExtremeKind::Max;
    if (w == "lowest" || w == "smallest" || w == "least" || w == "minimum") return ExtremeKind::Min;
    return std::nullopt;
}

std::string_view extreme_phrase(ExtremeKind kind) { return kind == ExtremeKind::Max ? "highest" : "lowest"; }

std::optional<Correlation> correlation_word(std::string_view word) {
    const std::string w = lower(trim(word));
    if (w == "positive") return Correlation::Positive;
    if (w == "negative") return Correlation::Negative;
    return std::nullopt;
}

std::optional<Skew> skew_word(std::string_view word) {
    const std::string w = lower(trim(word));
    if (w == "right-skew" || w == "right-skewed" || w == "positively-skewed") return Skew::Right;
    if (w == "left-skew" || w == "left-skewed" || w == "negatively-skewed") return Skew::Left;
    return std::nullopt;
}

std::string_view skew_phrase(Skew skew) { return skew == Skew::Right ? "right-skew" : "left-skew"; }

std::string pluralize(std::string_view noun) {
    std::string n = trim(noun);
    if (n.empty()) return n;
    const char last = static_cast<char>(std::tolower(static_cast<unsigned char>(n.back())));
    const char prev = n.size() > 1 ? static_cast<char>(std::tolower(static_cast<unsigned char>(n[n.size() - 2]))) : ' ';
    if (last == 'y' && std::string_view("aeiou").find(prev) == std::string_view::npos) return n.substr(0, n.size() - 1) + "ies";
    if (last == 's' || last == 'x' || last == 'z' || ends_with(lower(n), "ch") || ends_with(lower(n), "sh")) return n + "es";
    return n + "s";
}

std::string singularize(std::string_view noun) {
    std::string n = trim(noun);
    const std::string l = lower(n);
    // "-ie" nouns whose plural would otherwise lose the e.
    static const std::set<std::string> ie_plurals = {"movies",  "cookies", "zombies", "rookies", "calories",
                                                     "selfies", "pies",    "ties",    "lies",    "brownies"};
    for (const auto& w : ie_plurals)
        if (l == w || ends_with(l, " " + w)) return n.substr(0, n.size() - 1);
    if (ends_with(l, "ies") && n.size() > 3) return n.substr(0, n.size() - 3) + "y";
    if (ends_with(l, "ches") || ends_with(l, "shes") || ends_with(l, "sses") || ends_with(l, "xes") ||
        ends_with(l, "zes"))
        return n.substr(0, n.size() - 2);
    if (ends_with(l, "s") && !ends_with(l, "ss") && n.size() > 1) return n.substr(0, n.size() - 1);
    return n;
}

std::string attribute_phrase(std::string_view column) {
    std::string out = trim(column);
    std::replace(out.begin(), out.end(), '_', ' ');
    return out;
}

std::string date_phrase(const Date& d) {
    static constexpr std::array<std::string_view, 12> months = {"January", "February", "March",     "April",
                                                                "May",     "June",     "July",      "August",
                                                                "September", "October", "November", "December"};
    if (d.day == 1) return std::string(months[static_cast<std::size_t>(d.month - 1)]) + " " + std::to_string(d.year);
    return d.iso();
}

std::optional<std::string> canonical_category(const Dataset& ds, std::size_t column, std::string_view text) {
    const std::string t = trim(text);
    for (const auto& row : ds.rows)
        if (const auto* s = std::get_if<std::string>(&row[column]); s && eq_ci(*s, t)) return *s;
    return std::nullopt;
}

std::optional<FilterPredicate> lookup_value(const Dataset& ds, std::string_view text) {
    const std::string t = trim(text);
    if (t.empty()) return std::nullopt;
    std::optional<FilterPredicate> found;
    std::size_t hits = 0;
    for (std::size_t c = 0; c < ds.columns.size(); ++c) {
        if (ds.columns[c].kind != ColumnKind::Categorical) continue;
        if (auto v = canonical_category(ds, c, t)) {
            ++hits;
            found = FilterPredicate{ds.columns[c].name, CompareOp::Eq, Literal::text(*v)};
        }
    }
    if (hits == 1) return found;
    if (hits > 1) return std::nullopt;
    auto n = parse_claimed_number(t);
    if (!n) return std::nullopt;
    for (std::size_t c = 0; c < ds.columns.size(); ++c) {
        if (ds.columns[c].kind != ColumnKind::Numeric) continue;
        const bool present = std::any_of(ds.rows.begin(), ds.rows.end(), [&](const Row& r) {
            auto v = numeric_value(r[c]);
            return v && *v == n->value;
        });
        if (present) {
            ++hits;
            found = FilterPredicate{ds.columns[c].name, CompareOp::Eq, Literal{*n}};
        }
    }
    if (hits == 1) return found;
    return std::nullopt;
}

std::optional<std::size_t> time_column(const Dataset& ds) {
    for (std::size_t c = 0; c < ds.columns.size(); ++c)
        if (ds.columns[c].kind == ColumnKind::Temporal) return c;
    return std::nullopt;
}

std::optional<FilterList> parse_filter_phrase(std::span<const Token> tokens, std::string_view source,
                                              const Dataset& dataset, std::string* error) {
    auto result = parse_pieces(tokens, 0, source, dataset);
    if (!result && error) *error = "cannot interpret filter '" + source_text(tokens, source) + "'";
    return result;
}

std::string render_filter_phrase(const FilterList& predicates, bool bare) {
    if (bare && predicates.size() == 1 && predicates[0].op == CompareOp::Eq) return predicates[0].literal.text();
    std::string out;
    for (std::size_t i = 0; i < predicates.size(); ++i) {
        if (i) out += " and ";
        const auto& p = predicates[i];
        out += attribute_phrase(p.attribute) + " " + std::string(render_op(p.op)) + " " + p.literal.text();
    }
    return out;
}

std::optional<Number> parse_claimed_number(std::string_view text) {
    const std::string t = trim(text);
    if (t.empty()) return std::nullopt;
    const auto space = t.rfind(' ');
    if (space != std::string::npos) {
        auto scale = scale_word(t.substr(space + 1));
        if (!scale) return std::nullopt;
        auto base = parse_claimed_number(t.substr(0, space));
        if (!base || base->value != base->value) return std::nullopt;
        const double v = base->value * *scale;
        int exp = 0;
        for (double s = *scale; s > 1; s /= 10) ++exp;
        return Number{v, std::max(0, base->decimals - exp)};
    }
    if (auto n = Number::parse(t)) return n;
    if (t.back() == '%') return std::nullopt;
    auto v = parse_number(t);
    if (!v) return std::nullopt;
    int decimals = 0;
    const auto dot = t.find('.');
    if (dot != std::string::npos)
        for (std::size_t i = dot + 1; i < t.size() && std::isdigit(static_cast<unsigned char>(t[i])); ++i) ++decimals;
    return Number{*v, decimals};
}

// --- lint ---------------------------------------------------------------------------

namespace {

struct TypeRules {
    std::vector<std::string> required;
    std::vector<std::string> allowed;
};

std::string slot_key(const Slot& s) {
    return std::string(to_string(s.type)) + (s.kind.empty() ? "" : ":" + s.kind);
}

const std::map<FactType, TypeRules>& type_rules() {
    static const std::vector<std::string> filters = {"FILTER:scope", "FILTER:bare"};
    static const std::vector<std::string> idkeys = {"IDKEY:noun", "IDKEY:singular", "IDKEY:alias"};
    auto with = [](std::vector<std::string> base, std::initializer_list<const std::vector<std::string>*> extra) {
        for (const auto* e : extra) base.insert(base.end(), e->begin(), e->end());
        return base;
    };
    static const std::map<FactType, TypeRules> rules = {
        {FactType::Value, {{"MEASURE:m", "AGG", "VALUE:number"}, with({"MEASURE:m", "AGG", "VALUE:number"}, {&filters, &idkeys})}},
        {FactType::Proportion,
         {{"MEASURE:m", "VALUE:percent", "ENTITY:focus"},
          with({"MEASURE:m", "VALUE:percent", "ENTITY:focus"}, {&filters, &idkeys})}},
        {FactType::Trend,
         {{"MEASURE:m", "VALUE:direction"},
          with({"MEASURE:m", "VALUE:direction", "TIME:start", "TIME:end", "TIME:period"}, {&filters})}},
        {FactType::Extreme,
         {{"MEASURE:m", "VALUE:extreme", "ENTITY:focus"},
          with({"MEASURE:m", "VALUE:extreme", "ENTITY:focus"}, {&filters, &idkeys})}},
        {FactType::Rank,
         {{"MEASURE:m", "VALUE:ordinal", "ENTITY:focus"},
          with({"MEASURE:m", "VALUE:ordinal", "ENTITY:focus"}, {&filters, &idkeys})}},
        {FactType::Association,
         {{"MEASURE:x", "MEASURE:y", "VALUE:corr"}, with({"MEASURE:x", "MEASURE:y", "VALUE:corr"}, {&filters, &idkeys})}},
        {FactType::Difference,
         {{"MEASURE:m", "VALUE:number", "ENTITY:x", "ENTITY:y"},
          with({"MEASURE:m", "VALUE:number", "ENTITY:x", "ENTITY:y"}, {&filters})}},
        {FactType::Categorization, {{"VALUE:count"}, with({"VALUE:count"}, {&filters, &idkeys})}},
        {FactType::Distribution, {{"MEASURE:m", "VALUE:skew"}, with({"MEASURE:m", "VALUE:skew"}, {&filters, &idkeys})}},
        {FactType::Outlier,
         {{"ENTITY:focus"}, with({"MEASURE:m", "MEASURE:x", "MEASURE:y", "ENTITY:focus"}, {&filters, &idkeys})}},
    };
    return rules;
}

std::string sample_for(const Slot& s) {
    switch (s.type) {
        case SlotType::Measure: return s.kind == "y" ? "beta" : "alpha";
        case SlotType::IdKey: return s.kind == "singular" ? "item" : "items";
        case SlotType::Entity: return s.kind == "y" ? "Yod" : "Zed";
        case SlotType::Filter: return "gamma";
        case SlotType::Agg: return "average";
        case SlotType::Time: return s.kind == "period" ? "annual" : (s.kind == "end" ? "March 2021" : "March 2020");
        case SlotType::Value:
            if (s.kind == "number") return "6.1";
            if (s.kind == "percent") return "34.8%";
            if (s.kind == "ordinal") return "4th";
            if (s.kind == "count") return "seven";
            if (s.kind == "direction") return "increase";
            if (s.kind == "extreme") return "highest";
            if (s.kind == "corr") return "positive";
            if (s.kind == "skew") return "right-skew";
    }
    return "x";
}

}  // namespace

std::vector<std::string> lint_grammar(const TemplateGrammar& grammar) {
    std::vector<std::string> issues;
    for (const auto& t : grammar.templates()) {
        const auto& rules = type_rules().at(t.type);
        std::map<std::string, int> counts;
        std::vector<std::string> sample;
        for (std::size_t i = 0; i < t.elements.size(); ++i) {
            if (const auto* lit = std::get_if<LiteralToken>(&t.elements[i])) {
                std::string word = lit->alternatives.front();
                if (lit->alternatives.size() > 1 && i + 1 < t.elements.size()) word = lit->alternatives.front();
                sample.push_back(word);
                continue;
            }
            const Slot& s = std::get<Slot>(t.elements[i]);
            const std::string key = slot_key(s);
            ++counts[key];
            if (std::find(rules.allowed.begin(), rules.allowed.end(), key) == rules.allowed.end())
                issues.push_back("line " + std::to_string(t.line) + ": slot " + key + " not allowed for " +
                                 std::string(to_string(t.type)));
            else if (s.type != SlotType::Filter && s.kind != "alias" && counts[key] > 1)
                issues.push_back("line " + std::to_string(t.line) + ": slot " + key + " repeated");
            sample.push_back(sample_for(s));
        }
        for (const auto& req : rules.required)
            if (!counts.count(req))
                issues.push_back("line " + std::to_string(t.line) + ": missing required slot " + req);
        if (t.type == FactType::Outlier && !counts.count("MEASURE:m") &&
            !(counts.count("MEASURE:x") && counts.count("MEASURE:y")))
            issues.push_back("line " + std::to_string(t.line) + ": outlier needs MEASURE or MEASURE:x and MEASURE:y");
        if (t.type == FactType::Categorization && !counts.count("FILTER:scope") && !counts.count("FILTER:bare"))
            issues.push_back("line " + std::to_string(t.line) + ": categorization needs a FILTER");

        const std::string sentence = detokenize(sample);
        const auto tokens = tokenize(sentence);
        for (const auto& other : grammar.templates()) {
            if (other.type == t.type) continue;
            if (!match_template(other, tokens, 1).empty())
                issues.push_back("line " + std::to_string(t.line) + " and line " + std::to_string(other.line) +
                                 ": sample '" + sentence + "' matches templates of different types");
        }
    }
    return issues;
}

}  // namespace datacheck
