#include <algorithm>
#include <cctype>
#include <set>

#include "datacheck/literals.hpp"
#include "datacheck/parser.hpp"

namespace datacheck {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string span_text(std::span<const Token> toks, std::string_view source) {
    if (toks.empty()) return {};
    return std::string(source.substr(toks.front().begin, toks.back().end - toks.front().begin));
}

bool is_boundary(const Token& t) {
    const std::string l = to_lower(t.text);
    return l == "," || l == ";" || l == "and" || l == "while" || l == "whereas";
}

[[noreturn]] void unresolved(std::string_view slot, const std::string& text, const std::string& why = {}) {
    throw ParseError(ParseError::Kind::UnresolvedAttribute, std::string(slot),
                     "UnresolvedAttribute(" + std::string(slot) + "): '" + text + "'" + (why.empty() ? "" : " " + why));
}

[[noreturn]] void literal_error(std::string_view slot, const std::string& text) {
    throw ParseError(ParseError::Kind::LiteralParse, std::string(slot),
                     "LiteralParse(" + std::string(slot) + "): '" + text + "'");
}

// Fields collected from slots before they are assembled into an arm.
struct Bound {
    std::optional<std::string> measure, measure_x, measure_y;
    std::optional<Aggregation> aggregation;
    std::optional<Number> number;
    std::optional<std::string> percent;
    std::optional<int> ordinal, count;
    std::optional<TrendDirection> direction;
    std::optional<ExtremeKind> extreme;
    std::optional<Correlation> correlation;
    std::optional<std::string> skew;
    std::optional<FilterPredicate> entity, entity_x, entity_y;
    FilterList subspace;
    bool has_filter_slot = false;
    std::string identifier_key;
};

template <class T>
const T& need(const std::optional<T>& v, const char* what) {
    if (!v) throw ParseError(ParseError::Kind::NoTemplateMatch, what, std::string("template lacks slot ") + what);
    return *v;
}

FactSpec assemble(FactType type, Bound b) {
    switch (type) {
        case FactType::Value:
            return ValueFact{need(b.measure, "MEASURE"), need(b.number, "VALUE"), need(b.aggregation, "AGG"),
                             b.subspace, b.identifier_key};
        case FactType::Proportion:
            return ProportionFact{need(b.measure, "MEASURE"), need(b.percent, "VALUE"), {need(b.entity, "ENTITY")},
                                  b.subspace, b.identifier_key};
        case FactType::Trend: return TrendFact{need(b.measure, "MEASURE"), need(b.direction, "VALUE"), b.subspace};
        case FactType::Extreme:
            return ExtremeFact{need(b.measure, "MEASURE"), need(b.extreme, "VALUE"), {need(b.entity, "ENTITY")},
                               b.subspace, b.identifier_key};
        case FactType::Rank:
            return RankFact{need(b.measure, "MEASURE"), need(b.ordinal, "VALUE"), {need(b.entity, "ENTITY")},
                            b.subspace, b.identifier_key};
        case FactType::Association: {
            AssociationFact f{need(b.measure_x, "MEASURE"), need(b.measure_y, "MEASURE"),
                              need(b.correlation, "VALUE"), b.identifier_key, std::nullopt};
            if (b.has_filter_slot) f.subspace = b.subspace;
            return f;
        }
        case FactType::Difference:
            return DifferenceFact{need(b.measure, "MEASURE"), need(b.number, "VALUE"), need(b.entity_x, "ENTITY"),
                                  need(b.entity_y, "ENTITY"), b.subspace};
        case FactType::Categorization: return CategorizationFact{need(b.count, "VALUE"), b.subspace, b.identifier_key};
        case FactType::Distribution: {
            DistributionFact f{need(b.measure, "MEASURE"), need(b.skew, "VALUE"), b.identifier_key, std::nullopt};
            if (b.has_filter_slot) f.subspace = b.subspace;
            return f;
        }
        case FactType::Outlier: {
            OutlierFact f;
            if (b.measure) {
                f.measure = *b.measure;
            } else {
                f.measure = need(b.measure_x, "MEASURE");
                f.measure_y = need(b.measure_y, "MEASURE");
            }
            f.focus = need(b.entity, "ENTITY");
            f.subspace = b.subspace;
            f.identifier_key = b.identifier_key;
            return f;
        }
    }
    throw ParseError(ParseError::Kind::NoTemplateMatch, "", "unknown fact type");
}

std::string resolve_measure(const Dataset& ds, const std::string& text) {
    auto col = ds.resolve(text);
    if (!col) unresolved("MEASURE", text);
    return ds.columns[*col].name;
}

std::string choose_article(const LiteralToken& lit, const std::string& next) {
    const bool has_a = std::find(lit.alternatives.begin(), lit.alternatives.end(), "a") != lit.alternatives.end();
    const bool has_an = std::find(lit.alternatives.begin(), lit.alternatives.end(), "an") != lit.alternatives.end();
    if (has_a && has_an && !next.empty()) {
        const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(next[0])));
        return std::string_view("aeiou").find(c) != std::string_view::npos ? "an" : "a";
    }
    return lit.display;
}

}  // namespace

std::string_view ParseError::kind_name() const {
    switch (kind_) {
        case Kind::NoTemplateMatch: return "NoTemplateMatch";
        case Kind::UnresolvedAttribute: return "UnresolvedAttribute";
        case Kind::LiteralParse: return "LiteralParse";
        case Kind::Backend: return "Backend";
    }
    return "NoTemplateMatch";
}

std::string_view to_string(Compoundness c) { return c == Compoundness::Single ? "single" : "compound"; }

std::string apply_substitutions(std::string_view text, const SubstitutionMap& map) {
    if (map.empty()) return std::string(text);
    // Keys as lowered token sequences, longest first.
    using Key = std::pair<std::vector<std::string>, const std::string*>;
    std::vector<Key> keys;
    for (const auto& [k, v] : map) {
        std::vector<std::string> words;
        for (const auto& t : tokenize(k)) words.push_back(to_lower(t.text));
        if (!words.empty()) keys.emplace_back(std::move(words), &v);
    }
    std::stable_sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });

    const auto toks = tokenize(text);
    std::string out;
    std::size_t last = 0;
    for (std::size_t i = 0; i < toks.size();) {
        const Key* hit = nullptr;
        for (const auto& key : keys) {
            if (i + key.first.size() > toks.size()) continue;
            bool same = true;
            for (std::size_t j = 0; j < key.first.size() && same; ++j) same = to_lower(toks[i + j].text) == key.first[j];
            if (same) {
                hit = &key;
                break;
            }
        }
        if (!hit) {
            ++i;
            continue;
        }
        out.append(text.substr(last, toks[i].begin - last));
        out += *hit->second;
        last = toks[i + hit->first.size() - 1].end;
        i += hit->first.size();
    }
    out.append(text.substr(last));
    return out;
}

std::string ParserBackend::resolve_coreference(std::string_view fact, std::string_view) {
    return apply_substitutions(fact, coreference_);
}

std::string ParserBackend::resolve_ellipsis(std::string_view fact, std::string_view) {
    return apply_substitutions(fact, ellipsis_);
}

FactSpec bind_match(const TemplateMatch& match, std::span<const Token> tokens, std::string_view source,
                    const Dataset& ds) {
    Bound b;
    for (const auto& sm : match.slots) {
        const auto toks = tokens.subspan(sm.first, sm.last - sm.first);
        const std::string text = span_text(toks, source);
        const std::string& kind = sm.slot.kind;
        switch (sm.slot.type) {
            case SlotType::Measure:
                if (kind == "x")
                    b.measure_x = resolve_measure(ds, text);
                else if (kind == "y")
                    b.measure_y = resolve_measure(ds, text);
                else
                    b.measure = resolve_measure(ds, text);
                break;
            case SlotType::Agg:
                b.aggregation = aggregation_word(text);
                if (!b.aggregation) literal_error("AGG", text);
                break;
            case SlotType::Value:
                if (kind == "number") {
                    b.number = parse_claimed_number(text);
                    if (!b.number) literal_error("VALUE", text);
                } else if (kind == "percent") {
                    auto p = parse_percent(text);
                    if (!p || p->value < 0 || p->value > 100) literal_error("VALUE", text);
                    std::string t = trim(text);
                    if (t.back() != '%') t = trim(t.substr(0, t.size() - 7)) + "%";
                    b.percent = t;
                } else if (kind == "ordinal") {
                    b.ordinal = parse_ordinal(text);
                    if (!b.ordinal) literal_error("VALUE", text);
                } else if (kind == "count") {
                    if (auto w = parse_number_word(text)) {
                        b.count = *w;
                    } else if (auto n = Number::parse(text); n && n->decimals == 0 && n->value >= 0 && n->value < 1e9) {
                        b.count = static_cast<int>(n->value);
                    } else {
                        literal_error("VALUE", text);
                    }
                } else if (kind == "direction") {
                    b.direction = direction_word(text);
                    if (!b.direction) literal_error("VALUE", text);
                } else if (kind == "extreme") {
                    b.extreme = extreme_word(text);
                    if (!b.extreme) literal_error("VALUE", text);
                } else if (kind == "corr") {
                    b.correlation = correlation_word(text);
                    if (!b.correlation) literal_error("VALUE", text);
                } else if (kind == "skew") {
                    auto s = skew_word(text);
                    if (!s) literal_error("VALUE", text);
                    b.skew = std::string(skew_phrase(*s)) + " distribution";
                }
                break;
            case SlotType::Entity: {
                std::string name = text;
                auto p = lookup_value(ds, name);
                if (!p) unresolved("ENTITY", text, "(no unique matching value)");
                if (kind == "x")
                    b.entity_x = p;
                else if (kind == "y")
                    b.entity_y = p;
                else
                    b.entity = p;
                break;
            }
            case SlotType::Filter: {
                b.has_filter_slot = true;
                std::string why;
                auto preds = parse_filter_phrase(toks, source, ds, &why);
                if (!preds) unresolved("FILTER", text, why);
                b.subspace.insert(b.subspace.end(), preds->begin(), preds->end());
                break;
            }
            case SlotType::IdKey:
                if (kind == "noun")
                    b.identifier_key = text;
                else if (kind == "singular")
                    b.identifier_key = pluralize(text);
                break;
            case SlotType::Time: {
                if (kind == "period") break;
                auto col = time_column(ds);
                if (!col) unresolved("TIME", text, "(dataset has no temporal column)");
                if (!parse_date(text)) literal_error("TIME", text);
                b.subspace.push_back(FilterPredicate{ds.columns[*col].name,
                                                     kind == "end" ? CompareOp::Le : CompareOp::Ge,
                                                     Literal::text(trim(text))});
                break;
            }
        }
    }
    return assemble(match.tmpl->type, std::move(b));
}

std::optional<std::string> render_claim(const Template& tmpl, const FactSpec& spec) {
    if (fact_type_of(spec) != tmpl.type) return std::nullopt;

    // Gather the arm's fields in a uniform shape.
    Bound b;
    std::visit(Overloaded{
                   [&](const ValueFact& f) {
                       b.measure = f.measure;
                       b.number = f.value;
                       b.aggregation = f.aggregation;
                       b.subspace = f.subspace;
                       b.identifier_key = f.identifier_key;
                   },
                   [&](const ProportionFact& f) {
                       b.measure = f.measure;
                       b.percent = f.value;
                       if (f.focus.size() == 1) b.entity = f.focus[0];
                       b.subspace = f.subspace;
                       b.identifier_key = f.identifier_key;
                   },
                   [&](const TrendFact& f) {
                       b.measure = f.measure;
                       b.direction = f.value;
                       b.subspace = f.subspace;
                   },
                   [&](const ExtremeFact& f) {
                       b.measure = f.measure;
                       b.extreme = f.value;
                       if (f.focus.size() == 1) b.entity = f.focus[0];
                       b.subspace = f.subspace;
                       b.identifier_key = f.identifier_key;
                   },
                   [&](const RankFact& f) {
                       b.measure = f.measure;
                       b.ordinal = f.value;
                       if (f.focus.size() == 1) b.entity = f.focus[0];
                       b.subspace = f.subspace;
                       b.identifier_key = f.identifier_key;
                   },
                   [&](const AssociationFact& f) {
                       b.measure_x = f.measure_x;
                       b.measure_y = f.measure_y;
                       b.correlation = f.value;
                       b.identifier_key = f.identifier_key;
                       b.has_filter_slot = f.subspace.has_value();
                       if (f.subspace) b.subspace = *f.subspace;
                   },
                   [&](const DifferenceFact& f) {
                       b.measure = f.measure;
                       b.number = f.value;
                       b.entity_x = f.focus_x;
                       b.entity_y = f.focus_y;
                       b.subspace = f.subspace;
                   },
                   [&](const CategorizationFact& f) {
                       b.count = f.value;
                       b.subspace = f.subspace;
                       b.identifier_key = f.identifier_key;
                   },
                   [&](const DistributionFact& f) {
                       b.measure = f.measure;
                       b.skew = f.value;
                       b.identifier_key = f.identifier_key;
                       b.has_filter_slot = f.subspace.has_value();
                       if (f.subspace) b.subspace = *f.subspace;
                   },
                   [&](const OutlierFact& f) {
                       if (f.measure_y) {
                           b.measure_x = f.measure;
                           b.measure_y = f.measure_y;
                       } else {
                           b.measure = f.measure;
                       }
                       b.entity = f.focus;
                       b.subspace = f.subspace;
                       b.identifier_key = f.identifier_key;
                   },
               },
               spec);

    // Subspace predicates needed by FILTER/TIME slots at or after each element.
    std::vector<std::size_t> needed_after(tmpl.elements.size() + 1, 0);
    bool template_has_filter = false;
    for (std::size_t i = tmpl.elements.size(); i-- > 0;) {
        std::size_t need_here = 0;
        if (const auto* s = std::get_if<Slot>(&tmpl.elements[i])) {
            if (s->type == SlotType::Filter) template_has_filter = true;
            if (s->type == SlotType::Filter || (s->type == SlotType::Time && s->kind != "period")) need_here = 1;
        }
        needed_after[i] = needed_after[i + 1] + need_here;
    }
    if ((tmpl.type == FactType::Association || tmpl.type == FactType::Distribution) &&
        template_has_filter != b.has_filter_slot)
        return std::nullopt;

    std::vector<std::string> out;
    std::size_t next = 0;
    const auto& sub = b.subspace;
    for (std::size_t i = 0; i < tmpl.elements.size(); ++i) {
        if (const auto* lit = std::get_if<LiteralToken>(&tmpl.elements[i])) {
            out.push_back(lit->display);
            continue;
        }
        const Slot& s = std::get<Slot>(tmpl.elements[i]);
        const std::string& kind = s.kind;
        switch (s.type) {
            case SlotType::Measure: {
                const auto& m = kind == "x" ? b.measure_x : kind == "y" ? b.measure_y : b.measure;
                if (!m) return std::nullopt;
                out.push_back(attribute_phrase(*m));
                break;
            }
            case SlotType::Agg:
                if (!b.aggregation) return std::nullopt;
                out.emplace_back(aggregation_phrase(*b.aggregation));
                break;
            case SlotType::Value:
                if (kind == "number" && b.number) {
                    out.push_back(b.number->text());
                } else if (kind == "percent" && b.percent) {
                    out.push_back(*b.percent);
                } else if (kind == "ordinal" && b.ordinal) {
                    out.push_back(format_ordinal(*b.ordinal));
                } else if (kind == "count" && b.count) {
                    out.push_back(*b.count <= 10 ? number_word(*b.count) : std::to_string(*b.count));
                } else if (kind == "direction" && b.direction) {
                    out.emplace_back(to_string(*b.direction));
                } else if (kind == "extreme" && b.extreme) {
                    out.emplace_back(extreme_phrase(*b.extreme));
                } else if (kind == "corr" && b.correlation) {
                    out.emplace_back(to_string(*b.correlation));
                } else if (kind == "skew" && b.skew) {
                    auto sk = parse_skew(*b.skew);
                    if (!sk || *b.skew != std::string(skew_phrase(*sk)) + " distribution") return std::nullopt;
                    out.emplace_back(skew_phrase(*sk));
                } else {
                    return std::nullopt;
                }
                break;
            case SlotType::Entity: {
                const auto& e = kind == "x" ? b.entity_x : kind == "y" ? b.entity_y : b.entity;
                if (!e || e->op != CompareOp::Eq) return std::nullopt;
                out.push_back(e->literal.text());
                break;
            }
            case SlotType::IdKey:
                if (b.identifier_key.empty()) return std::nullopt;
                if (kind == "singular") {
                    const std::string one = singularize(b.identifier_key);
                    if (pluralize(one) != b.identifier_key) return std::nullopt;
                    out.push_back(one);
                } else {
                    out.push_back(b.identifier_key);
                }
                break;
            case SlotType::Time: {
                if (kind == "period") {
                    out.emplace_back("annual");
                    break;
                }
                if (next >= sub.size()) return std::nullopt;
                const auto& p = sub[next++];
                if (p.op != (kind == "end" ? CompareOp::Le : CompareOp::Ge) || !p.literal.as_date()) return std::nullopt;
                out.push_back(p.literal.text());
                break;
            }
            case SlotType::Filter: {
                const std::size_t later = needed_after[i + 1];
                if (next + later >= sub.size()) return std::nullopt;
                const std::size_t take = kind == "bare" ? 1 : sub.size() - later - next;
                FilterList part(sub.begin() + static_cast<std::ptrdiff_t>(next),
                                sub.begin() + static_cast<std::ptrdiff_t>(next + take));
                next += take;
                if (kind == "bare" && part[0].op != CompareOp::Eq) return std::nullopt;
                out.push_back(render_filter_phrase(part, kind == "bare"));
                break;
            }
        }
    }
    if (next != sub.size()) return std::nullopt;
    // (a|an) agrees with the rendered word that follows it.
    for (std::size_t i = 0; i < tmpl.elements.size(); ++i) {
        const auto* lit = std::get_if<LiteralToken>(&tmpl.elements[i]);
        if (lit && lit->alternatives.size() > 1) out[i] = choose_article(*lit, i + 1 < out.size() ? out[i + 1] : "");
    }
    std::string text = detokenize(out);
    if (!text.empty() && std::islower(static_cast<unsigned char>(text[0])))
        text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
    if (!text.empty() && text.back() != '.' && text.back() != '!' && text.back() != '?') text += '.';
    return text;
}

// ---------------------------------------------------------------------------

TemplateBackend::TemplateBackend(const TemplateGrammar& grammar) : grammar_(grammar) {}

bool TemplateBackend::matches_any(std::span<const Token> tokens) const {
    for (const auto& t : grammar_.templates())
        if (!match_template(t, tokens, 1).empty()) return true;
    return false;
}

const Template* TemplateBackend::matching_template(std::string_view fact) const {
    const auto tokens = tokenize(fact);
    for (const auto& t : grammar_.templates())
        if (!match_template(t, tokens, 1).empty()) return &t;
    return nullptr;
}

namespace {

struct Segmentation {
    std::vector<std::pair<std::size_t, std::size_t>> segments;  // token ranges
    std::vector<bool> matched;
};

std::size_t skip_boundaries(std::span<const Token> toks, std::size_t i) {
    while (i < toks.size() && is_boundary(toks[i])) ++i;
    return i;
}

}  // namespace

Compoundness TemplateBackend::classify_compound(std::string_view sentence) {
    auto d = decompose(sentence);
    return d.facts.size() >= 2 && d.diagnostics.empty() ? Compoundness::Compound : Compoundness::Single;
}

Decomposition TemplateBackend::decompose(std::string_view sentence) {
    const auto toks = tokenize(sentence);
    const std::size_t n = toks.size();
    Decomposition result;
    if (n == 0) return result;

    std::map<std::pair<std::size_t, std::size_t>, bool> cache;
    auto seg_matches = [&](std::size_t i, std::size_t j) {
        auto key = std::pair{i, j};
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        const bool m = matches_any(std::span<const Token>(toks).subspan(i, j - i));
        cache[key] = m;
        return m;
    };
    std::vector<std::size_t> ends;
    for (std::size_t j = 0; j < n; ++j)
        if (is_boundary(toks[j])) ends.push_back(j);
    ends.push_back(n);

    // Score: (all segments matched, matched count, -segment count), maximized.
    struct Best {
        bool valid = false;
        bool all_matched = false;
        int matched = 0;
        int segments = 0;
        std::size_t end = 0;
        bool seg_matched = false;
    };
    auto better = [](const Best& a, const Best& b) {
        if (!b.valid) return a.valid;
        if (!a.valid) return false;
        if (a.all_matched != b.all_matched) return a.all_matched;
        if (a.all_matched) return a.segments > b.segments;
        if (a.matched != b.matched) return a.matched > b.matched;
        return a.segments < b.segments;
    };
    std::vector<Best> best(n + 1);
    best[n] = Best{true, true, 0, 0, n, false};
    for (std::size_t i = n; i-- > 0;) {
        if (is_boundary(toks[i])) continue;
        for (std::size_t j : ends) {
            if (j <= i) continue;
            const std::size_t next = j == n ? n : skip_boundaries(toks, j + 1);
            const Best& rest = best[next];
            if (!rest.valid) continue;
            const bool m = seg_matches(i, j);
            Best cand{true, m && rest.all_matched, rest.matched + (m ? 1 : 0), rest.segments + 1, j, m};
            if (better(cand, best[i])) best[i] = cand;
        }
    }
    const std::size_t start = skip_boundaries(toks, 0);
    if (start >= n || !best[start].valid) return result;

    // A full-sentence match wins unless the sentence splits into several matching facts.
    const bool whole = seg_matches(start, n);
    if (whole && !(best[start].all_matched && best[start].segments >= 2)) {
        result.facts.emplace_back(sentence.substr(toks[start].begin, toks[n - 1].end - toks[start].begin));
        result.spans.push_back({toks[start].begin, toks[n - 1].end});
        // keep the caller's exact text when the sentence has no leading boundary
        if (start == 0) {
            result.facts.back() = std::string(sentence);
            result.spans.back() = {0, sentence.size()};
        }
        return result;
    }
    std::size_t i = start;
    while (i < n) {
        const Best& b = best[i];
        const std::size_t j = b.end;
        const std::size_t e = toks[j - 1].end;
        std::string text(sentence.substr(toks[i].begin, e - toks[i].begin));
        if (b.seg_matched) {
            result.facts.push_back(text);
            result.spans.push_back({toks[i].begin, e});
        } else {
            result.diagnostics.push_back({"NoTemplateMatch", "fragment does not match any template: '" + text + "'"});
        }
        i = j == n ? n : skip_boundaries(toks, j + 1);
    }
    return result;
}

std::vector<ClaimRecord> TemplateBackend::detect(std::string_view document) {
    std::vector<ClaimRecord> out;
    for (const auto& span : split_sentences(document)) {
        const std::string_view sentence = document.substr(span.begin, span.end - span.begin);
        auto d = decompose(sentence);
        if (d.facts.empty()) continue;
        ClaimRecord rec;
        rec.id = "claim-" + std::to_string(out.size() + 1);
        rec.text = std::string(sentence);
        rec.span = span;
        if (d.facts.size() == 1 && d.diagnostics.empty()) {
            try {
                rec.fact_type = classify_fact_type(d.facts[0]);
            } catch (const ParseError&) {
            }
        }
        out.push_back(std::move(rec));
    }
    return out;
}

FactType TemplateBackend::classify_fact_type(std::string_view fact) {
    if (const Template* t = matching_template(fact)) return t->type;
    throw ParseError(ParseError::Kind::NoTemplateMatch, "", "NoTemplateMatch: '" + std::string(fact) + "'");
}

FactSpec TemplateBackend::to_spec(std::string_view fact, const Dataset& dataset) {
    const std::string text = resolve_ellipsis(resolve_coreference(fact, fact), fact);
    const auto tokens = tokenize(text);
    std::optional<ParseError> first_error;
    for (const auto& t : grammar_.templates()) {
        for (const auto& m : match_template(t, tokens)) {
            try {
                return bind_match(m, tokens, text, dataset);
            } catch (const ParseError& e) {
                if (!first_error) first_error = e;
            }
        }
    }
    if (first_error) throw *first_error;
    throw ParseError(ParseError::Kind::NoTemplateMatch, "", "NoTemplateMatch: '" + text + "'");
}

}  // namespace datacheck
