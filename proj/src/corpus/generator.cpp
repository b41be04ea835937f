#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "datacheck/corpus.hpp"
#include "datacheck/literals.hpp"
#include "datacheck/retrieval.hpp"
#include "datacheck/veracity.hpp"

namespace datacheck {

namespace {

constexpr int kMaxAttempts = 400;

std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    std::size_t below(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(engine_() % n); }
    bool coin() { return engine_() & 1; }
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    template <class T>
    const T& pick(const std::vector<T>& v) {
        return v[below(v.size())];
    }

private:
    std::mt19937_64 engine_;
};

/// Thrown inside one attempt; the generator retries with fresh draws.
struct Retry {};

struct SlotShape {
    std::vector<Slot> filters_and_times;  // in template order
    bool has_filter = false;
};

SlotShape shape_of(const Template& t) {
    SlotShape s;
    for (const auto& e : t.elements)
        if (const auto* slot = std::get_if<Slot>(&e)) {
            if (slot->type == SlotType::Filter || (slot->type == SlotType::Time && slot->kind != "period"))
                s.filters_and_times.push_back(*slot);
            if (slot->type == SlotType::Filter) s.has_filter = true;
        }
    return s;
}

bool has_value(const CellValue& c) { return !std::holds_alternative<Missing>(c); }

Literal literal_for(const Dataset& ds, std::size_t col, const CellValue& cell) {
    switch (ds.columns[col].kind) {
        case ColumnKind::Numeric: {
            const double v = std::get<double>(cell);
            return Literal{Number{v, shortest_decimals(v)}};
        }
        case ColumnKind::Temporal: return Literal::text(date_phrase(std::get<Date>(cell)));
        case ColumnKind::Categorical: return Literal::text(display_text(cell));
    }
    return Literal::text(display_text(cell));
}

/// Words that would split or end a slot when they appear inside a value.
bool safe_value_text(const std::string& text) {
    static const std::set<std::string> stop = {"and", "is",   "has",  "with", "among", "of",  "than", "the",
                                               "for", "in",   "had",  "by",   "to",    "all", "from", "there",
                                               "are", "that", "more", "over", "under", "at",  "its",  "a",
                                               "an",  "between", "ranked", "follow", "during", "season"};
    if (text.find_first_of(",;\"'()") != std::string::npos) return false;
    for (const auto& t : tokenize(text))
        if (stop.count(to_lower(t.text)) || t.text == "." || t.text == "!" || t.text == "?") return false;
    return !text.empty();
}

struct Generator {
    const Dataset& ds;
    const TemplateGrammar& grammar;
    std::size_t id_col = 0;
    std::string noun;
    std::vector<std::size_t> numeric, categorical, temporal;
    std::optional<std::size_t> time_col;

    Generator(const Dataset& d, const TemplateGrammar& g) : ds(d), grammar(g) {
        for (std::size_t c = 0; c < ds.columns.size(); ++c) {
            switch (ds.columns[c].kind) {
                case ColumnKind::Numeric: numeric.push_back(c); break;
                case ColumnKind::Temporal: temporal.push_back(c); break;
                case ColumnKind::Categorical: categorical.push_back(c); break;
            }
        }
        time_col = datacheck::time_column(ds);
        auto idc = identifier_column(ds, CategorizationFact{});
        if (idc) {
            id_col = *ds.column_index(*idc);
            noun = pluralize(*idc);
            if (pluralize(singularize(noun)) != noun) noun.clear();
        }
        std::erase(categorical, id_col);
    }

    bool has_identifier() const { return !noun.empty(); }

    void require(FactType type) const {
        auto fail = [&](const std::string& why) {
            throw CorpusError(CorpusError::Kind::UnsupportedType,
                              "UnsupportedType(" + ds.name + ", " + std::string(to_string(type)) + "): " + why);
        };
        if (ds.rows.empty()) fail("dataset has no rows");
        if (numeric.empty() && type != FactType::Categorization) fail("no numeric measure column");
        if (!has_identifier()) fail("no categorical column with unique values to name entities");
        if (type == FactType::Trend && !time_col) fail("no temporal column");
        if ((type == FactType::Association || type == FactType::Outlier) && numeric.size() < 2)
            fail("fewer than two numeric columns");
        if (grammar.for_type(type).empty()) fail("grammar has no template for the type");
    }

    FilterPredicate entity(std::size_t row) const {
        const std::string text = display_text(ds.rows[row][id_col]);
        if (!safe_value_text(text)) throw Retry{};
        auto p = lookup_value(ds, text);
        if (!p || p->attribute != ds.columns[id_col].name) throw Retry{};
        return *p;
    }

    FilterPredicate bare(Rng& rng, std::size_t anchor, std::set<std::size_t>& used) const {
        std::vector<std::size_t> cols;
        for (std::size_t c : categorical)
            if (!used.count(c)) cols.push_back(c);
        if (cols.empty()) throw Retry{};
        const std::size_t c = rng.pick(cols);
        const CellValue& cell = ds.rows[anchor][c];
        if (!has_value(cell)) throw Retry{};
        const std::string text = literal_for(ds, c, cell).text();
        if (!safe_value_text(text)) throw Retry{};
        auto p = lookup_value(ds, text);
        if (!p || p->attribute != ds.columns[c].name) throw Retry{};
        used.insert(c);
        return *p;
    }

    FilterPredicate scope_predicate(Rng& rng, std::size_t anchor, std::set<std::size_t>& used) const {
        std::vector<std::size_t> cols;
        for (std::size_t c = 0; c < ds.columns.size(); ++c)
            if (c != id_col && !used.count(c) && has_value(ds.rows[anchor][c])) cols.push_back(c);
        if (cols.empty()) throw Retry{};
        const std::size_t c = rng.pick(cols);
        used.insert(c);
        const CellValue& cell = ds.rows[anchor][c];
        const std::string& name = ds.columns[c].name;
        if (ds.columns[c].kind == ColumnKind::Categorical) {
            const std::string text = display_text(cell);
            if (!safe_value_text(text)) throw Retry{};
            if (rng.below(4) == 0) {
                std::vector<std::string> others;
                for (const auto& r : ds.rows)
                    if (has_value(r[c]) && to_lower(display_text(r[c])) != to_lower(text) &&
                        safe_value_text(display_text(r[c])))
                        others.push_back(display_text(r[c]));
                if (!others.empty()) {
                    std::sort(others.begin(), others.end());
                    return {name, CompareOp::Ne, Literal::text(*canonical_category(ds, c, rng.pick(others)))};
                }
            }
            return {name, CompareOp::Eq, Literal::text(*canonical_category(ds, c, text))};
        }
        // Ordered columns: thresholds come from other cells so the anchor row stays inside.
        static const std::vector<CompareOp> ops = {CompareOp::Gt, CompareOp::Ge, CompareOp::Lt, CompareOp::Le};
        CompareOp op = rng.pick(ops);
        auto key = [&](const CellValue& v) {
            return ds.columns[c].kind == ColumnKind::Numeric ? std::get<double>(v)
                                                             : static_cast<double>(std::get<Date>(v).serial());
        };
        const double a = key(cell);
        std::optional<std::size_t> best;
        for (std::size_t i = 0; i < ds.rows.size(); ++i) {
            const CellValue& v = ds.rows[i][c];
            if (!has_value(v) || (ds.columns[c].kind == ColumnKind::Numeric) != std::holds_alternative<double>(v))
                continue;
            const double k = key(v);
            if (op == CompareOp::Gt && k < a && (!best || k > key(ds.rows[*best][c]))) best = i;
            if (op == CompareOp::Lt && k > a && (!best || k < key(ds.rows[*best][c]))) best = i;
        }
        if ((op == CompareOp::Gt || op == CompareOp::Lt) && best) return {name, op, literal_for(ds, c, ds.rows[*best][c])};
        if (op == CompareOp::Gt) op = CompareOp::Ge;
        if (op == CompareOp::Lt) op = CompareOp::Le;
        return {name, op, literal_for(ds, c, cell)};
    }

    std::vector<std::size_t> rows_matching(const FilterList& filters) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < ds.rows.size(); ++i)
            if (std::all_of(filters.begin(), filters.end(),
                            [&](const FilterPredicate& p) { return evaluate_predicate(ds.rows[i], p, ds); }))
                out.push_back(i);
        return out;
    }

    /// Subspace in slot order. TIME slots take dates from rows that pass the filters.
    FilterList subspace(Rng& rng, const Template& t, std::size_t anchor, std::set<std::size_t>& used) const {
        const SlotShape shape = shape_of(t);
        FilterList filters;
        std::vector<std::pair<std::size_t, FilterList>> pieces;  // slot index -> predicates
        if (time_col) used.insert(*time_col);
        bool has_time = false;
        for (std::size_t k = 0; k < shape.filters_and_times.size(); ++k) {
            const Slot& s = shape.filters_and_times[k];
            if (s.type == SlotType::Time) {
                has_time = true;
                continue;
            }
            FilterList part;
            if (s.kind == "bare") {
                part.push_back(bare(rng, anchor, used));
            } else {
                const std::size_t n = 1 + rng.below(2);
                for (std::size_t i = 0; i < n; ++i) part.push_back(scope_predicate(rng, anchor, used));
            }
            filters.insert(filters.end(), part.begin(), part.end());
            pieces.emplace_back(k, part);
        }
        if (time_col && !has_time && !used.count(*time_col)) used.erase(*time_col);

        std::optional<FilterPredicate> start, end;
        if (has_time) {
            std::vector<Date> dates;
            for (std::size_t i : rows_matching(filters))
                if (const auto* d = std::get_if<Date>(&ds.rows[i][*time_col])) dates.push_back(*d);
            std::sort(dates.begin(), dates.end());
            dates.erase(std::unique(dates.begin(), dates.end()), dates.end());
            if (dates.size() < 2) throw Retry{};
            std::size_t i = rng.below(dates.size() - 1);
            std::size_t j = i + 1 + rng.below(dates.size() - 1 - i);
            const std::string& name = ds.columns[*time_col].name;
            start = FilterPredicate{name, CompareOp::Ge, Literal::text(date_phrase(dates[i]))};
            end = FilterPredicate{name, CompareOp::Le, Literal::text(date_phrase(dates[j]))};
        }
        FilterList out;
        std::size_t piece = 0;
        for (std::size_t k = 0; k < shape.filters_and_times.size(); ++k) {
            const Slot& s = shape.filters_and_times[k];
            if (s.type == SlotType::Time) {
                out.push_back(s.kind == "end" ? *end : *start);
            } else {
                const auto& part = pieces[piece++].second;
                out.insert(out.end(), part.begin(), part.end());
            }
        }
        return out;
    }

    std::size_t measure_col(Rng& rng, const std::set<std::size_t>& avoid) const {
        std::vector<std::size_t> cols;
        for (std::size_t c : numeric)
            if (!avoid.count(c)) cols.push_back(c);
        if (cols.empty()) cols = numeric;
        return rng.pick(cols);
    }

    static Number rounded(double v, int d) { return Number{scaled_round(v, d) / std::pow(10.0, d), d}; }

    static int value_decimals(Rng& rng, double v) {
        if (std::fabs(v) >= 1000) return 0;
        return 1 + static_cast<int>(rng.below(2));
    }

    FactSpec accurate_spec(Rng& rng, Subtype st, const Template& t, bool accurate) const {
        const std::size_t anchor = rng.below(ds.rows.size());
        std::set<std::size_t> used;
        const FilterList sub = subspace(rng, t, anchor, used);
        const std::string& idk = noun;
        auto col_name = [&](std::size_t c) { return ds.columns[c].name; };
        auto rows = rows_matching(sub);
        if (rows.empty()) throw Retry{};

        switch (fact_type_of(st)) {
            case FactType::Value: {
                ValueFact f{col_name(measure_col(rng, used)), {}, Aggregation::Average, sub, idk};
                f.aggregation = st == Subtype::ValueMean     ? Aggregation::Average
                                : st == Subtype::ValueMedian ? Aggregation::Median
                                                             : Aggregation::Sum;
                const auto r = verify(ds, f);
                if (!r.actual) throw Retry{};
                const double actual = r.actual->get<double>();
                f.value = rounded(actual, value_decimals(rng, actual));
                return f;
            }
            case FactType::Proportion: {
                std::vector<std::size_t> cols;
                for (std::size_t c : categorical)
                    if (!used.count(c)) cols.push_back(c);
                FilterPredicate focus;
                if (!cols.empty() && rng.below(3) != 0) {
                    const std::size_t c = rng.pick(cols);
                    const std::string text = display_text(ds.rows[anchor][c]);
                    if (!safe_value_text(text)) throw Retry{};
                    auto p = lookup_value(ds, text);
                    if (!p || p->attribute != col_name(c)) throw Retry{};
                    focus = *p;
                } else {
                    focus = entity(anchor);
                }
                ProportionFact f{col_name(measure_col(rng, used)), "0%", {focus}, sub, idk};
                const auto r = verify(ds, f);
                if (!r.actual) throw Retry{};
                f.value = format_fixed(r.actual->get<double>(), 1) + "%";
                return f;
            }
            case FactType::Trend: {
                TrendFact f{col_name(measure_col(rng, used)), TrendDirection::Increase, sub};
                const auto r = verify(ds, f);
                if (!r.actual || *r.actual == "flat") throw Retry{};
                f.value = *r.actual == "increase" ? TrendDirection::Increase : TrendDirection::Decrease;
                return f;
            }
            case FactType::Extreme: {
                const std::size_t m = measure_col(rng, used);
                const ExtremeKind kind = rng.coin() ? ExtremeKind::Max : ExtremeKind::Min;
                std::optional<std::size_t> best;
                for (std::size_t i : rows) {
                    auto v = numeric_value(ds.rows[i][m]);
                    if (!v) continue;
                    auto b = best ? numeric_value(ds.rows[*best][m]) : std::nullopt;
                    if (!best || (kind == ExtremeKind::Max ? *v > *b : *v < *b)) best = i;
                }
                if (!best) throw Retry{};
                return ExtremeFact{col_name(m), kind, {entity(*best)}, sub, idk};
            }
            case FactType::Rank: {
                RankFact f{col_name(measure_col(rng, used)), 1, {entity(rng.pick(rows))}, sub, idk};
                const auto r = verify(ds, f);
                if (!r.actual) throw Retry{};
                f.value = r.actual->get<int>();
                return f;
            }
            case FactType::Association: {
                const std::size_t x = measure_col(rng, used);
                std::set<std::size_t> avoid = used;
                avoid.insert(x);
                const std::size_t y = measure_col(rng, avoid);
                if (x == y) throw Retry{};
                AssociationFact f{col_name(x), col_name(y), Correlation::Positive, idk, std::nullopt};
                if (shape_of(t).has_filter) f.subspace = sub;
                const auto r = verify(ds, f);
                if (!r.actual) throw Retry{};
                const double rv = r.actual->get<double>();
                if (std::fabs(rv) < 0.2) throw Retry{};
                f.value = rv > 0 ? Correlation::Positive : Correlation::Negative;
                return f;
            }
            case FactType::Difference: {
                if (rows.size() < 2) throw Retry{};
                const std::size_t m = measure_col(rng, used);
                std::size_t a = rng.pick(rows), b = rng.pick(rows);
                if (a == b) throw Retry{};
                auto va = numeric_value(ds.rows[a][m]);
                auto vb = numeric_value(ds.rows[b][m]);
                if (!va || !vb) throw Retry{};
                if (*va < *vb) {
                    std::swap(a, b);
                    std::swap(va, vb);
                }
                const int d = std::min(3, std::max(shortest_decimals(*va), shortest_decimals(*vb)));
                return DifferenceFact{col_name(m), rounded(*va - *vb, d), entity(a), entity(b), sub};
            }
            case FactType::Categorization: {
                if (sub.empty()) throw Retry{};
                return CategorizationFact{static_cast<int>(rows.size()), sub, idk};
            }
            case FactType::Distribution: {
                DistributionFact f{col_name(measure_col(rng, used)), "right-skew distribution", idk, std::nullopt};
                if (shape_of(t).has_filter) f.subspace = sub;
                const auto r = verify(ds, f);
                if (!r.actual) throw Retry{};
                const double g1 = r.actual->get<double>();
                if (std::fabs(g1) < 0.1) throw Retry{};
                f.value = g1 > 0 ? "right-skew distribution" : "left-skew distribution";
                return f;
            }
            case FactType::Outlier: {
                OutlierFact f;
                f.measure = col_name(measure_col(rng, used));
                if (st == Subtype::Outlier2D) {
                    std::set<std::size_t> avoid = used;
                    avoid.insert(*ds.column_index(f.measure));
                    const std::size_t y = measure_col(rng, avoid);
                    if (col_name(y) == f.measure) throw Retry{};
                    f.measure_y = col_name(y);
                }
                f.subspace = sub;
                f.identifier_key = idk;
                // Outlier claims assert outlierness: accurate entries pick a flagged
                // row, inaccurate ones an unflagged row.
                std::vector<std::size_t> candidates;
                for (std::size_t i : rows) {
                    f.focus = entity(i);
                    const auto r = verify(ds, f);
                    if (r.verdict == (accurate ? Verdict::Accurate : Verdict::Inaccurate)) candidates.push_back(i);
                }
                if (candidates.empty()) throw Retry{};
                f.focus = entity(rng.pick(candidates));
                return f;
            }
        }
        throw Retry{};
    }
};

}  // namespace

std::vector<CorpusEntry> generate_corpus(const Dataset& ds, std::size_t per_type, std::uint64_t seed,
                                         const TemplateGrammar& grammar, CorpusStats* stats) {
    std::vector<CorpusEntry> out;
    if (per_type == 0) return out;
    Generator gen(ds, grammar);
    for (FactType type : all_fact_types()) {
        gen.require(type);
        const auto subtypes = subtypes_of(type);
        for (std::size_t i = 0; i < per_type; ++i) {
            const Subtype st = subtypes[(i / 2) % subtypes.size()];
            const bool accurate = i % 2 == 0;
            const auto templates = grammar.for_subtype(st);
            if (templates.empty())
                throw CorpusError(CorpusError::Kind::UnsupportedType,
                                  "UnsupportedType: no template for subtype " + std::string(to_string(st)));
            const std::uint64_t entry_seed = mix(seed ^ mix(static_cast<std::uint64_t>(type) * 1000003ULL + i));
            Rng rng(entry_seed);
            bool done = false;
            for (int attempt = 0; attempt < kMaxAttempts && !done; ++attempt) {
                if (stats) ++stats->attempts;
                try {
                    const Template& t = *rng.pick(templates);
                    FactSpec spec = gen.accurate_spec(rng, st, t, accurate);
                    if (!accurate && type != FactType::Outlier) spec = perturb_spec(spec, mix(entry_seed + attempt));
                    const auto text = render_claim(t, spec);
                    if (!text) continue;
                    const Verdict want = accurate ? Verdict::Accurate : Verdict::Inaccurate;
                    if (verify(ds, spec).verdict != want) continue;
                    out.push_back({*text, spec, want, type, st, entry_seed, t.pattern, std::nullopt});
                    if (stats) ++(accurate ? stats->accurate : stats->inaccurate)[st];
                    done = true;
                } catch (const Retry&) {
                } catch (const CorpusError& e) {
                    if (e.kind() != CorpusError::Kind::CannotPerturb) throw;
                }
            }
            if (!done)
                throw CorpusError(CorpusError::Kind::UnsupportedType,
                                  "UnsupportedType(" + ds.name + ", " + std::string(to_string(st)) +
                                      "): no valid claim after " + std::to_string(kMaxAttempts) + " attempts");
        }
    }
    return out;
}

FactSpec perturb_spec(const FactSpec& spec, std::uint64_t seed) {
    Rng rng(mix(seed));
    auto shift_number = [&](const Number& n) {
        const double unit = std::pow(10.0, -n.decimals);
        const double factor = 0.1 + 0.4 * rng.unit();
        double v = n.value == 0 ? unit * static_cast<double>(1 + rng.below(9))
                                : n.value * (rng.coin() ? 1 + factor : 1 - factor);
        Number out{scaled_round(v, n.decimals) / std::pow(10.0, n.decimals), n.decimals};
        if (scaled_round(out.value, n.decimals) == scaled_round(n.value, n.decimals)) out.value = n.value + unit;
        return out;
    };
    auto shift_int = [&](int v, int min) {
        const int k = 1 + static_cast<int>(rng.below(3));
        if (rng.coin() && v - k >= min) return v - k;
        return v + k;
    };
    FactSpec out = spec;
    std::visit(
        [&](auto& f) {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, ValueFact> || std::is_same_v<T, DifferenceFact>) {
                f.value = shift_number(f.value);
            } else if constexpr (std::is_same_v<T, ProportionFact>) {
                auto p = parse_percent(f.value);
                if (!p) throw CorpusError(CorpusError::Kind::CannotPerturb, "CannotPerturb: unparseable percent");
                const double factor = 0.1 + 0.4 * rng.unit();
                const bool up = rng.coin();
                for (bool dir : {up, !up}) {
                    const double v = std::clamp(p->value * (dir ? 1 + factor : 1 - factor), 0.0, 100.0);
                    if (scaled_round(v, p->decimals) != scaled_round(p->value, p->decimals)) {
                        f.value = format_fixed(v, p->decimals) + "%";
                        return;
                    }
                }
                throw CorpusError(CorpusError::Kind::CannotPerturb, "CannotPerturb: percent " + f.value);
            } else if constexpr (std::is_same_v<T, TrendFact>) {
                f.value = f.value == TrendDirection::Increase ? TrendDirection::Decrease : TrendDirection::Increase;
            } else if constexpr (std::is_same_v<T, ExtremeFact>) {
                f.value = f.value == ExtremeKind::Max ? ExtremeKind::Min : ExtremeKind::Max;
            } else if constexpr (std::is_same_v<T, RankFact>) {
                f.value = shift_int(f.value, 1);
            } else if constexpr (std::is_same_v<T, AssociationFact>) {
                f.value = f.value == Correlation::Positive ? Correlation::Negative : Correlation::Positive;
            } else if constexpr (std::is_same_v<T, CategorizationFact>) {
                f.value = shift_int(f.value, 0);
            } else if constexpr (std::is_same_v<T, DistributionFact>) {
                f.value = parse_skew(f.value) == Skew::Right ? "left-skew distribution" : "right-skew distribution";
            } else {
                throw CorpusError(CorpusError::Kind::CannotPerturb, "CannotPerturb: outlier claims are boolean");
            }
        },
        out);
    return out;
}

std::string coverage_summary(const std::vector<CorpusEntry>& corpus) {
    std::map<Subtype, std::pair<std::size_t, std::size_t>> counts;
    for (const auto& e : corpus) {
        auto& c = counts[e.subtype];
        (e.intended_verdict == Verdict::Accurate ? c.first : c.second)++;
    }
    std::string out = "# " + std::to_string(corpus.size()) + " entries, " + std::to_string(counts.size()) + " of " +
                      std::to_string(kSubtypeCount) + " subtypes covered\n";
    for (Subtype s : all_subtypes()) {
        auto it = counts.find(s);
        out += "#   " + std::string(to_string(s)) + ": ";
        out += it == counts.end() ? std::string("none")
                                  : std::to_string(it->second.first) + " accurate, " +
                                        std::to_string(it->second.second) + " inaccurate";
        out += "\n";
    }
    return out;
}

}  // namespace datacheck
