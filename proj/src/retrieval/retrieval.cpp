#include "datacheck/retrieval.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace datacheck {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::size_t require_column(const Dataset& ds, const std::string& attribute) {
    auto col = ds.resolve(attribute);
    if (!col)
        throw RetrievalError(RetrievalError::Kind::UnknownAttribute, attribute,
                             "UnknownAttribute: '" + attribute + "' is not a column of " + ds.name);
    return *col;
}

template <class T>
bool compare(const T& a, CompareOp op, const T& b) {
    switch (op) {
        case CompareOp::Eq: return a == b;
        case CompareOp::Ne: return a != b;
        case CompareOp::Gt: return a > b;
        case CompareOp::Ge: return a >= b;
        case CompareOp::Lt: return a < b;
        case CompareOp::Le: return a <= b;
    }
    return false;
}

struct Resolved {
    std::size_t column;
    FilterPredicate predicate;  // attribute replaced by the column name
};

Resolved resolve_predicate(const Dataset& ds, const FilterPredicate& p) {
    const std::size_t col = require_column(ds, p.attribute);
    FilterPredicate q = p;
    q.attribute = ds.columns[col].name;
    switch (ds.columns[col].kind) {
        case ColumnKind::Categorical:
            if (is_ordering(p.op))
                throw RetrievalError(RetrievalError::Kind::TypeMismatch, q.attribute,
                                     "TypeMismatch: ordering '" + std::string(to_string(p.op)) +
                                         "' on categorical column '" + q.attribute + "'");
            break;
        case ColumnKind::Numeric:
            if (!p.literal.as_number())
                throw RetrievalError(RetrievalError::Kind::BadLiteral, q.attribute,
                                     "BadLiteral: '" + p.literal.text() + "' is not a number for '" + q.attribute + "'");
            break;
        case ColumnKind::Temporal:
            if (!p.literal.as_date())
                throw RetrievalError(RetrievalError::Kind::BadLiteral, q.attribute,
                                     "BadLiteral: '" + p.literal.text() + "' is not a date for '" + q.attribute + "'");
            break;
    }
    return {col, q};
}

bool satisfies(const Row& row, const Resolved& r, const Dataset& ds) {
    const CellValue& cell = row[r.column];
    const FilterPredicate& p = r.predicate;
    switch (ds.columns[r.column].kind) {
        case ColumnKind::Numeric: {
            const auto* v = std::get_if<double>(&cell);
            return v && compare(*v, p.op, *p.literal.as_number());
        }
        case ColumnKind::Temporal: {
            const auto* d = std::get_if<Date>(&cell);
            return d && compare(*d, p.op, *p.literal.as_date());
        }
        case ColumnKind::Categorical: {
            if (std::holds_alternative<Missing>(cell)) return false;
            return compare(to_lower(trim(display_text(cell))), p.op, to_lower(trim(p.literal.text())));
        }
    }
    return false;
}

std::vector<std::size_t> apply(const Dataset& ds, std::vector<std::size_t> rows, const FilterPredicate& p,
                               PredicateRole role, std::vector<TraceEntry>& trace) {
    const Resolved r = resolve_predicate(ds, p);
    const std::size_t before = rows.size();
    std::erase_if(rows, [&](std::size_t i) { return !satisfies(ds.rows[i], r, ds); });
    trace.push_back({r.predicate, role, before, rows.size()});
    return rows;
}

MeasureVector extract(const Dataset& ds, const std::string& attribute, const std::vector<std::size_t>& rows) {
    const std::size_t col = require_column(ds, attribute);
    if (ds.columns[col].kind != ColumnKind::Numeric)
        throw RetrievalError(RetrievalError::Kind::TypeMismatch, ds.columns[col].name,
                             "TypeMismatch: measure '" + ds.columns[col].name + "' is not numeric");
    MeasureVector m;
    m.attribute = ds.columns[col].name;
    for (std::size_t i : rows) {
        if (auto v = numeric_value(ds.rows[i][col])) {
            m.rows.push_back(i);
            m.values.push_back(*v);
        } else {
            ++m.dropped;
        }
    }
    return m;
}

}  // namespace

std::string_view RetrievalError::kind_name() const {
    switch (kind_) {
        case Kind::UnknownAttribute: return "UnknownAttribute";
        case Kind::TypeMismatch: return "TypeMismatch";
        case Kind::BadLiteral: return "BadLiteral";
        case Kind::NoMatchingRows: return "NoMatchingRows";
    }
    return "UnknownAttribute";
}

std::string_view to_string(PredicateRole role) {
    switch (role) {
        case PredicateRole::Subspace: return "subspace";
        case PredicateRole::Focus: return "focus";
        case PredicateRole::FocusX: return "focus_x";
        case PredicateRole::FocusY: return "focus_y";
    }
    return "subspace";
}

const MeasureVector* EvidenceSlice::measure(std::string_view attribute) const {
    for (const auto& m : measures)
        if (fold_attribute(m.attribute) == fold_attribute(attribute)) return &m;
    return nullptr;
}

bool evaluate_predicate(const Row& row, const FilterPredicate& predicate, const Dataset& dataset) {
    return satisfies(row, resolve_predicate(dataset, predicate), dataset);
}

std::optional<std::string> identifier_column(const Dataset& ds, const FactSpec& spec) {
    std::optional<std::string> focus_attr;
    std::visit(Overloaded{
                   [&](const ProportionFact& f) { if (!f.focus.empty()) focus_attr = f.focus.front().attribute; },
                   [&](const ExtremeFact& f) { if (!f.focus.empty()) focus_attr = f.focus.front().attribute; },
                   [&](const RankFact& f) { if (!f.focus.empty()) focus_attr = f.focus.front().attribute; },
                   [&](const DifferenceFact& f) { focus_attr = f.focus_x.attribute; },
                   [&](const OutlierFact& f) { focus_attr = f.focus.attribute; },
                   [](const auto&) {},
               },
               spec);
    if (focus_attr)
        if (auto col = ds.resolve(*focus_attr)) return ds.columns[*col].name;
    for (std::size_t c = 0; c < ds.columns.size(); ++c) {
        if (ds.columns[c].kind != ColumnKind::Categorical) continue;
        std::set<std::string> seen;
        bool unique = true;
        for (const auto& row : ds.rows) {
            if (!seen.insert(display_text(row[c])).second) {
                unique = false;
                break;
            }
        }
        if (unique) return ds.columns[c].name;
    }
    return std::nullopt;
}

EvidenceSlice retrieve(const Dataset& ds, const FactSpec& spec) {
    EvidenceSlice s;
    std::vector<std::size_t> all(ds.rows.size());
    std::iota(all.begin(), all.end(), std::size_t{0});

    const FilterList& subspace = subspace_of(spec);
    std::vector<std::size_t> rows = all;
    for (const auto& p : subspace) rows = apply(ds, std::move(rows), p, PredicateRole::Subspace, s.trace);
    s.subspace_rows = rows;

    auto apply_focus = [&](const FilterList& focus, PredicateRole role) {
        std::vector<std::size_t> f = s.subspace_rows;
        for (const auto& p : focus) f = apply(ds, std::move(f), p, role, s.trace);
        return f;
    };
    std::visit(Overloaded{
                   [&](const ProportionFact& f) { s.focus_rows = apply_focus(f.focus, PredicateRole::Focus); },
                   [&](const ExtremeFact& f) { s.focus_rows = apply_focus(f.focus, PredicateRole::Focus); },
                   [&](const RankFact& f) { s.focus_rows = apply_focus(f.focus, PredicateRole::Focus); },
                   [&](const OutlierFact& f) { s.focus_rows = apply_focus({f.focus}, PredicateRole::Focus); },
                   [&](const DifferenceFact& f) {
                       s.focus_rows = apply_focus({f.focus_x}, PredicateRole::FocusX);
                       s.focus_y_rows = apply_focus({f.focus_y}, PredicateRole::FocusY);
                   },
                   [](const auto&) {},
               },
               spec);

    if (std::holds_alternative<CategorizationFact>(spec)) {
        for (const auto& p : subspace) {
            const Resolved r = resolve_predicate(ds, p);
            s.predicate_counts.push_back(static_cast<std::size_t>(
                std::count_if(all.begin(), all.end(), [&](std::size_t i) { return satisfies(ds.rows[i], r, ds); })));
        }
        s.identifier_column = identifier_column(ds, spec);
        return s;
    }

    if (s.subspace_rows.empty())
        throw RetrievalError(RetrievalError::Kind::NoMatchingRows, "",
                             "NoMatchingRows: no rows satisfy the subspace filters");

    if (const auto* trend = std::get_if<TrendFact>(&spec)) {
        std::optional<std::size_t> tcol;
        for (const auto& p : trend->subspace) {
            auto c = ds.resolve(p.attribute);
            if (c && ds.columns[*c].kind == ColumnKind::Temporal) {
                tcol = c;
                break;
            }
        }
        if (!tcol)
            for (std::size_t c = 0; c < ds.columns.size(); ++c)
                if (ds.columns[c].kind == ColumnKind::Temporal) {
                    tcol = c;
                    break;
                }
        if (!tcol)
            throw RetrievalError(RetrievalError::Kind::UnknownAttribute, "",
                                 "UnknownAttribute: dataset has no temporal column for the trend");
        s.time_column = ds.columns[*tcol].name;
        std::vector<std::size_t> dated;
        for (std::size_t i : s.subspace_rows)
            if (std::holds_alternative<Date>(ds.rows[i][*tcol])) dated.push_back(i);
        std::stable_sort(dated.begin(), dated.end(), [&](std::size_t a, std::size_t b) {
            return std::get<Date>(ds.rows[a][*tcol]) < std::get<Date>(ds.rows[b][*tcol]);
        });
        MeasureVector m = extract(ds, trend->measure, dated);
        m.dropped += s.subspace_rows.size() - dated.size();
        for (std::size_t i : m.rows) s.dates.push_back(std::get<Date>(ds.rows[i][*tcol]));
        s.measures.push_back(std::move(m));
    } else {
        for (const auto& attr : measures_of(spec)) s.measures.push_back(extract(ds, attr, s.subspace_rows));
    }
    s.identifier_column = identifier_column(ds, spec);
    return s;
}

}  // namespace datacheck
