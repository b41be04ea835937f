#include "datacheck/evidence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "datacheck/grammar.hpp"
#include "datacheck/literals.hpp"

namespace datacheck {

namespace {

using ojson = nlohmann::ordered_json;

std::string row_id(std::size_t row) { return "r" + std::to_string(row); }

ojson cell_json(const CellValue& cell) {
    if (const auto* d = std::get_if<double>(&cell)) return *d;
    if (const auto* s = std::get_if<std::string>(&cell)) return *s;
    if (const auto* t = std::get_if<Date>(&cell)) return t->iso();
    return nullptr;
}

double stat(const VerificationResult& r, std::string_view name) {
    auto v = r.statistic(name);
    if (!v) throw std::logic_error("evidence: result lacks statistic " + std::string(name));
    return *v;
}

/// Label text: ten significant digits hides floating-point residue.
std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return format_shortest(std::stod(buf));
}

struct Context {
    const Dataset& ds;
    const EvidenceSlice& slice;
    const FactSpec& spec;
    const VerificationResult& result;
    Subtype subtype;

    std::string label(std::size_t row) const {
        if (slice.identifier_column)
            if (auto c = ds.column_index(*slice.identifier_column)) return display_text(ds.rows[row][*c]);
        return "row " + std::to_string(row + 1);
    }

    std::optional<double> value(std::size_t row, std::string_view column) const {
        auto c = ds.resolve(column);
        if (!c) return std::nullopt;
        return numeric_value(ds.rows[row][*c]);
    }

    const MeasureVector& measure(std::size_t i) const { return slice.measures.at(i); }

    std::string column_name(std::string_view attribute) const {
        auto c = ds.resolve(attribute);
        return c ? ds.columns[*c].name : std::string(attribute);
    }
};

std::vector<FilterWidget> widgets_of(const EvidenceSlice& slice) {
    std::vector<FilterWidget> out;
    for (const auto& t : slice.trace)
        out.push_back({t.predicate.attribute, t.predicate, t.role, t.rows_before, t.rows_after});
    return out;
}

/// Identifier column, then every filtered column in trace order, then `extra`.
TableLayout start_table(const Context& cx, const std::vector<std::string>& extra) {
    TableLayout t;
    t.layout = std::string(table_layout_name(cx.subtype));
    t.subtype = cx.subtype;
    t.widgets = widgets_of(cx.slice);
    std::vector<std::string> names;
    auto add = [&](const std::string& n) {
        if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
    };
    if (cx.slice.identifier_column) add(*cx.slice.identifier_column);
    for (const auto& w : t.widgets) add(w.column);
    for (const auto& e : extra) add(cx.column_name(e));
    for (const auto& n : names) {
        TableColumn col{n, "", {}};
        for (std::size_t i = 0; i < t.widgets.size(); ++i)
            if (t.widgets[i].column == n) col.widgets.push_back(i);
        t.columns.push_back(std::move(col));
    }
    return t;
}

void set_sort(TableLayout& t, const std::string& column, const std::string& order) {
    for (auto& c : t.columns)
        if (c.name == column) c.sort = order;
}

void add_rows(TableLayout& t, const Context& cx, const std::vector<std::size_t>& rows) {
    for (std::size_t k = 0; k < rows.size(); ++k) {
        TableRow r{row_id(rows[k]), std::nullopt, {}};
        if (t.index_column) r.index = k + 1;
        for (const auto& c : t.columns) {
            auto idx = cx.ds.column_index(c.name);
            r.cells.push_back(idx ? cell_json(cx.ds.rows[rows[k]][*idx]) : ojson(nullptr));
        }
        t.rows.push_back(std::move(r));
    }
}

/// Keeps the first rows up to the cap, swapping in any highlighted rows that
/// would otherwise fall off so highlights always point at body rows.
template <class Item, class IdOf>
std::vector<Item> cap_items(std::vector<Item> items, const std::vector<std::string>& keep, IdOf id_of) {
    if (items.size() <= kEvidenceRowCap) return items;
    std::vector<Item> out(items.begin(), items.begin() + kEvidenceRowCap);
    std::vector<Item> missing;
    for (std::size_t i = kEvidenceRowCap; i < items.size(); ++i)
        if (std::find(keep.begin(), keep.end(), id_of(items[i])) != keep.end()) missing.push_back(items[i]);
    std::size_t slot = out.size();
    for (auto& m : missing) {
        while (slot > 0 && std::find(keep.begin(), keep.end(), id_of(out[slot - 1])) != keep.end()) --slot;
        if (slot == 0) break;
        out[--slot] = m;
    }
    if (!missing.empty()) {
        // Restore the original order of the kept items.
        std::vector<std::string> order;
        for (const auto& i : items) order.push_back(id_of(i));
        std::stable_sort(out.begin(), out.end(), [&](const Item& a, const Item& b) {
            return std::find(order.begin(), order.end(), id_of(a)) < std::find(order.begin(), order.end(), id_of(b));
        });
    }
    return out;
}

void finish_table(TableLayout& t) {
    t.total_rows = t.rows.size();
    if (t.rows.size() > kEvidenceRowCap) {
        t.rows = cap_items(std::move(t.rows), t.highlight_row_ids, [](const TableRow& r) { return r.id; });
        t.truncated = true;
        t.notes.push_back("Showing " + std::to_string(t.rows.size()) + " of " + std::to_string(t.total_rows) +
                          " rows; summaries use all rows.");
    }
}

/// Measure rows sorted by value; the focus row goes first among ties so its
/// 1-based position equals its competition rank.
std::vector<std::size_t> sorted_rows(const MeasureVector& m, bool descending, std::optional<std::size_t> focus) {
    std::vector<std::size_t> idx(m.rows.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (m.values[a] != m.values[b]) return descending ? m.values[a] > m.values[b] : m.values[a] < m.values[b];
        const bool fa = focus && m.rows[a] == *focus;
        const bool fb = focus && m.rows[b] == *focus;
        return fa && !fb;
    });
    std::vector<std::size_t> out;
    for (std::size_t i : idx) out.push_back(m.rows[i]);
    return out;
}

std::optional<std::size_t> single_focus(const EvidenceSlice& s) {
    if (s.focus_rows.size() != 1) return std::nullopt;
    return s.focus_rows.front();
}

/// Rows holding the median: the middle one, or the middle two for even n.
std::vector<std::size_t> median_rows(const MeasureVector& m) {
    const auto order = sorted_rows(m, false, std::nullopt);
    const std::size_t n = order.size();
    if (n == 0) return {};
    if (n % 2) return {order[n / 2]};
    return {order[n / 2 - 1], order[n / 2]};
}

std::vector<std::size_t> numeric_measure_rows(const Context& cx) { return cx.measure(0).rows; }

ChartSpec start_chart(const Context& cx) {
    ChartSpec c;
    c.layout = std::string(chart_layout_name(cx.subtype));
    c.kind = std::string(chart_kind(cx.subtype));
    c.widgets = widgets_of(cx.slice);
    return c;
}

Annotation rule(std::string axis, const VerificationResult& r, std::string statistic, std::string text) {
    Annotation a;
    a.type = "rule";
    a.axis = std::move(axis);
    a.value = stat(r, statistic);
    a.statistic = std::move(statistic);
    a.text = std::move(text);
    return a;
}

Annotation label_for(const VerificationResult& r, std::string statistic, std::string text,
                     std::optional<std::string> mark = std::nullopt) {
    Annotation a;
    a.type = "label";
    a.value = stat(r, statistic);
    a.statistic = std::move(statistic);
    a.mark = std::move(mark);
    a.text = std::move(text);
    return a;
}

Annotation highlight(std::string mark, std::string text) {
    Annotation a;
    a.type = "highlight";
    a.mark = std::move(mark);
    a.text = std::move(text);
    return a;
}

/// Auxiliary mark for the claimed value when it disagrees with the data.
void add_claimed(ChartSpec& c, const VerificationResult& r, std::string axis) {
    if (r.verdict != Verdict::Inaccurate) return;
    Annotation a;
    a.type = "claimed";
    a.axis = std::move(axis);
    if (r.claimed.is_number()) {
        a.value = r.claimed.get<double>();
        a.text = "claimed " + fmt(*a.value);
    } else if (r.claimed.is_string()) {
        const auto text = r.claimed.get<std::string>();
        if (auto p = parse_percent(text)) a.value = p->value;
        a.text = "claimed " + text;
    } else {
        return;
    }
    c.annotations.push_back(std::move(a));
}

void cap_chart(ChartSpec& c, const std::vector<std::string>& keep) {
    c.total_points = c.data.size();
    if (c.data.size() <= kEvidenceRowCap) return;
    std::vector<ojson> items(c.data.begin(), c.data.end());
    items = cap_items(std::move(items), keep, [](const ojson& j) { return j.at("id").get<std::string>(); });
    c.data = ojson::array();
    for (auto& i : items) c.data.push_back(std::move(i));
    c.truncated = true;
    c.notes.push_back("Showing " + std::to_string(c.data.size()) + " of " + std::to_string(c.total_points) +
                      " points; annotations use all points.");
}

ojson point(const Context& cx, std::size_t row, double value) {
    ojson p;
    p["id"] = row_id(row);
    p["label"] = cx.label(row);
    p["value"] = value;
    return p;
}

ojson point_xy(const Context& cx, std::size_t row, double x, double y) {
    ojson p;
    p["id"] = row_id(row);
    p["label"] = cx.label(row);
    p["x"] = x;
    p["y"] = y;
    return p;
}

ojson axis(std::string field, std::string type, std::string title = {}) {
    ojson a;
    a["field"] = std::move(field);
    a["type"] = std::move(type);
    if (!title.empty()) a["title"] = std::move(title);
    return a;
}

struct PairedRows {
    std::vector<std::size_t> rows;
    std::vector<double> x, y;
};

PairedRows paired(const EvidenceSlice& s) {
    PairedRows p;
    const auto& mx = s.measures.at(0);
    const auto& my = s.measures.at(1);
    for (std::size_t i = 0; i < mx.rows.size(); ++i) {
        auto it = std::find(my.rows.begin(), my.rows.end(), mx.rows[i]);
        if (it == my.rows.end()) continue;
        p.rows.push_back(mx.rows[i]);
        p.x.push_back(mx.values[i]);
        p.y.push_back(my.values[static_cast<std::size_t>(it - my.rows.begin())]);
    }
    return p;
}

/// Squared Mahalanobis distance from the covariance the rule recorded.
double mahalanobis(const VerificationResult& r, double x, double y) {
    const double sxx = stat(r, "cov_xx"), sxy = stat(r, "cov_xy"), syy = stat(r, "cov_yy");
    const double dx = x - stat(r, "mean_x"), dy = y - stat(r, "mean_y");
    return (syy * dx * dx - 2 * sxy * dx * dy + sxx * dy * dy) / (sxx * syy - sxy * sxy);
}

std::string measure_name(const Context& cx, std::size_t i) { return cx.column_name(cx.measure(i).attribute); }

// ---------------------------------------------------------------- tables

TableLayout table_for(const Context& cx) {
    const auto& r = cx.result;
    switch (cx.subtype) {
        case Subtype::ValueMean:
        case Subtype::ValueMedian:
        case Subtype::ValueSum: {
            TableLayout t = start_table(cx, {measure_name(cx, 0)});
            add_rows(t, cx, numeric_measure_rows(cx));
            const char* name = cx.subtype == Subtype::ValueMean ? "mean" : cx.subtype == Subtype::ValueMedian ? "median" : "sum";
            const char* label = cx.subtype == Subtype::ValueMean ? "Mean" : cx.subtype == Subtype::ValueMedian ? "Median" : "Sum";
            t.sticky_summary_rows.push_back({label, name, stat(r, name), true});
            if (cx.subtype == Subtype::ValueMedian)
                for (std::size_t row : median_rows(cx.measure(0))) t.highlight_row_ids.push_back(row_id(row));
            finish_table(t);
            return t;
        }
        case Subtype::Proportion: {
            TableLayout t = start_table(cx, {measure_name(cx, 0)});
            add_rows(t, cx, numeric_measure_rows(cx));
            for (std::size_t row : numeric_measure_rows(cx))
                if (std::binary_search(cx.slice.focus_rows.begin(), cx.slice.focus_rows.end(), row))
                    t.highlight_row_ids.push_back(row_id(row));
            t.sticky_summary_rows.push_back({"Focus total", "focus_sum", stat(r, "focus_sum"), true});
            t.sticky_summary_rows.push_back({"Reference total", "reference_sum", stat(r, "reference_sum"), true});
            t.sticky_summary_rows.push_back({"Proportion (%)", "proportion", stat(r, "proportion"), true});
            finish_table(t);
            return t;
        }
        case Subtype::Trend: {
            TableLayout t = start_table(cx, {*cx.slice.time_column, measure_name(cx, 0)});
            set_sort(t, *cx.slice.time_column, "asc");
            const auto& rows = numeric_measure_rows(cx);
            add_rows(t, cx, rows);
            t.highlight_row_ids = {row_id(rows.front()), row_id(rows.back())};
            t.sticky_summary_rows.push_back({"First", "first", stat(r, "first"), false});
            t.sticky_summary_rows.push_back({"Last", "last", stat(r, "last"), false});
            t.sticky_summary_rows.push_back({"Change", "change", stat(r, "change"), true});
            finish_table(t);
            return t;
        }
        case Subtype::Extreme:
        case Subtype::Rank: {
            const auto focus = single_focus(cx.slice);
            const bool want_min = std::holds_alternative<ExtremeFact>(cx.spec) &&
                                  std::get<ExtremeFact>(cx.spec).value == ExtremeKind::Min;
            TableLayout t = start_table(cx, {measure_name(cx, 0)});
            t.index_column = true;
            set_sort(t, measure_name(cx, 0), want_min ? "asc" : "desc");
            add_rows(t, cx, sorted_rows(cx.measure(0), !want_min, focus));
            t.highlight_row_ids = {row_id(*focus)};
            if (cx.subtype == Subtype::Extreme) {
                const char* name = want_min ? "min" : "max";
                t.sticky_summary_rows.push_back({want_min ? "Minimum" : "Maximum", name, stat(r, name), false});
            } else {
                t.sticky_summary_rows.push_back({"Rank", "rank", stat(r, "rank"), false});
            }
            finish_table(t);
            return t;
        }
        case Subtype::Association: {
            const PairedRows p = paired(cx.slice);
            TableLayout t = start_table(cx, {measure_name(cx, 0), measure_name(cx, 1)});
            set_sort(t, measure_name(cx, 0), "asc");
            std::vector<std::size_t> idx(p.rows.size());
            for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
            std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return p.x[a] < p.x[b]; });
            std::vector<std::size_t> rows;
            for (std::size_t i : idx) rows.push_back(p.rows[i]);
            add_rows(t, cx, rows);
            t.sticky_summary_rows.push_back({"Pearson r", "pearson_r", stat(r, "pearson_r"), true});
            finish_table(t);
            return t;
        }
        case Subtype::Difference: {
            const auto& f = std::get<DifferenceFact>(cx.spec);
            TableLayout t;
            t.layout = std::string(table_layout_name(cx.subtype));
            t.subtype = cx.subtype;
            t.widgets = widgets_of(cx.slice);
            const std::string id_col = cx.slice.identifier_column.value_or("entity");
            const std::string m = cx.column_name(f.measure);
            t.columns = {TableColumn{id_col, "", {}}, TableColumn{m, "", {}}};
            for (std::size_t i = 0; i < t.widgets.size(); ++i) {
                auto& col = t.widgets[i].column == m ? t.columns[1] : t.columns[0];
                col.widgets.push_back(i);
            }
            const std::size_t rx = cx.slice.focus_rows.front();
            const std::size_t ry = cx.slice.focus_y_rows.front();
            t.rows.push_back({row_id(rx), std::nullopt, {cx.label(rx), stat(r, "x_value")}});
            t.rows.push_back({row_id(ry), std::nullopt, {cx.label(ry), stat(r, "y_value")}});
            t.rows.push_back({"difference", std::nullopt, {"Difference", stat(r, "difference")}});
            t.highlight_row_ids = {"difference"};
            finish_table(t);
            return t;
        }
        case Subtype::Categorization: {
            const FilterList& sub = subspace_of(cx.spec);
            TableLayout t = start_table(cx, {});
            std::vector<std::size_t> rows;
            for (std::size_t i = 0; i < cx.ds.rows.size(); ++i) {
                const bool any = sub.empty() || std::any_of(sub.begin(), sub.end(), [&](const FilterPredicate& p) {
                                     return evaluate_predicate(cx.ds.rows[i], p, cx.ds);
                                 });
                if (any) rows.push_back(i);
            }
            add_rows(t, cx, rows);
            for (std::size_t row : cx.slice.subspace_rows) t.highlight_row_ids.push_back(row_id(row));
            for (std::size_t i = 0; i < sub.size(); ++i) {
                const std::string name = "predicate_count_" + std::to_string(i + 1);
                t.sticky_summary_rows.push_back({sub[i].describe(), name, stat(r, name), true});
            }
            t.sticky_summary_rows.push_back({"All filters", "count", stat(r, "count"), true});
            finish_table(t);
            return t;
        }
        case Subtype::Distribution: {
            TableLayout t;
            t.layout = std::string(table_layout_name(cx.subtype));
            t.subtype = cx.subtype;
            t.widgets = widgets_of(cx.slice);
            t.columns = {TableColumn{"range", "asc", {}}, TableColumn{"count", "", {}}};
            const Histogram h = sturges_histogram(cx.measure(0).values);
            for (std::size_t i = 0; i < h.counts.size(); ++i) {
                const bool last = i + 1 == h.counts.size();
                const std::string range = "[" + fmt(h.edges[i]) + ", " + fmt(h.edges[i + 1]) + (last ? "]" : ")");
                t.rows.push_back({"bin-" + std::to_string(i + 1), std::nullopt, {range, h.counts[i]}});
            }
            t.sticky_summary_rows.push_back({"Skewness", "skewness", stat(r, "skewness"), true});
            t.notes.push_back("Column " + measure_name(cx, 0) + "; " + std::to_string(h.counts.size()) +
                              " bins by Sturges' rule.");
            finish_table(t);
            return t;
        }
        case Subtype::Outlier1D: {
            const auto focus = single_focus(cx.slice);
            TableLayout t = start_table(cx, {measure_name(cx, 0)});
            t.index_column = true;
            set_sort(t, measure_name(cx, 0), "desc");
            add_rows(t, cx, sorted_rows(cx.measure(0), true, focus));
            t.highlight_row_ids = {row_id(*focus)};
            t.sticky_summary_rows.push_back({"Lower fence", "lower_fence", stat(r, "lower_fence"), false});
            t.sticky_summary_rows.push_back({"Upper fence", "upper_fence", stat(r, "upper_fence"), false});
            finish_table(t);
            return t;
        }
        case Subtype::Outlier2D: {
            const auto focus = single_focus(cx.slice);
            const PairedRows p = paired(cx.slice);
            TableLayout t = start_table(cx, {measure_name(cx, 0), measure_name(cx, 1)});
            t.columns.push_back({"mahalanobis_d2", "desc", {}});
            t.index_column = true;
            std::vector<double> d2(p.rows.size());
            for (std::size_t i = 0; i < d2.size(); ++i)
                d2[i] = p.rows[i] == *focus ? stat(r, "mahalanobis_d2") : mahalanobis(r, p.x[i], p.y[i]);
            MeasureVector by_distance{"mahalanobis_d2", p.rows, d2, 0};
            const auto rows = sorted_rows(by_distance, true, focus);
            add_rows(t, cx, rows);
            for (std::size_t k = 0; k < rows.size(); ++k) {
                const auto i = static_cast<std::size_t>(std::find(p.rows.begin(), p.rows.end(), rows[k]) - p.rows.begin());
                t.rows[k].cells.back() = d2[i];
            }
            t.highlight_row_ids = {row_id(*focus)};
            t.sticky_summary_rows.push_back({"Focus distance", "mahalanobis_d2", stat(r, "mahalanobis_d2"), true});
            t.sticky_summary_rows.push_back({"Cutoff", "threshold", stat(r, "threshold"), false});
            finish_table(t);
            return t;
        }
    }
    throw std::logic_error("unknown subtype");
}

// ---------------------------------------------------------------- charts

ChartSpec chart_for(const Context& cx) {
    const auto& r = cx.result;
    ChartSpec c = start_chart(cx);
    std::vector<std::string> keep;
    switch (cx.subtype) {
        case Subtype::ValueMean: {
            const auto& m = cx.measure(0);
            for (std::size_t i = 0; i < m.rows.size(); ++i) c.data.push_back(point(cx, m.rows[i], m.values[i]));
            c.encoding["x"] = axis("value", "quantitative", measure_name(cx, 0));
            c.encoding["tooltip"] = axis("label", "nominal");
            c.annotations.push_back(rule("x", r, "mean", "mean " + fmt(stat(r, "mean"))));
            add_claimed(c, r, "x");
            break;
        }
        case Subtype::ValueMedian: {
            const auto& m = cx.measure(0);
            const auto order = sorted_rows(m, true, std::nullopt);
            for (std::size_t row : order) c.data.push_back(point(cx, row, *cx.value(row, m.attribute)));
            c.encoding["x"] = axis("label", "nominal");
            c.encoding["x"]["sort"] = "-y";
            c.encoding["y"] = axis("value", "quantitative", measure_name(cx, 0));
            for (std::size_t row : median_rows(m)) {
                c.annotations.push_back(highlight(row_id(row), cx.label(row)));
                keep.push_back(row_id(row));
            }
            c.annotations.push_back(rule("y", r, "median", "median " + fmt(stat(r, "median"))));
            add_claimed(c, r, "y");
            break;
        }
        case Subtype::ValueSum: {
            const auto& m = cx.measure(0);
            double running = 0;
            for (std::size_t i = 0; i < m.rows.size(); ++i) {
                ojson p = point(cx, m.rows[i], m.values[i]);
                p["start"] = running;
                running += m.values[i];
                p["end"] = running;
                c.data.push_back(std::move(p));
            }
            c.encoding["y"] = axis("end", "quantitative", measure_name(cx, 0));
            c.encoding["y2"] = axis("start", "quantitative");
            c.encoding["color"] = axis("label", "nominal");
            c.annotations.push_back(label_for(r, "sum", "sum " + fmt(stat(r, "sum"))));
            add_claimed(c, r, "y");
            break;
        }
        case Subtype::Proportion: {
            const auto& m = cx.measure(0);
            const double focus = stat(r, "focus_sum");
            const double total = stat(r, "reference_sum");
            ojson root{{"id", "root"}, {"parent", nullptr}, {"label", "all"}, {"value", total}};
            ojson f{{"id", "focus"}, {"parent", "root"}, {"label", "focus"}, {"value", focus}};
            ojson rest{{"id", "rest"}, {"parent", "root"}, {"label", "rest"}, {"value", total - focus}};
            c.data = ojson::array({root, f, rest});
            keep = {"root", "focus", "rest"};
            for (std::size_t i = 0; i < m.rows.size(); ++i) {
                ojson p = point(cx, m.rows[i], m.values[i]);
                const bool in_focus = std::binary_search(cx.slice.focus_rows.begin(), cx.slice.focus_rows.end(), m.rows[i]);
                p["parent"] = in_focus ? "focus" : "rest";
                c.data.push_back(std::move(p));
            }
            c.encoding["size"] = axis("value", "quantitative", measure_name(cx, 0));
            c.encoding["rings"] = ojson::array({"focus/rest", "data points"});
            c.annotations.push_back(highlight("focus", "focus"));
            c.annotations.push_back(label_for(r, "proportion", format_fixed(stat(r, "proportion"), 1) + "%", "focus"));
            add_claimed(c, r, "");
            break;
        }
        case Subtype::Trend: {
            const auto& m = cx.measure(0);
            for (std::size_t i = 0; i < m.rows.size(); ++i) {
                ojson p = point(cx, m.rows[i], m.values[i]);
                p["date"] = cx.slice.dates[i].iso();
                c.data.push_back(std::move(p));
            }
            c.encoding["x"] = axis("date", "temporal", *cx.slice.time_column);
            c.encoding["y"] = axis("value", "quantitative", measure_name(cx, 0));
            keep = {row_id(m.rows.front()), row_id(m.rows.back())};
            c.annotations.push_back(label_for(r, "first", fmt(stat(r, "first")), keep[0]));
            c.annotations.push_back(label_for(r, "last", fmt(stat(r, "last")), keep[1]));
            c.annotations.push_back(label_for(r, "change", "change " + fmt(stat(r, "change"))));
            break;
        }
        case Subtype::Extreme:
        case Subtype::Rank: {
            const auto focus = *single_focus(cx.slice);
            const bool want_min = std::holds_alternative<ExtremeFact>(cx.spec) &&
                                  std::get<ExtremeFact>(cx.spec).value == ExtremeKind::Min;
            const auto& m = cx.measure(0);
            const auto order = sorted_rows(m, !want_min, focus);
            for (std::size_t k = 0; k < order.size(); ++k) {
                ojson p = point(cx, order[k], *cx.value(order[k], m.attribute));
                p["position"] = k + 1;
                c.data.push_back(std::move(p));
            }
            c.encoding["x"] = axis("label", "nominal");
            c.encoding["x"]["sort"] = want_min ? "y" : "-y";
            c.encoding["y"] = axis("value", "quantitative", measure_name(cx, 0));
            keep = {row_id(focus)};
            c.annotations.push_back(highlight(row_id(focus), cx.label(focus)));
            if (cx.subtype == Subtype::Extreme) {
                c.annotations.push_back(label_for(r, "focus_value", fmt(stat(r, "focus_value")), row_id(focus)));
                const char* name = want_min ? "min" : "max";
                c.annotations.push_back(rule("y", r, name, std::string(name) + " " + fmt(stat(r, name))));
            } else {
                c.annotations.push_back(
                    label_for(r, "rank", format_ordinal(static_cast<int>(stat(r, "rank"))), row_id(focus)));
                add_claimed(c, r, "");
            }
            break;
        }
        case Subtype::Association: {
            const PairedRows p = paired(cx.slice);
            for (std::size_t i = 0; i < p.rows.size(); ++i) c.data.push_back(point_xy(cx, p.rows[i], p.x[i], p.y[i]));
            c.encoding["x"] = axis("x", "quantitative", measure_name(cx, 0));
            c.encoding["y"] = axis("y", "quantitative", measure_name(cx, 1));
            c.annotations.push_back(label_for(r, "pearson_r", "r = " + format_fixed(stat(r, "pearson_r"), 3)));
            c.annotations.push_back(rule("x", r, "mean_x", "mean " + fmt(stat(r, "mean_x"))));
            c.annotations.push_back(rule("y", r, "mean_y", "mean " + fmt(stat(r, "mean_y"))));
            break;
        }
        case Subtype::Difference: {
            const std::size_t rx = cx.slice.focus_rows.front();
            const std::size_t ry = cx.slice.focus_y_rows.front();
            c.data.push_back(point(cx, rx, stat(r, "x_value")));
            c.data.push_back(point(cx, ry, stat(r, "y_value")));
            c.encoding["x"] = axis("label", "nominal");
            c.encoding["y"] = axis("value", "quantitative", measure_name(cx, 0));
            Annotation d;
            d.type = "diffline";
            d.axis = "y";
            d.statistic = "difference";
            d.value = stat(r, "difference");
            d.start = row_id(rx);
            d.end = row_id(ry);
            d.text = "difference " + fmt(*d.value);
            c.annotations.push_back(std::move(d));
            add_claimed(c, r, "y");
            break;
        }
        case Subtype::Categorization: {
            const FilterList& sub = subspace_of(cx.spec);
            auto set_item = [](std::vector<std::string> sets, double size) {
                ojson j;
                j["id"] = "set-" + [&] {
                    std::string s;
                    for (const auto& x : sets) s += (s.empty() ? "" : "-") + x;
                    return s;
                }();
                j["sets"] = sets;
                j["size"] = size;
                return j;
            };
            std::vector<std::string> names;
            for (std::size_t i = 0; i < sub.size(); ++i) names.push_back("p" + std::to_string(i + 1));
            ojson labels = ojson::object();
            for (std::size_t i = 0; i < sub.size(); ++i) labels[names[i]] = sub[i].describe();
            c.encoding["sets"] = labels;
            if (sub.empty()) {
                ojson all = set_item({"all"}, stat(r, "count"));
                c.data.push_back(all);
                c.annotations.push_back(label_for(r, "count", fmt(stat(r, "count")), all.at("id").get<std::string>()));
            } else if (sub.size() <= 2) {
                for (std::size_t i = 0; i < sub.size(); ++i) {
                    const std::string s = "predicate_count_" + std::to_string(i + 1);
                    ojson item = set_item({names[i]}, stat(r, s));
                    c.annotations.push_back(label_for(r, s, fmt(stat(r, s)), item.at("id").get<std::string>()));
                    c.data.push_back(std::move(item));
                }
                if (sub.size() == 1)
                    c.annotations.push_back(label_for(r, "count", fmt(stat(r, "count")), c.data[0].at("id").get<std::string>()));
                if (sub.size() == 2) {
                    ojson both = set_item(names, stat(r, "count"));
                    c.annotations.push_back(label_for(r, "count", fmt(stat(r, "count")), both.at("id").get<std::string>()));
                    c.data.push_back(std::move(both));
                }
                c.encoding["layout"] = "proportional";
            } else {
                // Count matrix: singles, pairs and the full intersection.
                for (std::size_t i = 0; i < sub.size(); ++i) {
                    const std::string s = "predicate_count_" + std::to_string(i + 1);
                    ojson item = set_item({names[i]}, stat(r, s));
                    c.annotations.push_back(label_for(r, s, fmt(stat(r, s)), item.at("id").get<std::string>()));
                    c.data.push_back(std::move(item));
                }
                for (std::size_t i = 0; i < sub.size(); ++i)
                    for (std::size_t j = i + 1; j < sub.size(); ++j) {
                        std::size_t n = 0;
                        for (const auto& row : cx.ds.rows)
                            n += evaluate_predicate(row, sub[i], cx.ds) && evaluate_predicate(row, sub[j], cx.ds);
                        c.data.push_back(set_item({names[i], names[j]}, static_cast<double>(n)));
                    }
                ojson all = set_item(names, stat(r, "count"));
                c.annotations.push_back(label_for(r, "count", fmt(stat(r, "count")), all.at("id").get<std::string>()));
                c.data.push_back(std::move(all));
                c.encoding["layout"] = "count-matrix";
                c.notes.push_back("More than two filters: shown as a count matrix instead of proportional circles.");
            }
            add_claimed(c, r, "");
            break;
        }
        case Subtype::Distribution: {
            const Histogram h = sturges_histogram(cx.measure(0).values);
            for (std::size_t i = 0; i < h.counts.size(); ++i) {
                ojson b;
                b["id"] = "bin-" + std::to_string(i + 1);
                b["bin_start"] = h.edges[i];
                b["bin_end"] = h.edges[i + 1];
                b["count"] = h.counts[i];
                c.data.push_back(std::move(b));
            }
            c.encoding["x"] = axis("bin_start", "quantitative", measure_name(cx, 0));
            c.encoding["x2"] = axis("bin_end", "quantitative");
            c.encoding["y"] = axis("count", "quantitative");
            c.annotations.push_back(rule("x", r, "mean", "mean " + fmt(stat(r, "mean"))));
            c.annotations.push_back(label_for(r, "skewness", "skewness " + format_fixed(stat(r, "skewness"), 3)));
            break;
        }
        case Subtype::Outlier1D: {
            const auto focus = *single_focus(cx.slice);
            const auto& m = cx.measure(0);
            for (std::size_t i = 0; i < m.rows.size(); ++i) c.data.push_back(point(cx, m.rows[i], m.values[i]));
            c.encoding["x"] = axis("value", "quantitative", measure_name(cx, 0));
            c.encoding["tooltip"] = axis("label", "nominal");
            keep = {row_id(focus)};
            c.annotations.push_back(highlight(row_id(focus), cx.label(focus)));
            c.annotations.push_back(label_for(r, "focus_value", fmt(stat(r, "focus_value")), row_id(focus)));
            c.annotations.push_back(rule("x", r, "lower_fence", "lower fence " + fmt(stat(r, "lower_fence"))));
            c.annotations.push_back(rule("x", r, "upper_fence", "upper fence " + fmt(stat(r, "upper_fence"))));
            break;
        }
        case Subtype::Outlier2D: {
            const auto focus = *single_focus(cx.slice);
            const PairedRows p = paired(cx.slice);
            for (std::size_t i = 0; i < p.rows.size(); ++i) c.data.push_back(point_xy(cx, p.rows[i], p.x[i], p.y[i]));
            c.encoding["x"] = axis("x", "quantitative", measure_name(cx, 0));
            c.encoding["y"] = axis("y", "quantitative", measure_name(cx, 1));
            keep = {row_id(focus)};
            c.annotations.push_back(highlight(row_id(focus), cx.label(focus)));
            c.annotations.push_back(
                label_for(r, "mahalanobis_d2", "d² = " + format_fixed(stat(r, "mahalanobis_d2"), 3), row_id(focus)));
            c.annotations.push_back(rule("x", r, "mean_x", "mean " + fmt(stat(r, "mean_x"))));
            c.annotations.push_back(rule("y", r, "mean_y", "mean " + fmt(stat(r, "mean_y"))));
            break;
        }
    }
    cap_chart(c, keep);
    return c;
}

void require_verified(const VerificationResult& r) {
    if (r.verdict == Verdict::Unverifiable)
        throw EvidenceError(EvidenceError::Kind::UnsupportedVerdict,
                            "UnsupportedVerdict: unverifiable claims have no evidence bundle");
}

}  // namespace

std::optional<EvidenceForm> evidence_form_from_string(std::string_view text) {
    if (text == "table") return EvidenceForm::Table;
    if (text == "chart") return EvidenceForm::Chart;
    if (text == "both") return EvidenceForm::Both;
    return std::nullopt;
}

std::string_view table_layout_name(Subtype s) {
    static const char* names[] = {"T1", "T2", "T3", "T4", "T5", "T6", "T7", "T8", "T9", "T10", "T11", "T12", "T13"};
    return names[static_cast<std::size_t>(s)];
}

std::string_view chart_layout_name(Subtype s) {
    static const char* names[] = {"V1", "V2", "V3", "V4", "V5", "V6", "V7", "V8", "V9", "V10", "V11", "V12", "V13"};
    return names[static_cast<std::size_t>(s)];
}

std::string_view chart_kind(Subtype s) {
    static const char* kinds[] = {"strip+meanline",
                                  "sortedbar+medianhighlight",
                                  "stackedbar",
                                  "sunburst",
                                  "line",
                                  "sortedbar+highlight(extreme)",
                                  "sortedbar+highlight(rank)",
                                  "scatter",
                                  "comparisonbars+diffline",
                                  "venn",
                                  "histogram",
                                  "strip+outlierhighlight",
                                  "scatter+outlierhighlight"};
    return kinds[static_cast<std::size_t>(s)];
}

Histogram sturges_histogram(const std::vector<double>& values) {
    Histogram h;
    if (values.empty()) return h;
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it, hi = *hi_it;
    const auto k = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(values.size())))) + 1;
    const double width = (hi - lo) / static_cast<double>(k);
    for (std::size_t i = 0; i < k; ++i) h.edges.push_back(lo + width * static_cast<double>(i));
    h.edges.push_back(hi);
    h.counts.assign(k, 0);
    for (double v : values) {
        std::size_t b = k - 1;
        if (width > 0 && v < hi) b = std::min(k - 1, static_cast<std::size_t>((v - lo) / width));
        // Guard the floating-point edge case where v sits exactly on an edge.
        while (b > 0 && v < h.edges[b]) --b;
        while (b + 1 < k && v >= h.edges[b + 1]) ++b;
        ++h.counts[b];
    }
    return h;
}

TableLayout build_table(const Dataset& ds, const EvidenceSlice& slice, const FactSpec& spec,
                        const VerificationResult& result) {
    require_verified(result);
    return table_for(Context{ds, slice, spec, result, result.subtype});
}

ChartSpec build_chart(const Dataset& ds, const EvidenceSlice& slice, const FactSpec& spec,
                      const VerificationResult& result) {
    require_verified(result);
    return chart_for(Context{ds, slice, spec, result, result.subtype});
}

ChartSpec build_context_overlay(const Dataset& ds, const FactSpec& spec) {
    const FilterList& sub = subspace_of(spec);
    std::optional<std::size_t> tcol;
    for (const auto& p : sub)
        if (auto c = ds.resolve(p.attribute); c && ds.columns[*c].kind == ColumnKind::Temporal) {
            tcol = c;
            break;
        }
    if (!tcol) tcol = time_column(ds);
    if (!tcol)
        throw EvidenceError(EvidenceError::Kind::NoTemporalColumn,
                            "NoTemporalColumn: the dataset has no temporal column for an overview");
    const auto measures = measures_of(spec);
    if (measures.empty())
        throw EvidenceError(EvidenceError::Kind::NoTemporalColumn, "NoTemporalColumn: the spec has no measure to plot");
    const auto mcol = ds.resolve(measures.front());

    std::optional<Date> win_lo, win_hi;
    FilterList others;
    for (const auto& p : sub) {
        if (ds.resolve(p.attribute) != tcol) {
            others.push_back(p);
            continue;
        }
        auto d = p.literal.as_date();
        if (!d) continue;
        if (p.op == CompareOp::Ge || p.op == CompareOp::Gt || p.op == CompareOp::Eq) win_lo = win_lo ? std::max(*win_lo, *d) : *d;
        if (p.op == CompareOp::Le || p.op == CompareOp::Lt || p.op == CompareOp::Eq) win_hi = win_hi ? std::min(*win_hi, *d) : *d;
    }

    struct Pt {
        Date date;
        std::size_t row;
        double value;
    };
    std::vector<Pt> pts;
    for (std::size_t i = 0; i < ds.rows.size(); ++i) {
        const auto* d = std::get_if<Date>(&ds.rows[i][*tcol]);
        auto v = mcol ? numeric_value(ds.rows[i][*mcol]) : std::nullopt;
        if (!d || !v) continue;
        if (!std::all_of(others.begin(), others.end(),
                         [&](const FilterPredicate& p) { return evaluate_predicate(ds.rows[i], p, ds); }))
            continue;
        pts.push_back({*d, i, *v});
    }
    std::stable_sort(pts.begin(), pts.end(), [](const Pt& a, const Pt& b) { return a.date < b.date; });

    ChartSpec c;
    c.layout = "context";
    c.kind = "line";
    for (const auto& p : pts) {
        ojson j;
        j["id"] = row_id(p.row);
        j["date"] = p.date.iso();
        j["value"] = p.value;
        j["in_window"] = (!win_lo || p.date >= *win_lo) && (!win_hi || p.date <= *win_hi);
        c.data.push_back(std::move(j));
    }
    c.encoding["x"] = axis("date", "temporal", ds.columns[*tcol].name);
    c.encoding["y"] = axis("value", "quantitative", mcol ? ds.columns[*mcol].name : measures.front());
    if (!pts.empty()) {
        const Date lo = pts.front().date, hi = pts.back().date;
        Annotation band;
        band.type = "band";
        band.axis = "x";
        band.start = std::clamp(win_lo.value_or(lo), lo, hi).iso();
        band.end = std::clamp(win_hi.value_or(hi), lo, hi).iso();
        band.text = "claim window";
        c.annotations.push_back(std::move(band));
        c.encoding["extent"] = ojson{{"start", lo.iso()}, {"end", hi.iso()}};
    }
    cap_chart(c, {});
    return c;
}

EvidenceBundle build_bundle(const Dataset& ds, const EvidenceSlice& slice, const FactSpec& spec,
                            const VerificationResult& result, EvidenceForm form) {
    require_verified(result);
    EvidenceBundle b;
    b.subtype = result.subtype;
    b.verdict = result.verdict;
    if (form != EvidenceForm::Chart) b.table = build_table(ds, slice, spec, result);
    if (form != EvidenceForm::Table) {
        b.chart = build_chart(ds, slice, spec, result);
        if (std::holds_alternative<TrendFact>(spec)) b.context = build_context_overlay(ds, spec);
    }
    return b;
}

EvidenceBundle build_bundle(const Dataset& ds, const FactSpec& spec, EvidenceForm form, const VeracityConfig& config) {
    const VerificationResult result = verify(ds, spec, config);
    require_verified(result);
    const EvidenceSlice slice = retrieve(ds, spec);
    return build_bundle(ds, slice, spec, result, form);
}

ojson widget_to_json(const FilterWidget& w) {
    ojson j;
    j["column"] = w.column;
    j["op"] = std::string(to_string(w.predicate.op));
    j["value"] = predicate_to_json(w.predicate).at("value");
    j["role"] = std::string(to_string(w.role));
    j["label"] = w.predicate.describe();
    j["rows_before"] = w.rows_before;
    j["rows_after"] = w.rows_after;
    return j;
}

namespace {

ojson widgets_json(const std::vector<FilterWidget>& ws) {
    ojson a = ojson::array();
    for (const auto& w : ws) a.push_back(widget_to_json(w));
    return a;
}

}  // namespace

ojson table_to_json(const TableLayout& t) {
    ojson j;
    j["layout"] = t.layout;
    j["subtype"] = std::string(to_string(t.subtype));
    j["index_column"] = t.index_column;
    ojson cols = ojson::array();
    for (const auto& c : t.columns) {
        ojson col;
        col["name"] = c.name;
        col["sort"] = c.sort.empty() ? ojson(nullptr) : ojson(c.sort);
        col["widgets"] = c.widgets;
        cols.push_back(std::move(col));
    }
    j["columns"] = std::move(cols);
    ojson rows = ojson::array();
    for (const auto& r : t.rows) {
        ojson row;
        row["id"] = r.id;
        if (r.index) row["index"] = *r.index;
        row["cells"] = r.cells;
        rows.push_back(std::move(row));
    }
    j["rows"] = std::move(rows);
    ojson summary = ojson::array();
    for (const auto& s : t.sticky_summary_rows)
        summary.push_back(ojson{{"label", s.label}, {"statistic", s.statistic}, {"value", s.value}, {"highlighted", s.highlighted}});
    j["sticky_summary_rows"] = std::move(summary);
    j["highlight_row_ids"] = t.highlight_row_ids;
    j["widgets"] = widgets_json(t.widgets);
    j["total_rows"] = t.total_rows;
    j["truncated"] = t.truncated;
    j["notes"] = t.notes;
    return j;
}

ojson chart_to_json(const ChartSpec& c) {
    ojson j;
    j["layout"] = c.layout;
    j["kind"] = c.kind;
    j["data"] = c.data;
    j["encoding"] = c.encoding;
    ojson anns = ojson::array();
    for (const auto& a : c.annotations) {
        ojson x;
        x["type"] = a.type;
        if (!a.axis.empty()) x["axis"] = a.axis;
        if (a.statistic) x["statistic"] = *a.statistic;
        if (a.value) x["value"] = *a.value;
        if (a.mark) x["mark"] = *a.mark;
        if (a.start) x["start"] = *a.start;
        if (a.end) x["end"] = *a.end;
        x["text"] = a.text;
        anns.push_back(std::move(x));
    }
    j["annotations"] = std::move(anns);
    j["widgets"] = widgets_json(c.widgets);
    j["total_points"] = c.total_points;
    j["truncated"] = c.truncated;
    j["notes"] = c.notes;
    return j;
}

ojson bundle_to_json(const EvidenceBundle& b) {
    ojson j;
    j["schema"] = "evidence-v1";
    j["subtype"] = std::string(to_string(b.subtype));
    j["verdict"] = std::string(to_string(b.verdict));
    if (b.table) j["table"] = table_to_json(*b.table);
    if (b.chart) j["chart"] = chart_to_json(*b.chart);
    if (b.context) j["context"] = chart_to_json(*b.context);
    return j;
}

}  // namespace datacheck
