#include "oracle.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace oracle {

using namespace datacheck;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::optional<double> number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) return std::nullopt;
    return v;
}

/// YYYY-MM-DD as the integer YYYYMMDD.
std::optional<long> day_key(const std::string& s) {
    int y, m, d;
    char tail;
    if (s.size() != 10 || std::sscanf(s.c_str(), "%4d-%2d-%2d%c", &y, &m, &d, &tail) != 3) return std::nullopt;
    return y * 10000L + m * 100L + d;
}

Kind kind_of(const Table& t, int c) {
    bool num = true, date = true;
    for (const auto& r : t.rows) {
        const auto& s = r[static_cast<std::size_t>(c)];
        if (s.empty()) continue;
        num = num && number(s).has_value();
        date = date && day_key(s).has_value();
    }
    return num ? Kind::Numeric : date ? Kind::Temporal : Kind::Categorical;
}

std::string literal_text(const Literal& l) {
    if (const auto* n = std::get_if<Number>(&l.value)) {
        std::ostringstream os;
        os.precision(17);
        os << n->value;
        return os.str();
    }
    return std::get<std::string>(l.value);
}

template <class T>
bool cmp(const T& a, CompareOp op, const T& b) {
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

bool holds(const Table& t, std::size_t row, const FilterPredicate& p) {
    const int c = t.column(p.attribute);
    const std::string& cell = t.rows[row][static_cast<std::size_t>(c)];
    if (cell.empty()) return false;
    switch (kind_of(t, c)) {
        case Kind::Numeric: {
            const double lit = std::holds_alternative<Number>(p.literal.value)
                                   ? std::get<Number>(p.literal.value).value
                                   : *number(std::get<std::string>(p.literal.value));
            return cmp(*number(cell), p.op, lit);
        }
        case Kind::Temporal: return cmp(*day_key(cell), p.op, *day_key(literal_text(p.literal)));
        case Kind::Categorical: return cmp(lower(cell), p.op, lower(literal_text(p.literal)));
    }
    return false;
}

std::vector<std::size_t> filter(const Table& t, std::vector<std::size_t> rows, const FilterList& preds) {
    for (const auto& p : preds)
        std::erase_if(rows, [&](std::size_t r) { return !holds(t, r, p); });
    return rows;
}

std::vector<std::size_t> all_rows(const Table& t) {
    std::vector<std::size_t> v(t.rows.size());
    std::iota(v.begin(), v.end(), std::size_t{0});
    return v;
}

std::optional<double> cell_number(const Table& t, std::size_t row, const std::string& col) {
    return number(t.rows[row][static_cast<std::size_t>(t.column(col))]);
}

std::vector<double> values(const Table& t, const std::vector<std::size_t>& rows, const std::string& col) {
    std::vector<double> out;
    for (std::size_t r : rows)
        if (auto v = cell_number(t, r, col)) out.push_back(*v);
    return out;
}

bool same_rounded(double a, double b, int d) {
    const double k = std::pow(10.0, d);
    return std::round(a * k) == std::round(b * k);
}

struct Percent {
    double value;
    int decimals;
};

Percent parse_pct(std::string s) {
    s.erase(std::remove(s.begin(), s.end(), '%'), s.end());
    while (!s.empty() && s.back() == ' ') s.pop_back();
    const auto dot = s.find('.');
    return {std::stod(s), dot == std::string::npos ? 0 : static_cast<int>(s.size() - dot - 1)};
}

double mean(const std::vector<double>& v) {
    long double s = 0;
    for (double x : v) s += x;
    return static_cast<double>(s / static_cast<long double>(v.size()));
}

/// Linear interpolation between order statistics at h = q (n - 1).
double quartile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double h = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= v.size()) return v[lo];
    return v[lo] + (h - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
}

Outcome unverifiable() { return {}; }

Outcome decided(bool ok, double actual) {
    Outcome o;
    o.verdict = ok ? Verdict::Accurate : Verdict::Inaccurate;
    o.actual = actual;
    return o;
}

std::optional<std::size_t> one_row(const std::vector<std::size_t>& rows) {
    if (rows.size() != 1) return std::nullopt;
    return rows[0];
}

}  // namespace

std::string Table::to_csv() const {
    std::string out;
    for (std::size_t c = 0; c < names.size(); ++c) out += (c ? "," : "") + names[c];
    out += "\n";
    for (const auto& r : rows) {
        for (std::size_t c = 0; c < r.size(); ++c) out += (c ? "," : "") + r[c];
        out += "\n";
    }
    return out;
}

int Table::column(const std::string& name) const {
    for (std::size_t c = 0; c < names.size(); ++c)
        if (lower(names[c]) == lower(name)) return static_cast<int>(c);
    return -1;
}

bool close(double a, double b, double tolerance) {
    return std::fabs(a - b) <= tolerance * std::max(1.0, std::max(std::fabs(a), std::fabs(b)));
}

Outcome evaluate(const Table& t, const FactSpec& spec) {
    const auto rows = filter(t, all_rows(t), subspace_of(spec));

    if (const auto* f = std::get_if<CategorizationFact>(&spec)) {
        const double n = static_cast<double>(rows.size());
        return decided(static_cast<int>(rows.size()) == f->value, n);
    }
    if (rows.empty()) return unverifiable();

    return std::visit(
        Overloaded{
            [&](const ValueFact& f) -> Outcome {
                auto v = values(t, rows, f.measure);
                if (v.empty()) return unverifiable();
                double a = 0;
                if (f.aggregation == Aggregation::Sum) {
                    long double s = 0;
                    for (double x : v) s += x;
                    a = static_cast<double>(s);
                } else if (f.aggregation == Aggregation::Average) {
                    a = mean(v);
                } else {
                    std::sort(v.begin(), v.end());
                    const std::size_t n = v.size();
                    a = n % 2 ? v[n / 2] : 0.5 * v[n / 2 - 1] + 0.5 * v[n / 2];
                }
                return decided(same_rounded(a, f.value.value, f.value.decimals), a);
            },
            [&](const ProportionFact& f) -> Outcome {
                const auto focus = filter(t, rows, f.focus);
                long double fs = 0, ts = 0;
                for (std::size_t r : rows)
                    if (auto v = cell_number(t, r, f.measure)) {
                        ts += *v;
                        if (std::find(focus.begin(), focus.end(), r) != focus.end()) fs += *v;
                    }
                if (ts == 0) return unverifiable();
                const double pct = static_cast<double>(100.0L * fs / ts);
                const Percent claimed = parse_pct(f.value);
                return decided(same_rounded(pct, claimed.value, claimed.decimals), pct);
            },
            [&](const TrendFact& f) -> Outcome {
                int tc = -1;
                for (const auto& p : f.subspace)
                    if (kind_of(t, t.column(p.attribute)) == Kind::Temporal) {
                        tc = t.column(p.attribute);
                        break;
                    }
                std::vector<std::pair<long, double>> pts;
                for (std::size_t r : rows) {
                    auto d = day_key(t.rows[r][static_cast<std::size_t>(tc)]);
                    auto v = cell_number(t, r, f.measure);
                    if (d && v) pts.emplace_back(*d, *v);
                }
                if (pts.size() < 2) return unverifiable();
                std::stable_sort(pts.begin(), pts.end(),
                                 [](const auto& a, const auto& b) { return a.first < b.first; });
                const double change = pts.back().second - pts.front().second;
                const std::string dir = change > 0 ? "increase" : change < 0 ? "decrease" : "flat";
                Outcome o = decided(dir == std::string(to_string(f.value)), change);
                o.direction = dir;
                return o;
            },
            [&](const ExtremeFact& f) -> Outcome {
                auto r = one_row(filter(t, rows, f.focus));
                if (!r) return unverifiable();
                auto fv = cell_number(t, *r, f.measure);
                if (!fv) return unverifiable();
                const auto v = values(t, rows, f.measure);
                const double target = f.value == ExtremeKind::Max ? *std::max_element(v.begin(), v.end())
                                                                  : *std::min_element(v.begin(), v.end());
                return decided(*fv == target, target);
            },
            [&](const RankFact& f) -> Outcome {
                auto r = one_row(filter(t, rows, f.focus));
                if (!r) return unverifiable();
                auto fv = cell_number(t, *r, f.measure);
                if (!fv) return unverifiable();
                int rank = 1;
                for (double x : values(t, rows, f.measure))
                    if (x > *fv) ++rank;
                return decided(rank == f.value, rank);
            },
            [&](const AssociationFact& f) -> Outcome {
                std::vector<double> x, y;
                for (std::size_t r : rows) {
                    auto a = cell_number(t, r, f.measure_x);
                    auto b = cell_number(t, r, f.measure_y);
                    if (a && b) x.push_back(*a), y.push_back(*b);
                }
                if (x.size() < 3) return unverifiable();
                const double n = static_cast<double>(x.size());
                const double mx = mean(x), my = mean(y);
                double cxy = 0, cxx = 0, cyy = 0;
                for (std::size_t i = 0; i < x.size(); ++i) {
                    cxy += (x[i] - mx) * (y[i] - my) / (n - 1);
                    cxx += (x[i] - mx) * (x[i] - mx) / (n - 1);
                    cyy += (y[i] - my) * (y[i] - my) / (n - 1);
                }
                if (cxx == 0 || cyy == 0) return unverifiable();
                const double r = cxy / (std::sqrt(cxx) * std::sqrt(cyy));
                const bool ok = f.value == Correlation::Positive ? r >= 0.2 : r <= -0.2;
                Outcome o = decided(ok, r);
                o.statistics.emplace_back("pearson_r", r);
                return o;
            },
            [&](const DifferenceFact& f) -> Outcome {
                auto rx = one_row(filter(t, rows, {f.focus_x}));
                auto ry = one_row(filter(t, rows, {f.focus_y}));
                if (!rx || !ry) return unverifiable();
                auto x = cell_number(t, *rx, f.measure);
                auto y = cell_number(t, *ry, f.measure);
                if (!x || !y) return unverifiable();
                const double d = *x - *y;
                return decided(same_rounded(d, f.value.value, f.value.decimals), d);
            },
            [&](const CategorizationFact&) -> Outcome { return unverifiable(); },
            [&](const DistributionFact& f) -> Outcome {
                const auto v = values(t, rows, f.measure);
                if (v.size() < 3) return unverifiable();
                const double m = mean(v);
                long double m2 = 0, m3 = 0;
                for (double x : v) {
                    m2 += std::pow(x - m, 2);
                    m3 += std::pow(x - m, 3);
                }
                m2 /= v.size();
                m3 /= v.size();
                if (m2 == 0) return unverifiable();
                const double g1 = static_cast<double>(m3 / std::pow(m2, 1.5L));
                const bool right = f.value.rfind("right", 0) == 0;
                Outcome o = decided(right ? g1 >= 0.1 : g1 <= -0.1, g1);
                o.statistics.emplace_back("skewness", g1);
                return o;
            },
            [&](const OutlierFact& f) -> Outcome {
                auto r = one_row(filter(t, rows, {f.focus}));
                if (!r) return unverifiable();
                if (!f.measure_y) {
                    auto fv = cell_number(t, *r, f.measure);
                    if (!fv) return unverifiable();
                    const auto v = values(t, rows, f.measure);
                    if (v.size() < 4) return unverifiable();
                    const double q1 = quartile(v, 0.25), q3 = quartile(v, 0.75);
                    const bool flagged = *fv < q1 - 1.5 * (q3 - q1) || *fv > q3 + 1.5 * (q3 - q1);
                    Outcome o = decided(flagged, flagged);
                    o.statistics = {{"q1", q1}, {"q3", q3}, {"iqr", q3 - q1}};
                    return o;
                }
                std::vector<double> x, y;
                std::optional<std::size_t> at;
                for (std::size_t row : rows) {
                    auto a = cell_number(t, row, f.measure);
                    auto b = cell_number(t, row, *f.measure_y);
                    if (!a || !b) continue;
                    if (row == *r) at = x.size();
                    x.push_back(*a), y.push_back(*b);
                }
                if (!at || x.size() < 5) return unverifiable();
                const double n = static_cast<double>(x.size());
                const double mx = mean(x), my = mean(y);
                double a = 0, b = 0, d = 0;  // covariance matrix [[a b] [b d]]
                for (std::size_t i = 0; i < x.size(); ++i) {
                    a += (x[i] - mx) * (x[i] - mx) / (n - 1);
                    b += (x[i] - mx) * (y[i] - my) / (n - 1);
                    d += (y[i] - my) * (y[i] - my) / (n - 1);
                }
                const double det = a * d - b * b;
                if (!(det > 1e-12 * a * d)) return unverifiable();
                const double i11 = d / det, i12 = -b / det, i22 = a / det;
                const double u = x[*at] - mx, w = y[*at] - my;
                const double d2 = u * (i11 * u + i12 * w) + w * (i12 * u + i22 * w);
                const bool flagged = d2 > 7.378;
                Outcome o = decided(flagged, flagged);
                o.statistics.emplace_back("mahalanobis_d2", d2);
                return o;
            },
        },
        spec);
}

Table random_table(std::mt19937_64& rng, std::size_t n) {
    Table t;
    t.names = {"name", "group", "x", "y", "z", "day"};
    const char* groups[] = {"alpha", "beta", "gamma", "delta"};
    std::uniform_int_distribution<int> xi(0, 30), gi(0, 3), dayi(0, 2999);
    std::normal_distribution<double> yn(50, 15);
    std::uniform_real_distribution<double> u01(0, 1);
    const bool linear = u01(rng) < 0.1;
    const bool spike = u01(rng) < 0.3;
    std::vector<int> days;
    while (days.size() < n) {
        const int d = dayi(rng);
        if (std::find(days.begin(), days.end(), d) == days.end()) days.push_back(d);
    }
    char buf[64];
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::string> r;
        r.push_back("E" + std::to_string(i + 1));
        r.push_back(groups[gi(rng)]);
        int x = xi(rng);
        double y = linear ? 2.0 * x + 1 : std::round(yn(rng) * 100) / 100;
        if (spike && i == n / 2) {
            x = x * 4 + 60;
            if (!linear) y = y * 3 + 100;
        }
        r.push_back(std::to_string(x));
        std::snprintf(buf, sizeof buf, "%.2f", y);
        r.push_back(buf);
        const bool gap = u01(rng) < 0.08 && i + 3 < n;
        if (gap) {
            r.push_back("");
        } else {
            std::snprintf(buf, sizeof buf, "%.1f", std::round(u01(rng) * 1000) / 10);
            r.push_back(buf);
        }
        // Days since 2015-01-01 rendered through a civil-from-days conversion.
        long z = days[i] + 16436 + 719468;
        const long era = z / 146097;
        const long doe = z - era * 146097;
        const long yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
        const long doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
        const long mp = (5 * doy + 2) / 153;
        const long dd = doy - (153 * mp + 2) / 5 + 1;
        const long mm = mp < 10 ? mp + 3 : mp - 9;
        const long yy = yoe + era * 400 + (mm <= 2);
        std::snprintf(buf, sizeof buf, "%04ld-%02ld-%02ld", yy, mm, dd);
        r.push_back(buf);
        t.rows.push_back(std::move(r));
    }
    return t;
}

namespace {

template <class T>
const T& pick(std::mt19937_64& rng, const std::vector<T>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

bool coin(std::mt19937_64& rng, double p = 0.5) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; }

FilterPredicate eq(const std::string& attr, const std::string& text) { return {attr, CompareOp::Eq, Literal::text(text)}; }

FilterPredicate random_predicate(std::mt19937_64& rng, const Table& t, bool allow_group = true) {
    const std::size_t row = std::uniform_int_distribution<std::size_t>(0, t.rows.size() - 1)(rng);
    const int kind = std::uniform_int_distribution<int>(allow_group ? 0 : 1, 2)(rng);
    if (kind == 0) return {"group", coin(rng, 0.75) ? CompareOp::Eq : CompareOp::Ne, Literal::text(t.rows[row][1])};
    static const std::vector<CompareOp> ord = {CompareOp::Gt, CompareOp::Ge, CompareOp::Lt, CompareOp::Le};
    if (kind == 1) return {"x", pick(rng, ord), Literal::number(std::stod(t.rows[row][2]))};
    return {"day", pick(rng, ord), Literal::text(t.rows[row][5])};
}

FilterList random_subspace(std::mt19937_64& rng, const Table& t, int max_preds, bool allow_group = true) {
    FilterList out;
    const int k = std::uniform_int_distribution<int>(0, max_preds)(rng);
    for (int i = 0; i < k; ++i) out.push_back(random_predicate(rng, t, allow_group));
    return out;
}

/// A row name, usually from inside `rows`.
std::string focus_name(std::mt19937_64& rng, const Table& t, const std::vector<std::size_t>& rows) {
    if (!rows.empty() && coin(rng, 0.92)) return t.rows[pick(rng, rows)][0];
    return pick(rng, t.rows)[0];
}

/// Decimal count whose rounding of `x` is not within reach of a half-way tie.
int safe_decimals(std::mt19937_64& rng, double x) {
    int d = std::uniform_int_distribution<int>(0, 2)(rng);
    for (; d < 6; ++d) {
        const double s = std::fabs(x) * std::pow(10.0, d);
        if (std::fabs(s - std::floor(s) - 0.5) > 1e-6) break;
    }
    return d;
}

Number claim_number(std::mt19937_64& rng, std::optional<double> actual, bool truthful) {
    double v = actual.value_or(std::uniform_real_distribution<double>(-50, 50)(rng));
    if (!truthful) {
        const double shift = std::uniform_real_distribution<double>(0.1, 0.5)(rng) * (coin(rng) ? 1 : -1);
        v = v == 0 ? shift * 10 : v * (1 + shift);
    }
    const int d = safe_decimals(rng, v);
    const double k = std::pow(10.0, d);
    return Number{std::round(v * k) / k, d};
}

const std::vector<std::string> kMeasures = {"x", "y", "z"};

}  // namespace

FactSpec random_spec(std::mt19937_64& rng, const Table& t, Subtype subtype) {
    const bool truthful = coin(rng);
    auto rows_of = [&](const FilterList& sub) { return filter(t, all_rows(t), sub); };
    switch (subtype) {
        case Subtype::ValueMean:
        case Subtype::ValueMedian:
        case Subtype::ValueSum: {
            ValueFact f;
            f.measure = pick(rng, kMeasures);
            f.aggregation = subtype == Subtype::ValueMean     ? Aggregation::Average
                            : subtype == Subtype::ValueMedian ? Aggregation::Median
                                                              : Aggregation::Sum;
            f.subspace = random_subspace(rng, t, 2);
            f.identifier_key = "entities";
            f.value = claim_number(rng, evaluate(t, f).actual, truthful);
            return f;
        }
        case Subtype::Proportion: {
            ProportionFact f;
            f.measure = pick(rng, kMeasures);
            f.subspace = random_subspace(rng, t, 1, false);
            const auto rows = rows_of(f.subspace);
            f.focus = {coin(rng) ? eq("name", focus_name(rng, t, rows))
                                 : eq("group", rows.empty() ? std::string("alpha") : t.rows[pick(rng, rows)][1])};
            f.identifier_key = "entities";
            f.value = "50%";
            const Number n = claim_number(rng, evaluate(t, f).actual, truthful);
            f.value = Number{std::min(100.0, std::fabs(n.value)), n.decimals}.text() + "%";
            return f;
        }
        case Subtype::Trend: {
            TrendFact f;
            f.measure = coin(rng) ? "y" : "z";
            std::vector<std::string> days;
            for (const auto& r : t.rows) days.push_back(r[5]);
            std::sort(days.begin(), days.end());
            const std::size_t a = std::uniform_int_distribution<std::size_t>(0, days.size() / 2)(rng);
            const std::size_t b = std::uniform_int_distribution<std::size_t>(a, days.size() - 1)(rng);
            f.subspace = {{"day", CompareOp::Ge, Literal::text(days[a])}, {"day", CompareOp::Le, Literal::text(days[b])}};
            if (coin(rng, 0.3)) f.subspace.push_back(eq("group", pick(rng, t.rows)[1]));
            const Outcome o = evaluate(t, f);
            const bool inc = o.direction ? (*o.direction == "increase") == truthful : coin(rng);
            f.value = inc ? TrendDirection::Increase : TrendDirection::Decrease;
            return f;
        }
        case Subtype::Extreme: {
            ExtremeFact f;
            f.measure = pick(rng, kMeasures);
            f.subspace = random_subspace(rng, t, 2);
            const auto rows = rows_of(f.subspace);
            f.identifier_key = "entities";
            f.value = coin(rng) ? ExtremeKind::Max : ExtremeKind::Min;
            if (truthful && !rows.empty()) {
                // Point the focus at the true extreme.
                std::optional<std::size_t> best;
                for (std::size_t r : rows) {
                    auto v = cell_number(t, r, f.measure);
                    if (!v) continue;
                    auto bv = best ? cell_number(t, *best, f.measure) : std::nullopt;
                    if (!best || (f.value == ExtremeKind::Max ? *v > *bv : *v < *bv)) best = r;
                }
                f.focus = {eq("name", best ? t.rows[*best][0] : focus_name(rng, t, rows))};
            } else {
                f.focus = {eq("name", focus_name(rng, t, rows))};
            }
            return f;
        }
        case Subtype::Rank: {
            RankFact f;
            f.measure = pick(rng, kMeasures);
            f.subspace = random_subspace(rng, t, 2);
            f.focus = {eq("name", focus_name(rng, t, rows_of(f.subspace)))};
            f.identifier_key = "entities";
            const Outcome o = evaluate(t, f);
            f.value = truthful && o.actual ? static_cast<int>(*o.actual)
                                           : std::uniform_int_distribution<int>(1, static_cast<int>(t.rows.size()))(rng);
            return f;
        }
        case Subtype::Association: {
            AssociationFact f;
            const bool xy = coin(rng, 0.6);
            f.measure_x = xy ? "x" : "y";
            f.measure_y = xy ? "y" : "z";
            f.identifier_key = "entities";
            if (coin(rng, 0.4)) f.subspace = random_subspace(rng, t, 1);
            const Outcome o = evaluate(t, f);
            const bool pos = o.actual ? (*o.actual >= 0) == truthful : coin(rng);
            f.value = pos ? Correlation::Positive : Correlation::Negative;
            return f;
        }
        case Subtype::Difference: {
            DifferenceFact f;
            f.measure = pick(rng, kMeasures);
            if (coin(rng, 0.3)) f.subspace = {eq("group", pick(rng, t.rows)[1])};
            const auto rows = rows_of(f.subspace);
            f.focus_x = eq("name", focus_name(rng, t, rows));
            f.focus_y = eq("name", focus_name(rng, t, rows));
            f.value = claim_number(rng, evaluate(t, f).actual, truthful);
            return f;
        }
        case Subtype::Categorization: {
            CategorizationFact f;
            f.subspace = random_subspace(rng, t, 3);
            if (f.subspace.empty()) f.subspace.push_back(random_predicate(rng, t));
            f.identifier_key = "entities";
            const int n = static_cast<int>(rows_of(f.subspace).size());
            f.value = truthful ? n : n + std::uniform_int_distribution<int>(1, 3)(rng) * (n > 3 && coin(rng) ? -1 : 1);
            return f;
        }
        case Subtype::Distribution: {
            DistributionFact f;
            f.measure = pick(rng, kMeasures);
            f.identifier_key = "entities";
            if (coin(rng, 0.4)) f.subspace = random_subspace(rng, t, 1);
            f.value = "right-skew distribution";
            const Outcome o = evaluate(t, f);
            const bool right = o.actual ? (*o.actual >= 0) == truthful : coin(rng);
            f.value = right ? "right-skew distribution" : "left-skew distribution";
            return f;
        }
        case Subtype::Outlier1D:
        case Subtype::Outlier2D: {
            OutlierFact f;
            f.measure = subtype == Subtype::Outlier2D ? "x" : pick(rng, kMeasures);
            if (subtype == Subtype::Outlier2D) f.measure_y = "y";
            f.subspace = random_subspace(rng, t, 1);
            const auto rows = rows_of(f.subspace);
            // Lean toward the spiked row so both verdicts occur.
            f.focus = eq("name", coin(rng, 0.4) ? t.rows[t.rows.size() / 2][0] : focus_name(rng, t, rows));
            f.identifier_key = "entities";
            return f;
        }
    }
    return ValueFact{};
}

Case make_case(std::uint64_t seed, std::size_t index) {
    std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + index);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(5, 50)(rng);
    Case c;
    c.table = random_table(rng, n);
    const auto& subs = all_subtypes();
    c.spec = random_spec(rng, c.table, subs[index % subs.size()]);
    return c;
}

std::optional<std::string> disagreement(const VerificationResult& r, const Outcome& o, double tolerance) {
    if (r.verdict != o.verdict)
        return "verdict " + std::string(to_string(r.verdict)) + " vs oracle " + std::string(to_string(o.verdict));
    if (r.verdict == Verdict::Unverifiable) return std::nullopt;
    if (!r.actual) return "no actual value";
    if (r.actual->is_string()) {
        if (!o.direction || *o.direction != r.actual->get<std::string>())
            return "direction " + r.actual->get<std::string>() + " vs oracle " + o.direction.value_or("-");
    } else if (o.actual) {
        const double a = r.actual->is_boolean() ? (r.actual->get<bool>() ? 1.0 : 0.0) : r.actual->get<double>();
        if (!close(a, *o.actual, tolerance))
            return "actual " + std::to_string(a) + " vs oracle " + std::to_string(*o.actual);
    }
    for (const auto& [name, value] : o.statistics) {
        const auto mine = r.statistic(name);
        if (!mine) return "missing statistic " + name;
        if (!close(*mine, value, tolerance))
            return name + " " + std::to_string(*mine) + " vs oracle " + std::to_string(value);
    }
    return std::nullopt;
}

}  // namespace oracle
