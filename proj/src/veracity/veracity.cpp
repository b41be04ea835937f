#include "datacheck/veracity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "datacheck/literals.hpp"

namespace datacheck {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

using ojson = nlohmann::ordered_json;

struct Builder {
    VerificationResult r;

    void stat(std::string name, double value) { r.statistics.push_back({std::move(name), value}); }
    VerificationResult unverifiable(std::string code, std::string message) {
        r.verdict = Verdict::Unverifiable;
        r.actual.reset();
        r.statistics.clear();
        r.rectification.reset();
        r.explanation = message;
        r.diagnostics.push_back({std::move(code), std::move(message)});
        return std::move(r);
    }
    VerificationResult done(bool accurate, ojson actual, std::string explanation) {
        r.verdict = accurate ? Verdict::Accurate : Verdict::Inaccurate;
        r.actual = std::move(actual);
        r.explanation = std::move(explanation);
        if (accurate) r.rectification.reset();
        return std::move(r);
    }
};

std::string fmt(double v) { return format_shortest(v); }

/// The single row of a focus, or nullopt when it matches none or several.
std::optional<std::size_t> single_row(const std::vector<std::size_t>& rows) {
    if (rows.size() != 1) return std::nullopt;
    return rows.front();
}

std::optional<double> value_at(const MeasureVector& m, std::size_t row) {
    auto it = std::find(m.rows.begin(), m.rows.end(), row);
    if (it == m.rows.end()) return std::nullopt;
    return m.values[static_cast<std::size_t>(it - m.rows.begin())];
}

std::string focus_label(const FilterList& focus) {
    std::string out;
    for (const auto& p : focus) {
        if (!out.empty()) out += ", ";
        out += p.literal.text();
    }
    return out;
}

struct Paired {
    std::vector<std::size_t> rows;
    std::vector<double> x, y;
};

Paired pair_up(const MeasureVector& mx, const MeasureVector& my) {
    Paired p;
    for (std::size_t i = 0; i < mx.rows.size(); ++i)
        if (auto yv = value_at(my, mx.rows[i])) {
            p.rows.push_back(mx.rows[i]);
            p.x.push_back(mx.values[i]);
            p.y.push_back(*yv);
        }
    return p;
}

VerificationResult verify_value(Builder b, const EvidenceSlice& s, const ValueFact& f) {
    const auto& m = s.measures.at(0);
    if (m.values.empty()) return b.unverifiable("NoValues", "No numeric " + f.measure + " values in the subspace.");
    double actual = 0;
    std::string name;
    switch (f.aggregation) {
        case Aggregation::Average: actual = mean_of(m.values), name = "mean"; break;
        case Aggregation::Median: actual = median_of(m.values), name = "median"; break;
        case Aggregation::Sum: actual = sum_of(m.values), name = "sum"; break;
    }
    b.stat(name, actual);
    b.stat("count", static_cast<double>(m.values.size()));
    const int d = f.value.decimals;
    const bool ok = rounds_equal(actual, f.value.value, d);
    if (!ok) b.r.rectification = format_fixed(actual, d);
    return b.done(ok, actual,
                  "The " + name + " of " + f.measure + " over " + std::to_string(m.values.size()) + " rows is " +
                      format_fixed(actual, d) + (ok ? ", matching" : ", not") + " the claimed " + f.value.text() + ".");
}

VerificationResult verify_proportion(Builder b, const EvidenceSlice& s, const ProportionFact& f) {
    const auto& m = s.measures.at(0);
    auto claimed = parse_percent(f.value);
    if (!claimed) return b.unverifiable("BadLiteral", "The claimed percentage '" + f.value + "' does not parse.");
    double focus_sum = 0;
    for (std::size_t i = 0; i < m.rows.size(); ++i)
        if (std::binary_search(s.focus_rows.begin(), s.focus_rows.end(), m.rows[i])) focus_sum += m.values[i];
    const double reference_sum = sum_of(m.values);
    if (reference_sum == 0) return b.unverifiable("ZeroDenominator", "The total " + f.measure + " of the subspace is 0.");
    const double pct = 100.0 * focus_sum / reference_sum;
    b.stat("focus_sum", focus_sum);
    b.stat("reference_sum", reference_sum);
    b.stat("proportion", pct);
    const int d = claimed->decimals;
    const bool ok = rounds_equal(pct, claimed->value, d);
    if (!ok) b.r.rectification = format_fixed(pct, d) + "%";
    return b.done(ok, pct,
                  focus_label(f.focus) + " accounts for " + format_fixed(pct, d) + "% of the total " + f.measure +
                      (ok ? ", as claimed." : ", not " + f.value + "."));
}

VerificationResult verify_trend(Builder b, const EvidenceSlice& s, const TrendFact& f) {
    const auto& m = s.measures.at(0);
    if (m.values.size() < 2)
        return b.unverifiable("TooFewPoints", "The time window holds fewer than two dated " + f.measure + " values.");
    const double first = m.values.front();
    const double last = m.values.back();
    const double change = last - first;
    b.stat("first", first);
    b.stat("last", last);
    b.stat("change", change);
    b.stat("points", static_cast<double>(m.values.size()));
    const std::string claimed(to_string(f.value));
    if (change == 0)
        return b.done(false, "flat", "The " + f.measure + " is flat between the window endpoints (" + fmt(first) + ").");
    const TrendDirection dir = change > 0 ? TrendDirection::Increase : TrendDirection::Decrease;
    const bool ok = dir == f.value;
    if (!ok) b.r.rectification = std::string(to_string(dir));
    const std::string article = std::string_view("aeiou").find(claimed.front()) == std::string_view::npos ? "a " : "an ";
    return b.done(ok, std::string(to_string(dir)),
                  "The " + f.measure + " went from " + fmt(first) + " on " + s.dates.front().iso() + " to " + fmt(last) +
                      " on " + s.dates.back().iso() + ", " + (ok ? "" : "not ") + article + claimed + ".");
}

VerificationResult verify_extreme(Builder b, const EvidenceSlice& s, const ExtremeFact& f) {
    const auto& m = s.measures.at(0);
    auto row = single_row(s.focus_rows);
    if (!row)
        return b.unverifiable(s.focus_rows.empty() ? "FocusNotFound" : "FocusAmbiguous",
                              "The focus " + focus_label(f.focus) + " matches " + std::to_string(s.focus_rows.size()) +
                                  " rows in the subspace.");
    auto fv = value_at(m, *row);
    if (!fv) return b.unverifiable("MissingValue", "The focus has no " + f.measure + " value.");
    const double hi = *std::max_element(m.values.begin(), m.values.end());
    const double lo = *std::min_element(m.values.begin(), m.values.end());
    const bool want_max = f.value == ExtremeKind::Max;
    const double target = want_max ? hi : lo;
    b.stat("focus_value", *fv);
    b.stat(want_max ? "max" : "min", target);
    b.stat("count", static_cast<double>(m.values.size()));
    const bool ok = *fv == target;
    if (!ok && *fv == (want_max ? lo : hi)) b.r.rectification = want_max ? "min" : "max";
    return b.done(ok, target,
                  focus_label(f.focus) + " has " + f.measure + " " + fmt(*fv) + "; the " + (want_max ? "maximum" : "minimum") +
                      " is " + fmt(target) + ".");
}

VerificationResult verify_rank(Builder b, const EvidenceSlice& s, const RankFact& f) {
    const auto& m = s.measures.at(0);
    auto row = single_row(s.focus_rows);
    if (!row)
        return b.unverifiable(s.focus_rows.empty() ? "FocusNotFound" : "FocusAmbiguous",
                              "The focus " + focus_label(f.focus) + " matches " + std::to_string(s.focus_rows.size()) +
                                  " rows in the subspace.");
    auto fv = value_at(m, *row);
    if (!fv) return b.unverifiable("MissingValue", "The focus has no " + f.measure + " value.");
    const int rank = competition_rank(m.values, *fv);
    b.stat("focus_value", *fv);
    b.stat("rank", rank);
    b.stat("count", static_cast<double>(m.values.size()));
    const bool ok = rank == f.value;
    if (!ok) b.r.rectification = format_ordinal(rank);
    return b.done(ok, rank,
                  focus_label(f.focus) + " ranks " + format_ordinal(rank) + " of " + std::to_string(m.values.size()) +
                      " in " + f.measure + (ok ? ", as claimed." : ", not " + format_ordinal(f.value) + "."));
}

VerificationResult verify_association(Builder b, const EvidenceSlice& s, const AssociationFact& f,
                                      const VeracityConfig& cfg) {
    const Paired p = pair_up(s.measures.at(0), s.measures.at(1));
    if (p.x.size() < 3) return b.unverifiable("TooFewPoints", "Fewer than three rows have both measures.");
    const double mx = mean_of(p.x), my = mean_of(p.y);
    bool vx = false, vy = false;
    for (std::size_t i = 0; i < p.x.size(); ++i) {
        vx = vx || p.x[i] != p.x[0];
        vy = vy || p.y[i] != p.y[0];
    }
    if (!vx || !vy) return b.unverifiable("DegenerateVariance", "One of the measures is constant over the rows.");
    const double r = pearson(p.x, p.y);
    b.stat("pearson_r", r);
    b.stat("count", static_cast<double>(p.x.size()));
    b.stat("mean_x", mx);
    b.stat("mean_y", my);
    const bool pos = r >= cfg.association_threshold;
    const bool neg = r <= -cfg.association_threshold;
    const bool ok = f.value == Correlation::Positive ? pos : neg;
    if (!ok && (pos || neg)) b.r.rectification = pos ? "positive" : "negative";
    return b.done(ok, r,
                  "Pearson r between " + f.measure_x + " and " + f.measure_y + " is " + format_fixed(r, 3) + " over " +
                      std::to_string(p.x.size()) + " rows.");
}

VerificationResult verify_difference(Builder b, const Dataset& ds, const EvidenceSlice& s, const DifferenceFact& f) {
    auto rx = single_row(s.focus_rows);
    auto ry = single_row(s.focus_y_rows);
    if (!rx || !ry)
        return b.unverifiable("FocusNotFound", "Each side of the difference must match exactly one row (" +
                                                   std::to_string(s.focus_rows.size()) + " and " +
                                                   std::to_string(s.focus_y_rows.size()) + " found).");
    const auto col = ds.resolve(f.measure);
    auto x = numeric_value(ds.rows[*rx][*col]);
    auto y = numeric_value(ds.rows[*ry][*col]);
    if (!x || !y) return b.unverifiable("MissingValue", "A focus row has no " + f.measure + " value.");
    const double diff = *x - *y;
    b.stat("x_value", *x);
    b.stat("y_value", *y);
    b.stat("difference", diff);
    const int d = f.value.decimals;
    const bool ok = rounds_equal(diff, f.value.value, d);
    if (!ok) b.r.rectification = format_fixed(diff, d);
    std::string why = f.focus_x.literal.text() + " has " + fmt(*x) + " and " + f.focus_y.literal.text() + " has " +
                      fmt(*y) + ", a difference of " + format_fixed(diff, d) + ".";
    if (!ok && diff < 0 && f.value.value >= 0) why += " The direction is reversed.";
    return b.done(ok, diff, why);
}

VerificationResult verify_categorization(Builder b, const EvidenceSlice& s, const CategorizationFact& f) {
    const auto count = static_cast<int>(s.subspace_rows.size());
    for (std::size_t i = 0; i < s.predicate_counts.size(); ++i)
        b.stat("predicate_count_" + std::to_string(i + 1), static_cast<double>(s.predicate_counts[i]));
    b.stat("count", count);
    const bool ok = count == f.value;
    if (!ok) b.r.rectification = std::to_string(count);
    return b.done(ok, count,
                  std::to_string(count) + " " + (f.identifier_key.empty() ? "rows" : f.identifier_key) +
                      " satisfy every filter" + (ok ? ", as claimed." : ", not " + std::to_string(f.value) + "."));
}

VerificationResult verify_distribution(Builder b, const EvidenceSlice& s, const DistributionFact& f,
                                       const VeracityConfig& cfg) {
    const auto& m = s.measures.at(0);
    auto claimed = parse_skew(f.value);
    if (!claimed) return b.unverifiable("BadLiteral", "The claimed shape '" + f.value + "' is not a skew.");
    if (m.values.size() < 3) return b.unverifiable("TooFewPoints", "Fewer than three " + f.measure + " values.");
    const double mean = mean_of(m.values);
    double m2 = 0, m3 = 0;
    for (double x : m.values) {
        m2 += (x - mean) * (x - mean);
        m3 += (x - mean) * (x - mean) * (x - mean);
    }
    m2 /= static_cast<double>(m.values.size());
    m3 /= static_cast<double>(m.values.size());
    if (m2 == 0) return b.unverifiable("DegenerateVariance", "All " + f.measure + " values are equal.");
    const double g1 = skewness(m.values);
    b.stat("mean", mean);
    b.stat("m2", m2);
    b.stat("m3", m3);
    b.stat("skewness", g1);
    b.stat("count", static_cast<double>(m.values.size()));
    const bool right = g1 >= cfg.skew_threshold;
    const bool left = g1 <= -cfg.skew_threshold;
    const bool ok = *claimed == Skew::Right ? right : left;
    if (!ok && (right || left)) b.r.rectification = right ? "right-skew distribution" : "left-skew distribution";
    return b.done(ok, g1,
                  "The skewness of " + f.measure + " is " + format_fixed(g1, 3) +
                      (right ? " (right-skewed)." : left ? " (left-skewed)." : " (roughly symmetric)."));
}

VerificationResult verify_outlier_1d(Builder b, const EvidenceSlice& s, const OutlierFact& f,
                                     const VeracityConfig& cfg) {
    const auto& m = s.measures.at(0);
    auto row = single_row(s.focus_rows);
    if (!row)
        return b.unverifiable(s.focus_rows.empty() ? "FocusNotFound" : "FocusAmbiguous",
                              "The focus " + f.focus.literal.text() + " matches " + std::to_string(s.focus_rows.size()) +
                                  " rows in the subspace.");
    auto fv = value_at(m, *row);
    if (!fv) return b.unverifiable("MissingValue", "The focus has no " + f.measure + " value.");
    if (m.values.size() < 4) return b.unverifiable("TooFewPoints", "Fewer than four " + f.measure + " values.");
    std::vector<double> sorted = m.values;
    std::sort(sorted.begin(), sorted.end());
    const double q1 = quantile_sorted(sorted, 0.25);
    const double q3 = quantile_sorted(sorted, 0.75);
    const double iqr = q3 - q1;
    const double lo = q1 - cfg.iqr_multiplier * iqr;
    const double hi = q3 + cfg.iqr_multiplier * iqr;
    b.stat("focus_value", *fv);
    b.stat("q1", q1);
    b.stat("q3", q3);
    b.stat("iqr", iqr);
    b.stat("lower_fence", lo);
    b.stat("upper_fence", hi);
    const bool outlier = *fv < lo || *fv > hi;
    return b.done(outlier, outlier,
                  f.focus.literal.text() + " has " + f.measure + " " + fmt(*fv) + (outlier ? ", outside" : ", inside") +
                      " the fences [" + fmt(lo) + ", " + fmt(hi) + "].");
}

VerificationResult verify_outlier_2d(Builder b, const EvidenceSlice& s, const OutlierFact& f,
                                     const VeracityConfig& cfg) {
    auto row = single_row(s.focus_rows);
    if (!row)
        return b.unverifiable(s.focus_rows.empty() ? "FocusNotFound" : "FocusAmbiguous",
                              "The focus " + f.focus.literal.text() + " matches " + std::to_string(s.focus_rows.size()) +
                                  " rows in the subspace.");
    const Paired p = pair_up(s.measures.at(0), s.measures.at(1));
    auto it = std::find(p.rows.begin(), p.rows.end(), *row);
    if (it == p.rows.end()) return b.unverifiable("MissingValue", "The focus lacks one of the two measures.");
    if (p.x.size() < 5) return b.unverifiable("TooFewPoints", "Fewer than five rows have both measures.");
    const auto k = static_cast<std::size_t>(it - p.rows.begin());
    const double n = static_cast<double>(p.x.size());
    const double mx = mean_of(p.x), my = mean_of(p.y);
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < p.x.size(); ++i) {
        sxx += (p.x[i] - mx) * (p.x[i] - mx);
        sxy += (p.x[i] - mx) * (p.y[i] - my);
        syy += (p.y[i] - my) * (p.y[i] - my);
    }
    sxx /= n - 1;
    sxy /= n - 1;
    syy /= n - 1;
    const double det = sxx * syy - sxy * sxy;
    if (!(det > 1e-12 * sxx * syy))
        return b.unverifiable("SingularCovariance", "The covariance matrix of " + f.measure + " and " + *f.measure_y +
                                                        " is singular.");
    const double dx = p.x[k] - mx, dy = p.y[k] - my;
    const double d2 = (syy * dx * dx - 2 * sxy * dx * dy + sxx * dy * dy) / det;
    b.stat("focus_x", p.x[k]);
    b.stat("focus_y", p.y[k]);
    b.stat("mean_x", mx);
    b.stat("mean_y", my);
    b.stat("cov_xx", sxx);
    b.stat("cov_xy", sxy);
    b.stat("cov_yy", syy);
    b.stat("mahalanobis_d2", d2);
    b.stat("threshold", cfg.mahalanobis_threshold);
    const bool outlier = d2 > cfg.mahalanobis_threshold;
    return b.done(outlier, outlier,
                  "The squared Mahalanobis distance of " + f.focus.literal.text() + " is " + format_fixed(d2, 3) +
                      (outlier ? ", above" : ", not above") + " the cutoff " + fmt(cfg.mahalanobis_threshold) + ".");
}

// Outlier claims carry no literal; they assert that the focus is an outlier.
ojson claimed_of(const FactSpec& spec) {
    const auto j = spec_to_json(spec);
    return j.contains("value") ? j.at("value") : ojson(true);
}

}  // namespace

VeracityConfig VeracityConfig::from_json(const nlohmann::json& j) {
    VeracityConfig c;
    c.association_threshold = j.value("association_threshold", c.association_threshold);
    c.skew_threshold = j.value("skew_threshold", c.skew_threshold);
    c.iqr_multiplier = j.value("iqr_multiplier", c.iqr_multiplier);
    c.mahalanobis_threshold = j.value("mahalanobis_threshold", c.mahalanobis_threshold);
    return c;
}

nlohmann::ordered_json VeracityConfig::to_json() const {
    return {{"association_threshold", association_threshold},
            {"skew_threshold", skew_threshold},
            {"iqr_multiplier", iqr_multiplier},
            {"mahalanobis_threshold", mahalanobis_threshold}};
}

std::optional<double> VerificationResult::statistic(std::string_view name) const {
    for (const auto& s : statistics)
        if (s.name == name) return s.value;
    return std::nullopt;
}

nlohmann::ordered_json result_to_json(const VerificationResult& r) {
    ojson j;
    j["verdict"] = to_string(r.verdict);
    j["subtype"] = to_string(r.subtype);
    j["claimed"] = r.claimed;
    j["actual"] = r.actual ? *r.actual : ojson(nullptr);
    ojson stats = ojson::array();
    for (const auto& s : r.statistics) stats.push_back({{"name", s.name}, {"value", s.value}});
    j["statistics"] = stats;
    j["explanation"] = r.explanation;
    j["rectification"] = r.rectification ? ojson(*r.rectification) : ojson(nullptr);
    ojson diags = ojson::array();
    for (const auto& d : r.diagnostics) diags.push_back({{"code", d.code}, {"message", d.message}});
    j["diagnostics"] = diags;
    return j;
}

VerificationResult result_from_json(const nlohmann::json& j) {
    VerificationResult r;
    r.verdict = verdict_from_string(j.at("verdict").get<std::string>()).value();
    r.subtype = subtype_from_string(j.at("subtype").get<std::string>()).value();
    r.claimed = j.at("claimed");
    if (!j.at("actual").is_null()) r.actual = j.at("actual");
    for (const auto& s : j.at("statistics")) r.statistics.push_back({s.at("name"), s.at("value")});
    r.explanation = j.at("explanation");
    if (!j.at("rectification").is_null()) r.rectification = j.at("rectification").get<std::string>();
    for (const auto& d : j.at("diagnostics")) r.diagnostics.push_back({d.at("code"), d.at("message")});
    return r;
}

VerificationResult verify_slice(const Dataset& ds, const EvidenceSlice& s, const FactSpec& spec,
                                const VeracityConfig& cfg) {
    Builder b;
    b.r.subtype = subtype_of(spec);
    b.r.claimed = claimed_of(spec);
    return std::visit(Overloaded{
                          [&](const ValueFact& f) { return verify_value(std::move(b), s, f); },
                          [&](const ProportionFact& f) { return verify_proportion(std::move(b), s, f); },
                          [&](const TrendFact& f) { return verify_trend(std::move(b), s, f); },
                          [&](const ExtremeFact& f) { return verify_extreme(std::move(b), s, f); },
                          [&](const RankFact& f) { return verify_rank(std::move(b), s, f); },
                          [&](const AssociationFact& f) { return verify_association(std::move(b), s, f, cfg); },
                          [&](const DifferenceFact& f) { return verify_difference(std::move(b), ds, s, f); },
                          [&](const CategorizationFact& f) { return verify_categorization(std::move(b), s, f); },
                          [&](const DistributionFact& f) { return verify_distribution(std::move(b), s, f, cfg); },
                          [&](const OutlierFact& f) {
                              return f.measure_y ? verify_outlier_2d(std::move(b), s, f, cfg)
                                                 : verify_outlier_1d(std::move(b), s, f, cfg);
                          },
                      },
                      spec);
}

VerificationResult verify(const Dataset& ds, const FactSpec& spec, const VeracityConfig& cfg) {
    Builder b;
    b.r.subtype = subtype_of(spec);
    b.r.claimed = claimed_of(spec);
    const auto issues = validate_spec(spec, ds);
    if (!issues.empty()) {
        for (std::size_t i = 1; i < issues.size(); ++i)
            b.r.diagnostics.push_back({std::string(to_string(issues[i].kind)), issues[i].message});
        return b.unverifiable(std::string(to_string(issues[0].kind)), issues[0].message);
    }
    EvidenceSlice slice;
    try {
        slice = retrieve(ds, spec);
    } catch (const RetrievalError& e) {
        return b.unverifiable(std::string(e.kind_name()), e.what());
    }
    return verify_slice(ds, slice, spec, cfg);
}

FactSpec apply_rectification(const FactSpec& spec, const VerificationResult& r) {
    if (!r.rectification) throw std::invalid_argument("result carries no rectification");
    const std::string& t = *r.rectification;
    FactSpec out = spec;
    std::visit(Overloaded{
                   [&](ValueFact& f) { f.value = Number::parse(t).value(); },
                   [&](ProportionFact& f) { f.value = t; },
                   [&](TrendFact& f) {
                       f.value = t == "increase" ? TrendDirection::Increase : TrendDirection::Decrease;
                   },
                   [&](ExtremeFact& f) { f.value = t == "max" ? ExtremeKind::Max : ExtremeKind::Min; },
                   [&](RankFact& f) { f.value = parse_ordinal(t).value(); },
                   [&](AssociationFact& f) {
                       f.value = t == "positive" ? Correlation::Positive : Correlation::Negative;
                   },
                   [&](DifferenceFact& f) { f.value = Number::parse(t).value(); },
                   [&](CategorizationFact& f) { f.value = std::stoi(t); },
                   [&](DistributionFact& f) { f.value = t; },
                   [&](OutlierFact&) { throw std::invalid_argument("outlier claims have no rectification"); },
               },
               out);
    return out;
}

}  // namespace datacheck
