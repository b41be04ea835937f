#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "datacheck/evidence.hpp"
#include "oracle.hpp"

using namespace datacheck;

namespace {

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const Dataset& movies() {
    static const Dataset ds = ingest_csv(slurp(DATACHECK_DATA_DIR "/movies.csv"), "movies");
    return ds;
}

std::string run(const std::string& command) {
    std::string out;
    FILE* p = ::popen(command.c_str(), "r");
    if (!p) return out;
    char buf[4096];
    while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) out.append(buf, n);
    ::pclose(p);
    return out;
}

const std::filesystem::path kGolden = std::filesystem::path(DATACHECK_FIXTURE_DIR) / "evidence";

/// Every number the bundle presents as a statistic is the result's statistic.
void expect_statistics_echoed(const EvidenceBundle& b, const VerificationResult& r) {
    if (b.table) {
        for (const auto& s : b.table->sticky_summary_rows) {
            const auto v = r.statistic(s.statistic);
            ASSERT_TRUE(v) << s.statistic;
            EXPECT_EQ(s.value, *v) << s.statistic;
        }
    }
    if (b.chart) {
        for (const auto& a : b.chart->annotations) {
            if (!a.statistic) continue;
            const auto v = r.statistic(*a.statistic);
            ASSERT_TRUE(v) << *a.statistic;
            ASSERT_TRUE(a.value) << *a.statistic;
            EXPECT_EQ(*a.value, *v) << *a.statistic;
        }
    }
}

}  // namespace

TEST(Golden, BundlesMatchRegeneratedOutput) {
    std::size_t n = 0;
    for (Subtype s : all_subtypes()) {
        const std::string name(to_string(s));
        const FactSpec spec = parse_spec_json(slurp(kGolden / (name + ".spec.json")));
        EXPECT_EQ(subtype_of(spec), s);
        const auto bundle = build_bundle(movies(), spec, EvidenceForm::Both);
        EXPECT_EQ(bundle_to_json(bundle).dump(2) + "\n", slurp(kGolden / (name + ".bundle.json"))) << name;
        ++n;
    }
    EXPECT_EQ(n, 13u);
}

TEST(Golden, CliPrintsTheSameBundles) {
    for (Subtype s : {Subtype::Rank, Subtype::Trend, Subtype::Outlier2D}) {
        const std::string name(to_string(s));
        const std::string out = run(std::string("'") + DATACHECK_CLI + "' evidence --claim-spec '" +
                                    (kGolden / (name + ".spec.json")).string() + "' --dataset '" DATACHECK_DATA_DIR
                                    "/movies.csv' --form both 2>/dev/null");
        EXPECT_EQ(out, slurp(kGolden / (name + ".bundle.json"))) << name;
    }
}

TEST(Golden, SummariesEchoStatistics) {
    for (Subtype s : all_subtypes()) {
        const FactSpec spec = parse_spec_json(slurp(kGolden / (std::string(to_string(s)) + ".spec.json")));
        const auto slice = retrieve(movies(), spec);
        const auto result = verify_slice(movies(), slice, spec);
        const auto bundle = build_bundle(movies(), slice, spec, result, EvidenceForm::Both);
        ASSERT_TRUE(bundle.table && bundle.chart);
        EXPECT_EQ(bundle.table->layout, table_layout_name(s));
        EXPECT_EQ(bundle.chart->layout, chart_layout_name(s));
        EXPECT_EQ(bundle.chart->kind, chart_kind(s));
        expect_statistics_echoed(bundle, result);
        // Both forms come from the same slice.
        ASSERT_EQ(bundle.table->widgets.size(), bundle.chart->widgets.size());
        for (std::size_t i = 0; i < bundle.table->widgets.size(); ++i)
            EXPECT_EQ(widget_to_json(bundle.table->widgets[i]), widget_to_json(bundle.chart->widgets[i]));
        EXPECT_EQ(bundle.table->widgets.size(), slice.trace.size());
    }
}

TEST(Layout, DistinctNames) {
    std::set<std::string> tables, charts;
    for (Subtype s : all_subtypes()) {
        tables.insert(std::string(table_layout_name(s)));
        charts.insert(std::string(chart_layout_name(s)));
    }
    EXPECT_EQ(tables.size(), 13u);
    EXPECT_EQ(charts.size(), 13u);
}

TEST(Table, MeanHasStickyRow) {
    const Dataset ds = ingest_csv("k,v\na,1\nb,2\nc,3\nd,4\ne,5\n", "t");
    const ValueFact f{"v", {3, 0}, Aggregation::Average, {}, "t"};
    const auto b = build_bundle(ds, f, EvidenceForm::Table);
    ASSERT_TRUE(b.table);
    EXPECT_FALSE(b.chart);
    EXPECT_EQ(b.table->rows.size(), 5u);
    ASSERT_EQ(b.table->sticky_summary_rows.size(), 1u);
    EXPECT_EQ(b.table->sticky_summary_rows[0].statistic, "mean");
    EXPECT_EQ(b.table->sticky_summary_rows[0].value, 3.0);
}

TEST(Table, RankHighlightsTheEntity) {
    const Dataset ds = ingest_csv("k,v\na,1\nb,7\nc,3\n", "t");
    const RankFact f{"v", 2, {{"k", CompareOp::Eq, Literal::text("c")}}, {}, "t"};
    const auto b = build_bundle(ds, f, EvidenceForm::Both);
    EXPECT_TRUE(b.table->index_column);
    EXPECT_EQ(b.table->highlight_row_ids, std::vector<std::string>{"r2"});
    EXPECT_EQ(b.table->rows.front().id, "r1");
    bool labelled = false;
    for (const auto& a : b.chart->annotations) labelled = labelled || (a.mark == "r2");
    EXPECT_TRUE(labelled);
}

TEST(Chart, FormsAreSelectable) {
    const Dataset ds = ingest_csv("k,v\na,1\nb,7\nc,3\n", "t");
    const ValueFact f{"v", {11, 0}, Aggregation::Sum, {}, "t"};
    const auto chart = build_bundle(ds, f, EvidenceForm::Chart);
    EXPECT_FALSE(chart.table);
    EXPECT_TRUE(chart.chart);
    EXPECT_FALSE(chart.context);
    EXPECT_EQ(evidence_form_from_string("both"), EvidenceForm::Both);
    EXPECT_FALSE(evidence_form_from_string("poster"));
}

TEST(Chart, TrendCarriesShadedContext) {
    const Dataset ds = ingest_csv(slurp(DATACHECK_FIXTURE_DIR "/unemployment.csv"), "unemployment");
    const auto spec = parse_spec_json(
        R"({"measure":"unemployment_rate","value":"decrease","subspace":[{"month">="2020-04-01"},{"month"<="2023-03-01"}]})");
    const auto b = build_bundle(ds, spec, EvidenceForm::Chart);
    ASSERT_TRUE(b.context);
    EXPECT_EQ(b.verdict, Verdict::Accurate);
    EXPECT_EQ(b.context->layout, "context");
    EXPECT_EQ(b.context->data.size(), ds.rows.size());
    const auto band = std::find_if(b.context->annotations.begin(), b.context->annotations.end(),
                                   [](const Annotation& a) { return a.type == "band"; });
    ASSERT_NE(band, b.context->annotations.end());
    EXPECT_EQ(band->start, "2020-04-01");
    EXPECT_EQ(band->end, "2023-03-01");
    std::size_t inside = 0;
    double peak = 0;
    for (const auto& p : b.context->data) {
        inside += p.at("in_window").get<bool>();
        peak = std::max(peak, p.at("value").get<double>());
    }
    EXPECT_EQ(inside, 36u);
    EXPECT_EQ(peak, 14.8);
    // Only the window is in the claim chart itself.
    EXPECT_EQ(b.chart->data.size(), 36u);
}

TEST(Chart, NoContextWithoutTemporalColumn) {
    try {
        build_context_overlay(ingest_csv("k,v\na,1\n", "t"), ValueFact{"v", {1, 0}, Aggregation::Sum, {}, "t"});
        FAIL();
    } catch (const EvidenceError& e) {
        EXPECT_EQ(e.kind(), EvidenceError::Kind::NoTemporalColumn);
    }
}

TEST(Bundle, UnverifiableIsRefused) {
    try {
        build_bundle(movies(), ValueFact{"popularity", {1, 0}, Aggregation::Sum, {}, "movies"}, EvidenceForm::Both);
        FAIL();
    } catch (const EvidenceError& e) {
        EXPECT_EQ(e.kind(), EvidenceError::Kind::UnsupportedVerdict);
    }
}

TEST(Histogram, Sturges) {
    const auto h = sturges_histogram({1, 2, 3, 4, 5, 6, 7, 8});
    ASSERT_EQ(h.counts.size(), 4u);  // ceil(log2 8) + 1
    EXPECT_EQ(h.edges, (std::vector<double>{1, 2.75, 4.5, 6.25, 8}));
    EXPECT_EQ(h.counts, (std::vector<std::size_t>{2, 2, 2, 2}));
    const auto flat = sturges_histogram({3, 3, 3});
    EXPECT_EQ(std::accumulate(flat.counts.begin(), flat.counts.end(), std::size_t{0}), 3u);
    EXPECT_TRUE(sturges_histogram({}).counts.empty());

    std::mt19937_64 rng(8);
    std::lognormal_distribution<double> d(0, 1);
    for (int k = 0; k < 100; ++k) {
        std::vector<double> v;
        for (int i = 0; i < 1 + k * 3; ++i) v.push_back(std::round(d(rng) * 10) / 10);
        const auto hist = sturges_histogram(v);
        EXPECT_EQ(std::accumulate(hist.counts.begin(), hist.counts.end(), std::size_t{0}), v.size());
        EXPECT_EQ(hist.edges.size(), hist.counts.size() + 1);
        EXPECT_TRUE(std::is_sorted(hist.edges.begin(), hist.edges.end()));
    }
}

TEST(Cap, LargeSlicesAreTruncated) {
    std::string csv = "k,v\n";
    for (int i = 0; i < 700; ++i) csv += "e" + std::to_string(i) + "," + std::to_string(i % 37) + "\n";
    const Dataset ds = ingest_csv(csv, "t");
    const ValueFact f{"v", {18, 0}, Aggregation::Average, {}, "t"};
    const auto b = build_bundle(ds, f, EvidenceForm::Both);
    EXPECT_TRUE(b.table->truncated);
    EXPECT_EQ(b.table->total_rows, 700u);
    EXPECT_LE(b.table->rows.size(), kEvidenceRowCap);
    EXPECT_FALSE(b.table->notes.empty());
    EXPECT_LE(b.chart->data.size(), kEvidenceRowCap);
    EXPECT_EQ(b.chart->total_points, 700u);
    EXPECT_TRUE(b.chart->truncated);
}

// Bundles for random cases: statistics echo, and every one validates.
TEST(Property, RandomBundlesConformToTheSchemas) {
    const auto path = std::filesystem::temp_directory_path() / ("datacheck_bundles_" + std::to_string(::getpid()) + ".jsonl");
    std::ofstream out(path);
    std::size_t written = 0;
    for (std::size_t i = 0; i < 650; ++i) {
        const auto c = oracle::make_case(404, i);
        const Dataset ds = ingest_csv(c.table.to_csv(), "entities");
        EvidenceSlice slice;
        try {
            slice = retrieve(ds, c.spec);
        } catch (const RetrievalError&) {
            continue;
        }
        const auto r = verify_slice(ds, slice, c.spec);
        if (r.verdict == Verdict::Unverifiable) continue;
        const auto b = build_bundle(ds, slice, c.spec, r, EvidenceForm::Both);
        expect_statistics_echoed(b, r);
        if (subtype_of(c.spec) == Subtype::Trend) EXPECT_TRUE(b.context);
        out << bundle_to_json(b).dump() << "\n";
        ++written;
    }
    out.close();
    EXPECT_GT(written, 400u);
    const std::string cmd = std::string("'") + DATACHECK_PYTHON + "' '" + DATACHECK_VALIDATOR + "' '" +
                            DATACHECK_SCHEMA_DIR + "' '" + path.string() + "' 2>&1";
    const std::string report = run(cmd);
    EXPECT_NE(report.find(std::to_string(written) + "/" + std::to_string(written) + " bundles valid"), std::string::npos)
        << report.substr(0, 4000);
    std::filesystem::remove(path);
}
