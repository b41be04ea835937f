#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "datacheck/corpus.hpp"
#include "datacheck/veracity.hpp"

using namespace datacheck;

namespace {

const Dataset& movies() {
    static const Dataset ds = [] {
        std::ifstream in(DATACHECK_DATA_DIR "/movies.csv");
        std::stringstream ss;
        ss << in.rdbuf();
        return ingest_csv(ss.str(), "movies");
    }();
    return ds;
}

FilterPredicate eq(std::string a, std::string v) { return {std::move(a), CompareOp::Eq, Literal::text(std::move(v))}; }

/// A backend whose specs are always empty Categorization facts.
class EmptyBackend : public TemplateBackend {
public:
    std::string name() const override { return "empty"; }
    FactSpec to_spec(std::string_view, const Dataset&) override { return CategorizationFact{}; }
};

}  // namespace

TEST(Generate, FourHundredEntriesBalancedAndSound) {
    CorpusStats stats;
    const auto corpus = generate_corpus(movies(), 40, 7, TemplateGrammar::builtin(), &stats);
    ASSERT_EQ(corpus.size(), 400u);
    std::map<FactType, std::pair<int, int>> per_type;
    std::set<Subtype> subtypes;
    for (const auto& e : corpus) {
        auto& c = per_type[e.fact_type];
        (e.intended_verdict == Verdict::Accurate ? c.first : c.second)++;
        subtypes.insert(e.subtype);
        EXPECT_EQ(subtype_of(e.truth_spec), e.subtype);
        EXPECT_EQ(verify(movies(), e.truth_spec).verdict, e.intended_verdict) << e.claim_text;
    }
    EXPECT_EQ(subtypes.size(), 13u);
    ASSERT_EQ(per_type.size(), 10u);
    for (const auto& [t, c] : per_type) {
        EXPECT_EQ(c.first, 20) << to_string(t);
        EXPECT_EQ(c.second, 20) << to_string(t);
    }
    EXPECT_GE(stats.attempts, 400u);
}

TEST(Generate, OddCountsRoundTowardAccurate) {
    const auto corpus = generate_corpus(movies(), 3, 2);
    ASSERT_EQ(corpus.size(), 30u);
    std::map<FactType, int> accurate;
    for (const auto& e : corpus) accurate[e.fact_type] += e.intended_verdict == Verdict::Accurate;
    for (const auto& [t, n] : accurate) EXPECT_EQ(n, 2) << to_string(t);
}

TEST(Generate, EmptyAndDeterministic) {
    EXPECT_TRUE(generate_corpus(movies(), 0, 1).empty());
    EXPECT_EQ(write_corpus_jsonl(generate_corpus(movies(), 5, 11)), write_corpus_jsonl(generate_corpus(movies(), 5, 11)));
    EXPECT_NE(write_corpus_jsonl(generate_corpus(movies(), 5, 11)), write_corpus_jsonl(generate_corpus(movies(), 5, 12)));
}

TEST(Generate, SummaryHeaderCountsSubtypes) {
    const auto corpus = generate_corpus(movies(), 1, 3);
    EXPECT_EQ(corpus.size(), 10u);
    EXPECT_NE(coverage_summary(corpus).find("10 of 13 subtypes covered"), std::string::npos);
    // Subtypes cycle in (accurate, inaccurate) pairs, so three pairs reach value_sum.
    const std::string summary = coverage_summary(generate_corpus(movies(), 6, 3));
    EXPECT_NE(summary.find("13 of 13 subtypes covered"), std::string::npos) << summary;
}

TEST(Generate, UnsupportedType) {
    const Dataset no_time = ingest_csv("name,v\na,1\nb,2\nc,3\nd,4\ne,5\n", "t");
    try {
        generate_corpus(no_time, 2, 1);
        FAIL();
    } catch (const CorpusError& e) {
        EXPECT_EQ(e.kind(), CorpusError::Kind::UnsupportedType);
    }
}

TEST(Perturb, FlipsAccurateClaims) {
    const Dataset ds = ingest_csv("d,v\n2020-01-01,1\n2020-02-01,2\n2020-03-01,3\n", "t");
    const TrendFact up{"v", TrendDirection::Increase, {{"d", CompareOp::Ge, Literal::text("2020-01-01")}}};
    ASSERT_EQ(verify(ds, up).verdict, Verdict::Accurate);
    EXPECT_EQ(verify(ds, perturb_spec(up, 1)).verdict, Verdict::Inaccurate);

    const Dataset vals = ingest_csv("k,v\na,6.5\nb,6.9\n", "t");
    const ValueFact mean{"v", {6.7, 1}, Aggregation::Average, {}, "t"};
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto p = std::get<ValueFact>(perturb_spec(mean, seed));
        EXPECT_EQ(p.value.decimals, 1);
        const double shift = std::fabs(p.value.value / 6.7 - 1);
        EXPECT_GE(shift, 0.09);
        EXPECT_LE(shift, 0.51);
        EXPECT_EQ(verify(vals, p).verdict, Verdict::Inaccurate);
    }
    const RankFact first{"v", 1, {eq("k", "b")}, {}, "t"};
    EXPECT_GT(std::get<RankFact>(perturb_spec(first, 4)).value, 1);
}

TEST(Perturb, CannotPerturb) {
    const OutlierFact o{"v", std::nullopt, eq("k", "a"), {}, "t"};
    try {
        perturb_spec(o, 1);
        FAIL();
    } catch (const CorpusError& e) {
        EXPECT_EQ(e.kind(), CorpusError::Kind::CannotPerturb);
    }
}

TEST(Match, ReflexiveAndArmSensitive) {
    const ValueFact v{"gross", {6.7, 1}, Aggregation::Average, {eq("genre", "horror"), eq("year", "2020")}, "movies"};
    const auto self = match_specs(v, v);
    EXPECT_TRUE(self.complete);
    EXPECT_EQ(self.partial, 1.0);
    const auto other = match_specs(CategorizationFact{7, {}, "movies"}, v);
    EXPECT_FALSE(other.complete);
    EXPECT_EQ(other.partial, 0.0);
}

TEST(Match, FractionalSubspaceCredit) {
    const ValueFact truth{"gross", {6.7, 1}, Aggregation::Average, {eq("genre", "horror"), eq("year", "2020")}, "movies"};
    ValueFact predicted = truth;
    predicted.subspace = {eq("genre", "horror")};
    const auto m = match_specs(predicted, truth);
    EXPECT_FALSE(m.complete);
    EXPECT_DOUBLE_EQ(m.partial, 0.9);
    EXPECT_EQ(m.mismatched_fields, std::vector<std::string>{"subspace"});
}

TEST(Match, FoldingOrderAndRounding) {
    const ValueFact truth{"IMDb_score", {6.7, 1}, Aggregation::Average, {eq("genre", "horror"), eq("year", "2020")}, "movies"};
    ValueFact predicted{"imdb score", {6.70, 2}, Aggregation::Average, {eq("Year", "2020"), eq("GENRE", "horror")}, "movies"};
    EXPECT_TRUE(match_specs(predicted, truth).complete);
    predicted.value = {6.8, 1};
    EXPECT_FALSE(match_specs(predicted, truth).complete);
}

TEST(Match, CompleteIsSymmetric) {
    const auto corpus = generate_corpus(movies(), 4, 8);
    for (std::size_t i = 0; i < corpus.size(); ++i)
        for (std::size_t j = 0; j < corpus.size(); j += 7) {
            const auto ab = match_specs(corpus[i].truth_spec, corpus[j].truth_spec);
            const auto ba = match_specs(corpus[j].truth_spec, corpus[i].truth_spec);
            EXPECT_EQ(ab.complete, ba.complete);
            if (ab.complete) EXPECT_EQ(ab.partial, 1.0);
            EXPECT_GE(ab.partial, 0.0);
            EXPECT_LE(ab.partial, 1.0);
        }
}

TEST(Jsonl, RoundTrip) {
    const auto corpus = generate_corpus(movies(), 3, 5);
    const std::string text = write_corpus_jsonl(corpus);
    const auto back = read_corpus_jsonl(text);
    ASSERT_EQ(back.size(), corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        EXPECT_EQ(back[i].claim_text, corpus[i].claim_text);
        EXPECT_EQ(back[i].truth_spec, corpus[i].truth_spec);
        EXPECT_EQ(back[i].intended_verdict, corpus[i].intended_verdict);
        EXPECT_EQ(back[i].seed, corpus[i].seed);
    }
    EXPECT_EQ(write_corpus_jsonl(back), text);
}

TEST(Jsonl, BadLineIsNamed) {
    std::string text = write_corpus_jsonl(generate_corpus(movies(), 1, 5));
    text += "{\"claim_text\": 3}\n";
    try {
        read_corpus_jsonl(text);
        FAIL();
    } catch (const CorpusError& e) {
        EXPECT_EQ(e.kind(), CorpusError::Kind::BadCorpusLine);
        EXPECT_NE(std::string(e.what()).find("11"), std::string::npos) << e.what();
    }
}

TEST(Eval, TemplateBackendOnItsOwnCorpus) {
    TemplateBackend b;
    const auto report = eval_parser(b, generate_corpus(movies(), 40, 7), movies());
    EXPECT_EQ(report.overall.entries, 400u);
    EXPECT_EQ(report.overall.classification_accuracy(), 1.0);
    EXPECT_EQ(report.overall.complete_rate(), 1.0);
    EXPECT_EQ(report.mean_complete_rate(), 1.0);
    EXPECT_TRUE(report.diagnostics.empty());
    EXPECT_EQ(report.per_type.size(), 10u);
    const auto j = report.to_json();
    EXPECT_EQ(j.at("backend"), "template");
    EXPECT_NE(report.to_text().find("100.0%"), std::string::npos);
}

TEST(Eval, EmptySpecsScoreZero) {
    EmptyBackend b;
    auto corpus = generate_corpus(movies(), 4, 7);
    std::erase_if(corpus, [](const CorpusEntry& e) { return e.fact_type == FactType::Categorization; });
    const auto report = eval_parser(b, corpus, movies());
    EXPECT_EQ(report.overall.complete_rate(), 0.0);
    EXPECT_EQ(report.overall.classification_accuracy(), 1.0);
    EXPECT_EQ(report.diagnostics.size(), corpus.size());
}
