#include <gtest/gtest.h>

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "httplib.h"

#include "datacheck/corpus.hpp"
#include "datacheck/parser.hpp"

using namespace datacheck;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const Dataset& movies() {
    static const Dataset ds = ingest_csv(slurp(DATACHECK_DATA_DIR "/movies.csv"), "movies");
    return ds;
}

const std::string kValue = "The average gross for all movies is 193126250.";
const std::string kRank = "Quiet Station is ranked 38th in runtime among all movies.";

}  // namespace

TEST(Detect, EmptyDocument) {
    TemplateBackend b;
    EXPECT_TRUE(b.detect("").empty());
    EXPECT_TRUE(b.detect("   \n").empty());
}

TEST(Detect, OneSentenceSpansIt) {
    TemplateBackend b;
    const auto claims = b.detect(kValue);
    ASSERT_EQ(claims.size(), 1u);
    EXPECT_EQ(claims[0].span, (CharSpan{0, kValue.size()}));
    EXPECT_EQ(claims[0].text, kValue);
    EXPECT_EQ(claims[0].fact_type, FactType::Value);
}

TEST(Detect, SkipsNonTemplateSentences) {
    TemplateBackend b;
    const std::string doc = "Cinema had a strange year. " + kValue;
    const auto claims = b.detect(doc);
    ASSERT_EQ(claims.size(), 1u);
    EXPECT_EQ(claims[0].span.begin, doc.find("The average"));
    EXPECT_EQ(doc.substr(claims[0].span.begin, claims[0].span.end - claims[0].span.begin), kValue);
}

TEST(Detect, QuotedPeriodsDoNotSplit) {
    const std::string doc = "The movie \"Dr. Strange. Again\" is long. Next one.";
    const auto spans = split_sentences(doc);
    ASSERT_EQ(spans.size(), 2u);
    EXPECT_EQ(doc.substr(spans[0].begin, spans[0].end - spans[0].begin), "The movie \"Dr. Strange. Again\" is long.");
    EXPECT_EQ(doc.substr(spans[1].begin, spans[1].end - spans[1].begin), "Next one.");
}

TEST(Detect, SpansOrderedAndDisjointOverCorpusDocuments) {
    TemplateBackend b;
    const auto corpus = generate_corpus(movies(), 4, 21);
    std::string doc;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        doc += corpus[i].claim_text;
        doc += i % 3 == 0 ? " Nothing to see here. " : " ";
    }
    const auto claims = b.detect(doc);
    EXPECT_EQ(claims.size(), corpus.size());
    for (std::size_t i = 0; i < claims.size(); ++i) {
        EXPECT_LE(claims[i].span.end, doc.size());
        EXPECT_LT(claims[i].span.begin, claims[i].span.end);
        if (i > 0) {
            EXPECT_LE(claims[i - 1].span.end, claims[i].span.begin);
        }
        EXPECT_EQ(claims[i].text, doc.substr(claims[i].span.begin, claims[i].span.end - claims[i].span.begin));
    }
}

TEST(Compound, SingleAndConjoined) {
    TemplateBackend b;
    EXPECT_EQ(b.classify_compound(kValue), Compoundness::Single);
    const std::string both = "The average gross for all movies is 193126250 and Quiet Station is ranked 38th in runtime "
                             "among all movies.";
    EXPECT_EQ(b.classify_compound(both), Compoundness::Compound);
    const auto d = b.decompose(both);
    ASSERT_EQ(d.facts.size(), 2u);
    EXPECT_EQ(b.classify_fact_type(d.facts[0]), FactType::Value);
    EXPECT_EQ(b.classify_fact_type(d.facts[1]), FactType::Rank);
    for (std::size_t i = 0; i < 2; ++i)
        EXPECT_EQ(both.substr(d.spans[i].begin, d.spans[i].end - d.spans[i].begin), d.facts[i]);
}

TEST(Compound, TrendWithLoggingClause) {
    TemplateBackend b;
    const std::string s =
        "The gross experienced a decrease between June 2020 and May 2023, logging their first annual decline since "
        "June 2020.";
    EXPECT_EQ(b.classify_compound(s), Compoundness::Compound);
    const auto d = b.decompose(s);
    ASSERT_EQ(d.facts.size(), 2u);
    EXPECT_EQ(b.classify_fact_type(d.facts[0]), FactType::Trend);
    EXPECT_EQ(b.classify_fact_type(d.facts[1]), FactType::Trend);
}

TEST(Decompose, SinglePassesThrough) {
    TemplateBackend b;
    const auto d = b.decompose(kRank);
    ASSERT_EQ(d.facts.size(), 1u);
    EXPECT_EQ(d.facts[0], kRank);
    EXPECT_TRUE(d.diagnostics.empty());
}

TEST(Decompose, UnmatchedConjunctYieldsDiagnostic) {
    TemplateBackend b;
    const std::string s = "Quiet Station is ranked 38th in runtime among all movies and the popcorn was stale.";
    const auto d = b.decompose(s);
    ASSERT_EQ(d.facts.size(), 1u);
    ASSERT_EQ(d.diagnostics.size(), 1u);
    EXPECT_EQ(d.diagnostics[0].code, "NoTemplateMatch");
    EXPECT_EQ(b.classify_compound(s), Compoundness::Single);
}

TEST(Classify, GoldenRows) {
    TemplateBackend b;
    EXPECT_EQ(b.classify_fact_type("Glenlivet 18 has the highest rating among whiskies originating from Scotland."),
              FactType::Extreme);
    EXPECT_EQ(b.classify_fact_type("There's a positive correlation between a movie's budget and its gross earnings."),
              FactType::Association);
    try {
        b.classify_fact_type("Popcorn prices are out of control.");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.kind(), ParseError::Kind::NoTemplateMatch);
    }
}

TEST(Classify, IndependentOfGrammarOrder) {
    std::string text(TemplateGrammar::builtin_text());
    std::vector<std::string> lines;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    std::reverse(lines.begin(), lines.end());
    std::string reversed;
    for (const auto& l : lines) reversed += l + "\n";
    const TemplateGrammar g = TemplateGrammar::parse(reversed);
    EXPECT_TRUE(lint_grammar(g).empty());
    TemplateBackend forward, backward(g);
    for (const auto& e : generate_corpus(movies(), 6, 5)) {
        EXPECT_EQ(forward.classify_fact_type(e.claim_text), backward.classify_fact_type(e.claim_text));
        EXPECT_EQ(forward.to_spec(e.claim_text, movies()), backward.to_spec(e.claim_text, movies()));
    }
}

TEST(ToSpec, ValueRow) {
    const Dataset ds = ingest_csv("movie,genre,year,IMDB score\nA,horror,2020,6.5\nB,horror,2020,6.9\nC,drama,2020,8\n",
                                  "movies");
    TemplateBackend b;
    const auto spec = b.to_spec("The average IMDB score for horror movies released in 2020 is 6.7.", ds);
    EXPECT_EQ(serialize_spec(spec),
              R"({"measure":"IMDB score","value":6.7,"aggregation":"average","subspace":[{"genre"="horror"},{"year"=2020}],"identifier_key":"movies"})");
}

TEST(ToSpec, CategorizationScaleWords) {
    TemplateBackend b;
    const auto spec =
        b.to_spec("There are 7 movies that have an IMDb score over 7 and a gross of more than 300 million.", movies());
    const auto& c = std::get<CategorizationFact>(spec);
    EXPECT_EQ(c.value, 7);
    ASSERT_EQ(c.subspace.size(), 2u);
    EXPECT_EQ(c.subspace[1].attribute, "gross");
    EXPECT_EQ(c.subspace[1].op, CompareOp::Gt);
    EXPECT_EQ(c.subspace[1].literal.as_number(), 300000000.0);
}

TEST(ToSpec, PercentLiteralKeepsText) {
    TemplateBackend b;
    const auto spec = b.to_spec(
        "France's movies comprised 15.6% of the total imdb score for movies with director of Jordan Peele.", movies());
    EXPECT_EQ(std::get<ProportionFact>(spec).value, "15.6%");
}

TEST(ToSpec, UnresolvedAttribute) {
    TemplateBackend b;
    try {
        b.to_spec("The average popularity for all movies is 3.", movies());
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.kind(), ParseError::Kind::UnresolvedAttribute);
        EXPECT_EQ(e.slot(), "MEASURE");
    }
}

TEST(Hooks, IdentityByDefaultAndSubstitutionMaps) {
    TemplateBackend b;
    EXPECT_EQ(b.resolve_coreference("its gross", "doc"), "its gross");
    EXPECT_EQ(b.resolve_ellipsis("its gross", "doc"), "its gross");
    b.set_coreference_map({{"the film", "Quiet Station"}});
    EXPECT_EQ(b.resolve_coreference("The Film is ranked 38th", "doc"), "Quiet Station is ranked 38th");
    EXPECT_EQ(apply_substitutions("filmography", {{"film", "movie"}}), "filmography");
    EXPECT_EQ(apply_substitutions("their prices and the prices", {{"their", "housing"}, {"the prices", "rents"}}),
              "housing prices and rents");
}

TEST(Closure, TemplateBackendReproducesGeneratedSpecs) {
    TemplateBackend b;
    for (const std::uint64_t seed : {1u, 2u, 3u}) {
        for (const auto& e : generate_corpus(movies(), 10, seed)) {
            EXPECT_EQ(b.classify_fact_type(e.claim_text), e.fact_type) << e.claim_text;
            EXPECT_TRUE(match_specs(b.to_spec(e.claim_text, movies()), e.truth_spec).complete) << e.claim_text;
        }
    }
}

// ---------------------------------------------------------------------------
// LLM backend against a local stand-in endpoint.

namespace {

class FakeModel {
public:
    FakeModel() {
        server_.Post("/v1/facts", [this](const httplib::Request& req, httplib::Response& res) {
            ++hits_;
            last_auth_ = req.get_header_value("Authorization");
            const auto body = nlohmann::json::parse(req.body);
            last_attributes_ = body.at("attributes");
            if (fail_first_ > 0) {
                --fail_first_;
                res.status = status_;
                return;
            }
            res.set_content(reply_(body.at("step").get<std::string>(), body.at("text").get<std::string>()),
                            "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeModel() {
        server_.stop();
        thread_.join();
    }

    LlmConfig config() const {
        LlmConfig c;
        c.endpoint = "http://127.0.0.1:" + std::to_string(port_) + "/v1/facts";
        c.api_key = "k-test";
        c.initial_backoff = std::chrono::milliseconds(1);
        c.timeout = std::chrono::seconds(5);
        return c;
    }

    std::function<std::string(const std::string&, const std::string&)> reply_;
    std::atomic<int> hits_{0};
    int fail_first_ = 0;
    int status_ = 503;
    std::string last_auth_;
    nlohmann::json last_attributes_;

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

}  // namespace

TEST(Llm, FollowsTheContract) {
    FakeModel m;
    m.reply_ = [](const std::string& step, const std::string& text) -> std::string {
        if (step == "detect") return nlohmann::json{{"claims", {kRank}}}.dump();
        if (step == "compound") return R"({"result":"single"})";
        if (step == "decompose") return nlohmann::json{{"facts", {text}}}.dump();
        if (step == "classify") return R"({"fact_type":"rank"})";
        return nlohmann::json{{"spec", R"({"measure":"runtime","value":38,"focus":[{"movie"="Quiet Station"}],"subspace":[],"identifier_key":"movies"})"}}
            .dump();
    };
    LlmBackend b(m.config());
    const std::string doc = "Intro. " + kRank;
    const auto claims = b.detect(doc);
    ASSERT_EQ(claims.size(), 1u);
    EXPECT_EQ(claims[0].span.begin, 7u);
    EXPECT_EQ(b.classify_compound(kRank), Compoundness::Single);
    EXPECT_EQ(b.decompose(kRank).facts, std::vector<std::string>{kRank});
    EXPECT_EQ(b.classify_fact_type(kRank), FactType::Rank);
    EXPECT_EQ(b.to_spec(kRank, movies()), TemplateBackend().to_spec(kRank, movies()));
    EXPECT_EQ(m.last_auth_, "Bearer k-test");
    EXPECT_TRUE(m.last_attributes_.is_array());
    EXPECT_EQ(m.last_attributes_.size(), movies().columns.size());
    EXPECT_EQ(b.requests_sent(), 5u);
}

TEST(Llm, RetriesTransientFailures) {
    FakeModel m;
    m.reply_ = [](const std::string&, const std::string&) { return std::string(R"({"fact_type":"trend"})"); };
    m.fail_first_ = 2;
    LlmBackend b(m.config());
    EXPECT_EQ(b.classify_fact_type("x"), FactType::Trend);
    EXPECT_EQ(m.hits_.load(), 3);

    m.fail_first_ = 5;
    m.status_ = 429;
    try {
        b.classify_fact_type("x");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.kind(), ParseError::Kind::Backend);
    }
    EXPECT_EQ(m.hits_.load(), 6);
}

TEST(Llm, ClientErrorsAreNotRetried) {
    FakeModel m;
    m.fail_first_ = 1;
    m.status_ = 400;
    LlmBackend b(m.config());
    EXPECT_THROW(b.classify_fact_type("x"), ParseError);
    EXPECT_EQ(m.hits_.load(), 1);
}

TEST(Llm, MalformedResponsesRaiseBackendErrors) {
    FakeModel m;
    LlmBackend b(m.config());
    auto expect_backend = [&](const std::string& reply, auto&& call) {
        m.reply_ = [reply](const std::string&, const std::string&) { return reply; };
        try {
            call();
            ADD_FAILURE() << reply;
        } catch (const ParseError& e) {
            EXPECT_EQ(e.kind(), ParseError::Kind::Backend) << reply;
        }
    };
    expect_backend("not json", [&] { b.classify_compound("x"); });
    expect_backend(R"({"result":"maybe"})", [&] { b.classify_compound("x"); });
    expect_backend(R"({"claims":"x"})", [&] { b.detect("x"); });
    expect_backend(R"({"claims":["absent text"]})", [&] { b.detect("x"); });
    expect_backend(R"({"facts":[1]})", [&] { b.decompose("x"); });
    expect_backend(R"({"spec":"{\"colour\":1}"})", [&] { b.to_spec("x", movies()); });
    expect_backend(R"({})", [&] { b.to_spec("x", movies()); });
}

TEST(Llm, UnreachableEndpoint) {
    LlmConfig c;
    c.endpoint = "http://127.0.0.1:1/v1";
    c.max_attempts = 2;
    c.initial_backoff = std::chrono::milliseconds(1);
    c.timeout = std::chrono::seconds(1);
    LlmBackend b(c);
    EXPECT_THROW(b.detect("x"), ParseError);
    EXPECT_EQ(b.requests_sent(), 2u);
}

TEST(Llm, ConfigFromEnvironment) {
    ::unsetenv("DC_TEST_ENDPOINT");
    EXPECT_FALSE(LlmConfig::from_env("DC_TEST_ENDPOINT", "DC_TEST_KEY"));
    ::setenv("DC_TEST_ENDPOINT", "http://h:9/p", 1);
    ::setenv("DC_TEST_KEY", "abc", 1);
    const auto c = LlmConfig::from_env("DC_TEST_ENDPOINT", "DC_TEST_KEY");
    ASSERT_TRUE(c);
    EXPECT_EQ(c->endpoint, "http://h:9/p");
    EXPECT_EQ(c->api_key, "abc");
    EXPECT_EQ(c->max_attempts, 3);
}
