#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "datacheck/dataset.hpp"

using namespace datacheck;

namespace {

ColumnKind kind_of(const Dataset& ds, const std::string& name) { return ds.columns.at(*ds.column_index(name)).kind; }

}  // namespace

TEST(Ingest, SingleRowInference) {
    const Dataset ds = ingest_csv("a,b\n1,x\n", "t");
    ASSERT_EQ(ds.columns.size(), 2u);
    EXPECT_EQ(ds.rows.size(), 1u);
    EXPECT_EQ(kind_of(ds, "a"), ColumnKind::Numeric);
    EXPECT_EQ(kind_of(ds, "b"), ColumnKind::Categorical);
}

TEST(Ingest, HeaderOnlyDefaultsToCategorical) {
    const Dataset ds = ingest_csv("a,b,c\n", "t");
    EXPECT_TRUE(ds.rows.empty());
    for (const auto& c : ds.columns) EXPECT_EQ(c.kind, ColumnKind::Categorical);
}

TEST(Ingest, MixedDateFormatsAreTemporal) {
    const Dataset ds = ingest_csv("d\n2020-01-03\nMarch 2020\n7/4/2021\n", "t");
    EXPECT_EQ(kind_of(ds, "d"), ColumnKind::Temporal);
    EXPECT_EQ(std::get<Date>(ds.rows[1][0]), (Date{2020, 3, 1}));
    EXPECT_EQ(std::get<Date>(ds.rows[2][0]), (Date{2021, 7, 4}));
}

TEST(Ingest, Errors) {
    auto kind = [](std::string_view csv) {
        try {
            ingest_csv(csv, "t");
        } catch (const IngestError& e) {
            return std::string(e.kind_name()) + ":" + std::to_string(e.line());
        }
        return std::string("none");
    };
    EXPECT_EQ(kind(""), "EmptyInput:0");
    EXPECT_EQ(kind("a,b\n1,2\n3\n"), "RaggedRow:3");
    EXPECT_EQ(kind("a, a\n1,2\n").substr(0, 15), "DuplicateColumn");
}

TEST(Ingest, QuotedFieldsAndCurrency) {
    const Dataset ds = ingest_csv("name,gross\n\"Smith, J\",\"$1,234.5\"\n\"He said \"\"hi\"\"\",7\n", "t");
    EXPECT_EQ(display_text(ds.rows[0][0]), "Smith, J");
    EXPECT_EQ(display_text(ds.rows[1][0]), "He said \"hi\"");
    EXPECT_DOUBLE_EQ(*numeric_value(ds.rows[0][1]), 1234.5);
}

TEST(Ingest, MissingCellsAndMajorityInference) {
    // 4 of 5 non-empty cells numeric: 80% is enough.
    const Dataset ds = ingest_csv("v,w\n1,a\n2,b\nNA,c\n3,d\n,e\n4,f\nabc,g\n", "t");
    EXPECT_EQ(kind_of(ds, "v"), ColumnKind::Numeric);
    EXPECT_TRUE(std::holds_alternative<Missing>(ds.rows[2][0]));
    EXPECT_TRUE(std::holds_alternative<Missing>(ds.rows[4][0]));
    EXPECT_FALSE(numeric_value(ds.rows[6][0]).has_value());
    // Blank lines are not records.
    EXPECT_EQ(ingest_csv("v\n1\n\n2\n", "t").rows.size(), 2u);
    const Dataset ds2 = ingest_csv("v\n1\n2\nx\ny\n", "t");
    EXPECT_EQ(kind_of(ds2, "v"), ColumnKind::Categorical);
}

TEST(Ingest, DeterministicAndOrderIndependentKinds) {
    std::mt19937_64 rng(3);
    std::vector<std::string> lines;
    for (int i = 0; i < 40; ++i) {
        std::string cell = i % 7 == 0 ? "n/a" : std::to_string(i * 3);
        std::string date = i % 9 == 0 ? "soon" : "2021-0" + std::to_string(1 + i % 9) + "-1" + std::to_string(i % 10);
        lines.push_back(cell + "," + date + ",k" + std::to_string(i % 4));
    }
    auto csv = [&] {
        std::string s = "n,d,c\n";
        for (const auto& l : lines) s += l + "\n";
        return s;
    };
    const Dataset a = ingest_csv(csv(), "t");
    EXPECT_EQ(a, ingest_csv(csv(), "t"));
    for (int k = 0; k < 10; ++k) {
        std::shuffle(lines.begin(), lines.end(), rng);
        EXPECT_EQ(schema(ingest_csv(csv(), "t")), schema(a));
    }
}

TEST(Schema, EchoesHeader) {
    const Dataset ds = ingest_csv(" title ,genre,imdb_score\nA,x,1\n", "t");
    const auto s = schema(ds);
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s[0].name, " title ");
    EXPECT_EQ(s[2].name, "imdb_score");
    EXPECT_TRUE(schema(Dataset{}).empty());
}

TEST(Literals, Numbers) {
    EXPECT_EQ(parse_number("1234.5"), 1234.5);
    EXPECT_EQ(parse_number("-3"), -3);
    EXPECT_EQ(parse_number("$1,234.5"), 1234.5);
    EXPECT_EQ(parse_number("12%"), 12);
    EXPECT_FALSE(parse_number("1,23"));
    EXPECT_FALSE(parse_number("abc"));
}

TEST(Literals, Dates) {
    EXPECT_EQ(parse_date("2024-02-29"), (Date{2024, 2, 29}));
    EXPECT_FALSE(parse_date("2023-02-29"));
    EXPECT_EQ(parse_date("Mar 2021"), (Date{2021, 3, 1}));
    EXPECT_EQ(parse_date("12/31/1999"), (Date{1999, 12, 31}));
    EXPECT_FALSE(parse_date("13/1/2000"));
    EXPECT_TRUE(is_leap_year(2000));
    EXPECT_FALSE(is_leap_year(1900));
    EXPECT_EQ(days_in_month(2023, 2), 28);
    // Serial day numbers agree with a day-by-day walk from the epoch.
    Date d{1970, 1, 1};
    for (std::int64_t n = 0; n < 20000; ++n) {
        ASSERT_EQ(d.serial(), n) << d.iso();
        if (++d.day > days_in_month(d.year, d.month)) {
            d.day = 1;
            if (++d.month > 12) d.month = 1, ++d.year;
        }
    }
}

TEST(Suitability, HandEnumeratedJaccard) {
    const Dataset ds = ingest_csv("movie,genre,imdb_score,year\nA,x,1,2000\n", "t");
    const std::vector<std::string> terms = {"imdb", "score", "movies"};
    // claim tokens {imdb, score, movies}; column tokens {movie, genre, imdb, score, year}
    EXPECT_DOUBLE_EQ(suitability_score(terms, ds), 2.0 / 6.0);
}

TEST(Suitability, BoundsAndSymmetry) {
    const Dataset ds = ingest_csv("player,points,team\nA,1,x\n", "t");
    std::vector<std::string> same = {"player", "points", "team"};
    EXPECT_DOUBLE_EQ(suitability_score(same, ds), 1.0);
    std::vector<std::string> none = {"salary"};
    EXPECT_DOUBLE_EQ(suitability_score(none, ds), 0.0);
    std::vector<std::string> mixed = {"the points", "of", "salary", "team"};
    const double s = suitability_score(mixed, ds);
    std::mt19937_64 rng(5);
    for (int i = 0; i < 20; ++i) {
        std::shuffle(mixed.begin(), mixed.end(), rng);
        EXPECT_DOUBLE_EQ(suitability_score(mixed, ds), s);
    }
    EXPECT_GT(s, 0.0);
    EXPECT_LT(s, 1.0);
    std::vector<std::string> empty;
    EXPECT_THROW(suitability_score(empty, ds), EmptyTermsError);
}

TEST(Suitability, StopwordsDropped) {
    EXPECT_EQ(suitability_tokens("The average of points for the players in 2020"),
              (std::vector<std::string>{"average", "points", "players", "2020"}));
}

TEST(Resolve, FoldsCaseAndUnderscores) {
    const Dataset ds = ingest_csv("IMDb_score,x\n1,2\n", "t");
    EXPECT_EQ(ds.resolve("imdb score"), 0u);
    EXPECT_EQ(ds.resolve("IMDB_SCORE"), 0u);
    EXPECT_FALSE(ds.resolve("score"));
}
