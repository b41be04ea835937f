#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace datacheck {

/// Calendar date at day resolution.
struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    auto operator<=>(const Date&) const = default;

    /// Days since 1970-01-01 (proleptic Gregorian).
    std::int64_t serial() const;
    std::string iso() const;
};

struct Missing {
    bool operator==(const Missing&) const = default;
};

/// A typed cell. Text is kept for categorical cells and for cells that failed
/// to parse in a numeric or temporal column.
using CellValue = std::variant<Missing, double, std::string, Date>;

enum class ColumnKind { Numeric, Categorical, Temporal };

std::string_view to_string(ColumnKind kind);

struct Column {
    std::string name;
    ColumnKind kind = ColumnKind::Categorical;

    bool operator==(const Column&) const = default;
};

using Row = std::vector<CellValue>;

struct Dataset {
    std::string id;
    std::string name;
    std::vector<Column> columns;
    std::vector<Row> rows;
    // Original cell text, aligned with rows, for display and persistence.
    std::vector<std::vector<std::string>> raw;

    bool operator==(const Dataset&) const = default;

    std::optional<std::size_t> column_index(std::string_view name) const;
    /// Case-insensitive lookup with underscore/space folding.
    std::optional<std::size_t> resolve(std::string_view attribute) const;
};

class IngestError : public std::runtime_error {
public:
    enum class Kind { EmptyInput, RaggedRow, DuplicateColumn, Malformed };

    IngestError(Kind kind, std::string detail, std::size_t line = 0);

    Kind kind() const { return kind_; }
    std::size_t line() const { return line_; }
    const std::string& detail() const { return detail_; }
    std::string_view kind_name() const;

private:
    Kind kind_;
    std::string detail_;
    std::size_t line_;
};

class EmptyTermsError : public std::invalid_argument {
public:
    EmptyTermsError() : std::invalid_argument("EmptyTerms: claim terms must be non-empty") {}
};

// Literal parsing shared by ingestion, predicate evaluation and the claim parser.

bool is_missing_text(std::string_view text);

/// Parses "1234.5", "-3", "$1,234.5", "12%"; thousands separators must be
/// well-formed groups of three.
std::optional<double> parse_number(std::string_view text);

/// Accepts "YYYY-MM-DD", "Month YYYY" (day 1, full or three-letter month) and
/// "M/D/YYYY".
std::optional<Date> parse_date(std::string_view text);

bool is_leap_year(int year);
int days_in_month(int year, int month);

/// Attribute folding: lowercase, '_' and whitespace runs become one space, trimmed.
std::string fold_attribute(std::string_view name);

std::string trim(std::string_view text);
std::string to_lower(std::string_view text);

Dataset ingest_csv(std::string_view bytes, std::string name);

struct SchemaEntry {
    std::string name;
    ColumnKind kind;

    bool operator==(const SchemaEntry&) const = default;
};

std::vector<SchemaEntry> schema(const Dataset& dataset);

/// Lowercased alphanumeric tokens with the suitability stopwords removed.
std::vector<std::string> suitability_tokens(std::string_view text);

/// Jaccard similarity between claim-term tokens and column-name tokens.
double suitability_score(std::span<const std::string> claim_terms, const Dataset& dataset);

using SuitabilityScorer =
    std::function<double(std::span<const std::string> claim_terms, const Dataset& dataset)>;

/// Numeric view of a cell; only double cells qualify.
std::optional<double> numeric_value(const CellValue& cell);
std::string display_text(const CellValue& cell);

}  // namespace datacheck
