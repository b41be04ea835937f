#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "datacheck/dataset.hpp"

namespace datacheck {

enum class FactType {
    Value,
    Proportion,
    Trend,
    Extreme,
    Rank,
    Association,
    Difference,
    Categorization,
    Distribution,
    Outlier
};

/// The 13 evidence subtypes: Value splits by aggregation, Outlier by dimensionality.
enum class Subtype {
    ValueMean,
    ValueMedian,
    ValueSum,
    Proportion,
    Trend,
    Extreme,
    Rank,
    Association,
    Difference,
    Categorization,
    Distribution,
    Outlier1D,
    Outlier2D
};

inline constexpr std::size_t kFactTypeCount = 10;
inline constexpr std::size_t kSubtypeCount = 13;

const std::vector<FactType>& all_fact_types();
const std::vector<Subtype>& all_subtypes();
std::string_view to_string(FactType type);
std::string_view to_string(Subtype subtype);
std::optional<FactType> fact_type_from_string(std::string_view name);
std::optional<Subtype> subtype_from_string(std::string_view name);
FactType fact_type_of(Subtype subtype);
/// Subtypes a fact type expands to (Value: mean/median/sum, Outlier: 1D/2D).
std::vector<Subtype> subtypes_of(FactType type);

enum class Verdict { Accurate, Inaccurate, Unverifiable };
std::string_view to_string(Verdict verdict);
std::optional<Verdict> verdict_from_string(std::string_view name);

enum class CompareOp { Eq, Ne, Gt, Ge, Lt, Le };
std::string_view to_string(CompareOp op);
std::optional<CompareOp> compare_op_from_string(std::string_view text);
bool is_ordering(CompareOp op);

/// A claimed numeric literal; `decimals` is the number of fractional digits written.
struct Number {
    double value = 0;
    int decimals = 0;

    bool operator==(const Number&) const = default;
    std::string text() const;
    static std::optional<Number> parse(std::string_view token);
};

/// Predicate literal as written: a bare number or a quoted string. Typed
/// interpretation (number, date, text) happens against the column kind.
struct Literal {
    std::variant<Number, std::string> value;

    bool operator==(const Literal&) const = default;

    static Literal number(double v, int decimals = 0) { return Literal{Number{v, decimals}}; }
    static Literal text(std::string s) { return Literal{std::move(s)}; }

    bool is_number() const { return std::holds_alternative<Number>(value); }
    /// Raw text: the number token or the unquoted string.
    std::string text() const;
    std::optional<double> as_number() const;
    std::optional<Date> as_date() const;
    /// JSON token: number text or a quoted, escaped string.
    std::string token() const;
};

struct FilterPredicate {
    std::string attribute;
    CompareOp op = CompareOp::Eq;
    Literal literal;

    bool operator==(const FilterPredicate&) const = default;
    /// Human-readable chip label, e.g. `genre = horror`.
    std::string describe() const;
};

using FilterList = std::vector<FilterPredicate>;

enum class Aggregation { Average, Median, Sum };
std::string_view to_string(Aggregation agg);
std::optional<Aggregation> aggregation_from_string(std::string_view text);

enum class TrendDirection { Increase, Decrease };
enum class ExtremeKind { Max, Min };
enum class Correlation { Positive, Negative };
enum class Skew { Right, Left };

std::string_view to_string(TrendDirection d);
std::string_view to_string(ExtremeKind e);
std::string_view to_string(Correlation c);

struct ValueFact {
    std::string measure;
    Number value;
    Aggregation aggregation = Aggregation::Average;
    FilterList subspace;
    std::string identifier_key;
    bool operator==(const ValueFact&) const = default;
};

struct ProportionFact {
    std::string measure;
    std::string value;  // percent text, e.g. "34.8%"
    FilterList focus;
    FilterList subspace;
    std::string identifier_key;
    bool operator==(const ProportionFact&) const = default;
};

struct TrendFact {
    std::string measure;
    TrendDirection value = TrendDirection::Increase;
    FilterList subspace;
    bool operator==(const TrendFact&) const = default;
};

struct ExtremeFact {
    std::string measure;
    ExtremeKind value = ExtremeKind::Max;
    FilterList focus;
    FilterList subspace;
    std::string identifier_key;
    bool operator==(const ExtremeFact&) const = default;
};

struct RankFact {
    std::string measure;
    int value = 1;
    FilterList focus;
    FilterList subspace;
    std::string identifier_key;
    bool operator==(const RankFact&) const = default;
};

struct AssociationFact {
    std::string measure_x;
    std::string measure_y;
    Correlation value = Correlation::Positive;
    std::string identifier_key;
    std::optional<FilterList> subspace;
    bool operator==(const AssociationFact&) const = default;
};

struct DifferenceFact {
    std::string measure;
    Number value;
    FilterPredicate focus_x;
    FilterPredicate focus_y;
    FilterList subspace;
    bool operator==(const DifferenceFact&) const = default;
};

struct CategorizationFact {
    int value = 0;
    FilterList subspace;
    std::string identifier_key;
    bool operator==(const CategorizationFact&) const = default;
};

struct DistributionFact {
    std::string measure;
    std::string value;  // skew text, e.g. "right-skew distribution"
    std::string identifier_key;
    std::optional<FilterList> subspace;
    bool operator==(const DistributionFact&) const = default;
};

struct OutlierFact {
    std::string measure;
    std::optional<std::string> measure_y;  // present for bivariate outliers
    FilterPredicate focus;
    FilterList subspace;
    std::string identifier_key;
    bool operator==(const OutlierFact&) const = default;
};

using FactSpec = std::variant<ValueFact, ProportionFact, TrendFact, ExtremeFact, RankFact, AssociationFact,
                              DifferenceFact, CategorizationFact, DistributionFact, OutlierFact>;

FactType fact_type_of(const FactSpec& spec);
Subtype subtype_of(const FactSpec& spec);

/// Parses "34.8%" / "34.8 %" into the percentage number.
std::optional<Number> parse_percent(std::string_view text);
std::optional<Skew> parse_skew(std::string_view text);

/// Subspace predicates of any arm (empty when the arm has none).
const FilterList& subspace_of(const FactSpec& spec);
FilterList& subspace_of(FactSpec& spec);
/// Numeric measure attributes referenced by the spec, in field order.
std::vector<std::string> measures_of(const FactSpec& spec);
/// Every predicate (subspace and focus) referenced by the spec.
std::vector<FilterPredicate> predicates_of(const FactSpec& spec);

class SpecParseError : public std::runtime_error {
public:
    enum class Kind { Syntax, UnknownShape, BadLiteral };
    SpecParseError(Kind kind, std::string field, std::string detail);
    Kind kind() const { return kind_; }
    const std::string& field() const { return field_; }

private:
    Kind kind_;
    std::string field_;
};

/// Canonical text with per-arm key order. Predicates render as
/// `{"attr"=literal}`; Outlier subspace entries render unbraced.
std::string serialize_spec(const FactSpec& spec);
FactSpec parse_spec_json(std::string_view text);
/// Drops whitespace outside string literals.
std::string normalize_spec_whitespace(std::string_view text);

struct Issue {
    enum class Kind { UnknownAttribute, TypeMismatch, MissingTemporalAxis };
    Kind kind;
    std::string attribute;
    std::optional<CompareOp> op;
    std::string message;

    bool operator==(const Issue&) const = default;
};

std::string_view to_string(Issue::Kind kind);

std::vector<Issue> validate_spec(const FactSpec& spec, const Dataset& dataset);

/// Structured (strict JSON) form used by the HTTP API; predicates are
/// `{"attribute","op","value"}` objects and the arm is named by `fact_type`.
nlohmann::ordered_json spec_to_json(const FactSpec& spec);
FactSpec spec_from_json(const nlohmann::json& json);
/// Overwrites only the fields named in `fragment` (structured form).
FactSpec apply_spec_patch(const FactSpec& spec, const nlohmann::json& fragment);
nlohmann::ordered_json predicate_to_json(const FilterPredicate& p);
FilterPredicate predicate_from_json(const nlohmann::json& json);

struct Diagnostic {
    std::string code;
    std::string message;
    bool operator==(const Diagnostic&) const = default;
};

struct CharSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
    bool operator==(const CharSpan&) const = default;
};

struct ClaimRecord {
    std::string id;
    std::string text;
    CharSpan span;
    std::optional<FactSpec> spec;
    std::optional<FactType> fact_type;
    std::optional<Verdict> verdict;
};

}  // namespace datacheck
