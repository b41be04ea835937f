#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "datacheck/dataset.hpp"
#include "datacheck/factspec.hpp"

namespace datacheck {

struct Token {
    std::string text;  // normalized (curly quotes folded)
    std::size_t begin = 0;
    std::size_t end = 0;
};

/// Words with leading/trailing punctuation peeled off and possessive "'s"
/// split into its own token. Offsets index the input.
std::vector<Token> tokenize(std::string_view text);
/// Inverse rendering for generated text: no space before closing
/// punctuation, "'s" or inside quote pairs.
std::string detokenize(std::span<const std::string> tokens);

/// Sentence spans: split after '.', '!' or '?' followed by whitespace or end
/// of input, never inside double quotes.
std::vector<CharSpan> split_sentences(std::string_view document);

enum class SlotType { Measure, Value, Agg, Entity, Filter, IdKey, Time };

struct Slot {
    SlotType type = SlotType::Measure;
    std::string kind;  // normalized kind, e.g. "m", "number", "focus", "scope"
    bool operator==(const Slot&) const = default;
};

std::string_view to_string(SlotType type);

/// One or more case-insensitive alternatives for a literal token.
struct LiteralToken {
    std::vector<std::string> alternatives;  // lowercased
    std::string display;                    // as written, for rendering
    bool operator==(const LiteralToken&) const = default;
};

using PatternElement = std::variant<LiteralToken, Slot>;

struct Template {
    FactType type = FactType::Value;
    std::string pattern;
    std::vector<PatternElement> elements;
    std::size_t line = 0;
};

class GrammarError : public std::runtime_error {
public:
    GrammarError(std::size_t line, const std::string& message)
        : std::runtime_error("grammar line " + std::to_string(line) + ": " + message), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class TemplateGrammar {
public:
    /// `TYPE ::= pattern` lines; '#' starts a comment line.
    static TemplateGrammar parse(std::string_view text);
    /// The grammar compiled into the binary.
    static const TemplateGrammar& builtin();
    static std::string_view builtin_text();

    /// Sorted by (fact type, pattern) so results never depend on file order.
    const std::vector<Template>& templates() const { return templates_; }
    std::vector<const Template*> for_type(FactType type) const;
    std::vector<const Template*> for_subtype(Subtype subtype) const;

private:
    std::vector<Template> templates_;
};

/// Structural problems: unknown slot kinds, slots missing for the arm,
/// templates of different types that accept the same sample sentence.
std::vector<std::string> lint_grammar(const TemplateGrammar& grammar);

struct SlotMatch {
    Slot slot;
    std::size_t first = 0;  // token range [first, last)
    std::size_t last = 0;
};

struct TemplateMatch {
    const Template* tmpl = nullptr;
    std::vector<SlotMatch> slots;
};

/// Every syntactic match of the template over the tokens, in enumeration
/// order (shorter spans for earlier slots first). Slot contents are checked
/// only for shape (numbers, ordinals, dates, keyword sets), never against data.
std::vector<TemplateMatch> match_template(const Template& tmpl, std::span<const Token> tokens,
                                          std::size_t limit = 256);

// Slot vocabulary shared by the matcher and the generator.
std::optional<Aggregation> aggregation_word(std::string_view word);
std::string_view aggregation_phrase(Aggregation agg);
std::optional<TrendDirection> direction_word(std::string_view word);
std::optional<ExtremeKind> extreme_word(std::string_view word);
std::string_view extreme_phrase(ExtremeKind kind);
std::optional<Correlation> correlation_word(std::string_view word);
std::optional<Skew> skew_word(std::string_view word);
std::string_view skew_phrase(Skew skew);
std::string pluralize(std::string_view noun);
std::string singularize(std::string_view noun);

/// Column name as it reads in prose: underscores become spaces.
std::string attribute_phrase(std::string_view column);
/// Dates render as "Month YYYY" on the first of a month, ISO otherwise.
std::string date_phrase(const Date& date);

/// Unique lookup of a bare value: categorical cells (case-insensitive),
/// then numeric cells. Fails when zero or several columns hold the value.
std::optional<FilterPredicate> lookup_value(const Dataset& dataset, std::string_view text);
/// The dataset's canonical spelling of a categorical value in `column`.
std::optional<std::string> canonical_category(const Dataset& dataset, std::size_t column, std::string_view text);
/// The temporal column used for Trend windows (first temporal column).
std::optional<std::size_t> time_column(const Dataset& dataset);

/// Parses a filter phrase ("an IMDb score over 7 and a gross of more than
/// 300 million", "horror", "genre of horror") into predicates.
std::optional<FilterList> parse_filter_phrase(std::span<const Token> tokens, std::string_view source,
                                              const Dataset& dataset, std::string* error = nullptr);
/// Renders predicates as a filter phrase; `bare` renders a single equality as
/// the value alone.
std::string render_filter_phrase(const FilterList& predicates, bool bare);
/// Numeric literal with an optional scale word ("300 million" -> 3e8, d=0).
std::optional<Number> parse_claimed_number(std::string_view text);

}  // namespace datacheck
