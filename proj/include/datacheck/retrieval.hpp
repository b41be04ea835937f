#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "datacheck/dataset.hpp"
#include "datacheck/factspec.hpp"

namespace datacheck {

class RetrievalError : public std::runtime_error {
public:
    enum class Kind { UnknownAttribute, TypeMismatch, BadLiteral, NoMatchingRows };
    RetrievalError(Kind kind, std::string attribute, const std::string& message)
        : std::runtime_error(message), kind_(kind), attribute_(std::move(attribute)) {}
    Kind kind() const { return kind_; }
    const std::string& attribute() const { return attribute_; }
    std::string_view kind_name() const;

private:
    Kind kind_;
    std::string attribute_;
};

/// Which part of the spec a trace entry came from.
enum class PredicateRole { Subspace, Focus, FocusX, FocusY };
std::string_view to_string(PredicateRole role);

struct TraceEntry {
    FilterPredicate predicate;  // attribute resolved to the dataset's column name
    PredicateRole role = PredicateRole::Subspace;
    std::size_t rows_before = 0;
    std::size_t rows_after = 0;
};

struct MeasureVector {
    std::string attribute;  // column name
    std::vector<std::size_t> rows;
    std::vector<double> values;  // aligned with rows
    std::size_t dropped = 0;     // subspace rows whose cell was missing or non-numeric
};

struct EvidenceSlice {
    std::vector<std::size_t> subspace_rows;
    /// Rows of the focus (Difference: focus_x) within the subspace.
    std::vector<std::size_t> focus_rows;
    /// Difference only: rows of focus_y.
    std::vector<std::size_t> focus_y_rows;
    /// One vector per measure in spec field order, drawn from subspace_rows
    /// (Trend: ordered by date ascending).
    std::vector<MeasureVector> measures;
    std::vector<TraceEntry> trace;
    std::optional<std::string> identifier_column;
    /// Trend only: the temporal column and the dates aligned with measures[0].
    std::optional<std::string> time_column;
    std::vector<Date> dates;
    /// Categorization only: full-table row count satisfying each subspace
    /// predicate on its own, in subspace order.
    std::vector<std::size_t> predicate_counts;

    const MeasureVector* measure(std::string_view attribute) const;
};

/// Typed comparison of one cell. Missing cells never satisfy a predicate.
/// Throws RetrievalError on unknown attributes, ordering on categorical
/// columns and literals that do not parse for the column kind.
bool evaluate_predicate(const Row& row, const FilterPredicate& predicate, const Dataset& dataset);

EvidenceSlice retrieve(const Dataset& dataset, const FactSpec& spec);

/// Column naming the row entities: the focus attribute when the spec has one,
/// else the first categorical column with unique values.
std::optional<std::string> identifier_column(const Dataset& dataset, const FactSpec& spec);

}  // namespace datacheck
