#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "datacheck/dataset.hpp"
#include "datacheck/factspec.hpp"
#include "datacheck/retrieval.hpp"
#include "datacheck/veracity.hpp"

namespace datacheck {

class EvidenceError : public std::runtime_error {
public:
    enum class Kind { UnsupportedVerdict, NoTemporalColumn };
    EvidenceError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

inline constexpr std::size_t kEvidenceRowCap = 500;

/// An editable chip mirroring one slice trace entry.
struct FilterWidget {
    std::string column;
    FilterPredicate predicate;
    PredicateRole role = PredicateRole::Subspace;
    std::size_t rows_before = 0;
    std::size_t rows_after = 0;
};

struct TableColumn {
    std::string name;
    std::string sort;                     // "", "asc" or "desc"
    std::vector<std::size_t> widgets;     // indices into TableLayout::widgets
};

struct TableRow {
    std::string id;  // "r<dataset row>", or a synthetic id such as "difference" or "bin-3"
    std::optional<std::size_t> index;
    std::vector<nlohmann::ordered_json> cells;
};

struct SummaryRow {
    std::string label;
    std::string statistic;  // name in VerificationResult::statistics
    double value = 0;
    bool highlighted = true;
};

struct TableLayout {
    std::string layout;  // T1..T13
    Subtype subtype = Subtype::ValueMean;
    std::vector<TableColumn> columns;
    std::vector<TableRow> rows;
    std::vector<SummaryRow> sticky_summary_rows;
    std::vector<std::string> highlight_row_ids;
    bool index_column = false;
    std::vector<FilterWidget> widgets;
    std::size_t total_rows = 0;  // before the row cap
    bool truncated = false;
    std::vector<std::string> notes;
};

struct Annotation {
    std::string type;  // rule, highlight, label, diffline, band, claimed
    std::string axis;  // x, y or empty
    std::optional<std::string> statistic;
    std::optional<double> value;
    std::optional<std::string> mark;  // data item id the annotation points at
    std::optional<std::string> start;
    std::optional<std::string> end;
    std::string text;
};

struct ChartSpec {
    std::string layout;  // V1..V13, or "context"
    std::string kind;
    nlohmann::ordered_json data = nlohmann::ordered_json::array();
    nlohmann::ordered_json encoding = nlohmann::ordered_json::object();
    std::vector<Annotation> annotations;
    std::vector<FilterWidget> widgets;
    std::size_t total_points = 0;
    bool truncated = false;
    std::vector<std::string> notes;
};

struct EvidenceBundle {
    Subtype subtype = Subtype::ValueMean;
    Verdict verdict = Verdict::Accurate;
    std::optional<TableLayout> table;
    std::optional<ChartSpec> chart;
    std::optional<ChartSpec> context;
};

enum class EvidenceForm { Table, Chart, Both };
std::optional<EvidenceForm> evidence_form_from_string(std::string_view text);

std::string_view table_layout_name(Subtype subtype);
std::string_view chart_layout_name(Subtype subtype);
std::string_view chart_kind(Subtype subtype);

TableLayout build_table(const Dataset& dataset, const EvidenceSlice& slice, const FactSpec& spec,
                        const VerificationResult& result);
ChartSpec build_chart(const Dataset& dataset, const EvidenceSlice& slice, const FactSpec& spec,
                      const VerificationResult& result);
/// Line chart over the dataset's whole time extent (non-temporal subspace
/// filters still apply) with the claim window shaded.
ChartSpec build_context_overlay(const Dataset& dataset, const FactSpec& spec);

/// Retrieves, verifies and builds the requested forms; Trend charts carry the
/// context overlay. Throws EvidenceError(UnsupportedVerdict) for unverifiable specs.
EvidenceBundle build_bundle(const Dataset& dataset, const FactSpec& spec, EvidenceForm form,
                            const VeracityConfig& config = {});
EvidenceBundle build_bundle(const Dataset& dataset, const EvidenceSlice& slice, const FactSpec& spec,
                            const VerificationResult& result, EvidenceForm form);

/// Sturges bins over [min, max]: right-open except the last. Returns bin counts
/// and the k + 1 edges.
struct Histogram {
    std::vector<double> edges;
    std::vector<std::size_t> counts;
};
Histogram sturges_histogram(const std::vector<double>& values);

nlohmann::ordered_json widget_to_json(const FilterWidget& w);
nlohmann::ordered_json table_to_json(const TableLayout& table);
nlohmann::ordered_json chart_to_json(const ChartSpec& chart);
nlohmann::ordered_json bundle_to_json(const EvidenceBundle& bundle);

}  // namespace datacheck
