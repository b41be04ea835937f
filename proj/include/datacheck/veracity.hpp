#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "datacheck/dataset.hpp"
#include "datacheck/factspec.hpp"
#include "datacheck/retrieval.hpp"

namespace datacheck {

struct VeracityConfig {
    double association_threshold = 0.2;
    double skew_threshold = 0.1;
    double iqr_multiplier = 1.5;
    double mahalanobis_threshold = 7.378;  // chi-square, 2 d.o.f., 97.5%

    static VeracityConfig from_json(const nlohmann::json& json);
    nlohmann::ordered_json to_json() const;
};

struct Statistic {
    std::string name;
    double value = 0;
    bool operator==(const Statistic&) const = default;
};

struct VerificationResult {
    Verdict verdict = Verdict::Unverifiable;
    Subtype subtype = Subtype::ValueMean;
    nlohmann::ordered_json claimed;
    /// Absent exactly when the verdict is Unverifiable.
    std::optional<nlohmann::ordered_json> actual;
    /// Intermediates of the rule that fired, in computation order.
    std::vector<Statistic> statistics;
    std::string explanation;
    /// Replacement literal in the claim's style ("8th", "29.2%", "-4.0").
    std::optional<std::string> rectification;
    std::vector<Diagnostic> diagnostics;

    std::optional<double> statistic(std::string_view name) const;
};

nlohmann::ordered_json result_to_json(const VerificationResult& result);
VerificationResult result_from_json(const nlohmann::json& json);

/// Full C3+C4 path: validation, retrieval, rule. Never throws on data problems.
VerificationResult verify(const Dataset& dataset, const FactSpec& spec, const VeracityConfig& config = {});
/// Rule dispatch over an already retrieved slice.
VerificationResult verify_slice(const Dataset& dataset, const EvidenceSlice& slice, const FactSpec& spec,
                                const VeracityConfig& config = {});

// Statistics shared with the evidence builders.
double mean_of(const std::vector<double>& v);
double median_of(std::vector<double> v);
double sum_of(const std::vector<double>& v);
/// Linear-interpolation quantile on sorted data at position q * (n - 1).
double quantile_sorted(const std::vector<double>& sorted, double q);
double pearson(const std::vector<double>& x, const std::vector<double>& y);
/// g1 = m3 / m2^(3/2) with population central moments.
double skewness(const std::vector<double>& v);
/// Descending competition rank of `value` ("1224" ranking).
int competition_rank(const std::vector<double>& values, double value);

/// The spec with its claimed value replaced by the result's rectification.
/// Throws std::invalid_argument when the result carries none.
FactSpec apply_rectification(const FactSpec& spec, const VerificationResult& result);

struct RectifyOutcome {
    std::string text;
    bool changed = false;
    std::optional<Diagnostic> diagnostic;
};

/// Replaces the claimed literal in `claim_text` with the rectification,
/// keeping its written style (ordinal word, percent sign, scale word, number
/// word). `value_span`, when known, limits the search to the VALUE slot.
RectifyOutcome rectify(std::string_view claim_text, const VerificationResult& result,
                       std::optional<CharSpan> value_span = std::nullopt);

}  // namespace datacheck
