#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "datacheck/dataset.hpp"
#include "datacheck/factspec.hpp"
#include "datacheck/grammar.hpp"
#include "datacheck/parser.hpp"

namespace datacheck {

struct CorpusEntry {
    std::string claim_text;
    FactSpec truth_spec;
    Verdict intended_verdict = Verdict::Accurate;
    FactType fact_type = FactType::Value;
    Subtype subtype = Subtype::ValueMean;
    std::uint64_t seed = 0;
    std::string template_pattern;
    std::optional<std::string> paraphrase;
};

class CorpusError : public std::runtime_error {
public:
    enum class Kind { UnsupportedType, CannotPerturb, BadCorpusLine };
    CorpusError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

struct CorpusStats {
    std::map<Subtype, std::size_t> accurate;
    std::map<Subtype, std::size_t> inaccurate;
    std::size_t attempts = 0;
};

/// `per_type` entries for each of the 10 fact types, cycling through the
/// type's subtypes in pairs (accurate, then perturbed). Every entry is
/// checked to verify to its intended verdict.
std::vector<CorpusEntry> generate_corpus(const Dataset& dataset, std::size_t per_type, std::uint64_t seed,
                                         const TemplateGrammar& grammar = TemplateGrammar::builtin(),
                                         CorpusStats* stats = nullptr);

/// Shifts the claimed value so it no longer matches at its written precision
/// (numbers by 10-50%, ranks and counts by 1-3, categorical values flipped).
FactSpec perturb_spec(const FactSpec& spec, std::uint64_t seed);

struct MatchResult {
    bool complete = false;
    double partial = 0;
    std::vector<std::string> mismatched_fields;
};

MatchResult match_specs(const FactSpec& predicted, const FactSpec& truth);

struct TypeRates {
    std::size_t entries = 0;
    std::size_t classified = 0;
    std::size_t complete = 0;
    double partial_sum = 0;

    double classification_accuracy() const;
    double complete_rate() const;
    double partial_rate() const;
};

struct EntryDiagnostic {
    std::size_t index = 0;
    std::string claim_text;
    std::optional<FactType> predicted_type;
    std::string error;
    std::vector<std::string> mismatched_fields;
    double partial = 0;
};

struct ParserReport {
    std::string backend;
    std::map<FactType, TypeRates> per_type;
    TypeRates overall;
    std::vector<EntryDiagnostic> diagnostics;  // entries that were not a complete match

    /// Mean of the per-type complete-match rates.
    double mean_complete_rate() const;
    nlohmann::ordered_json to_json() const;
    std::string to_text() const;
};

ParserReport eval_parser(ParserBackend& backend, const std::vector<CorpusEntry>& corpus, const Dataset& dataset);

nlohmann::ordered_json entry_to_json(const CorpusEntry& entry);
CorpusEntry entry_from_json(const nlohmann::json& json);
std::string write_corpus_jsonl(const std::vector<CorpusEntry>& corpus);
/// Throws CorpusError(BadCorpusLine) naming the 1-based line.
std::vector<CorpusEntry> read_corpus_jsonl(std::string_view text);

/// Per-subtype coverage lines for a generated corpus.
std::string coverage_summary(const std::vector<CorpusEntry>& corpus);

}  // namespace datacheck
