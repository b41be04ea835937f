#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "datacheck/dataset.hpp"
#include "datacheck/factspec.hpp"
#include "datacheck/grammar.hpp"

namespace datacheck {

class ParseError : public std::runtime_error {
public:
    enum class Kind { NoTemplateMatch, UnresolvedAttribute, LiteralParse, Backend };
    ParseError(Kind kind, std::string slot, const std::string& message)
        : std::runtime_error(message), kind_(kind), slot_(std::move(slot)) {}
    Kind kind() const { return kind_; }
    const std::string& slot() const { return slot_; }
    std::string_view kind_name() const;

private:
    Kind kind_;
    std::string slot_;
};

enum class Compoundness { Single, Compound };
std::string_view to_string(Compoundness c);

struct Decomposition {
    std::vector<std::string> facts;
    std::vector<CharSpan> spans;  // offsets of each fact within the sentence
    std::vector<Diagnostic> diagnostics;
};

/// Term -> replacement, applied to whole tokens (case-insensitive).
using SubstitutionMap = std::map<std::string, std::string>;

/// The pipeline contract shared by the deterministic and the LLM backends.
class ParserBackend {
public:
    virtual ~ParserBackend() = default;
    virtual std::string name() const = 0;

    virtual std::vector<ClaimRecord> detect(std::string_view document) = 0;
    virtual Compoundness classify_compound(std::string_view sentence) = 0;
    virtual Decomposition decompose(std::string_view sentence) = 0;
    /// Throws ParseError(NoTemplateMatch) when the fact is not recognized.
    virtual FactType classify_fact_type(std::string_view fact) = 0;
    virtual FactSpec to_spec(std::string_view fact, const Dataset& dataset) = 0;

    virtual std::string resolve_coreference(std::string_view fact, std::string_view document);
    virtual std::string resolve_ellipsis(std::string_view fact, std::string_view document);

    void set_coreference_map(SubstitutionMap map) { coreference_ = std::move(map); }
    void set_ellipsis_map(SubstitutionMap map) { ellipsis_ = std::move(map); }

protected:
    SubstitutionMap coreference_;
    SubstitutionMap ellipsis_;
};

std::string apply_substitutions(std::string_view text, const SubstitutionMap& map);

class TemplateBackend : public ParserBackend {
public:
    explicit TemplateBackend(const TemplateGrammar& grammar = TemplateGrammar::builtin());

    std::string name() const override { return "template"; }
    std::vector<ClaimRecord> detect(std::string_view document) override;
    Compoundness classify_compound(std::string_view sentence) override;
    Decomposition decompose(std::string_view sentence) override;
    FactType classify_fact_type(std::string_view fact) override;
    FactSpec to_spec(std::string_view fact, const Dataset& dataset) override;

    /// Template whose match produced the spec (for slot-span reporting).
    const Template* matching_template(std::string_view fact) const;

private:
    bool matches_any(std::span<const Token> tokens) const;
    const TemplateGrammar& grammar_;
};

/// Builds a spec from a syntactic match; throws ParseError on unresolved slots.
FactSpec bind_match(const TemplateMatch& match, std::span<const Token> tokens, std::string_view source,
                    const Dataset& dataset);

/// Renders `spec` through `tmpl`, or nullopt when the spec's shape does not
/// fit the template (filter count, missing entity, ...). The subspace is
/// consumed in slot order.
std::optional<std::string> render_claim(const Template& tmpl, const FactSpec& spec);

struct LlmConfig {
    std::string endpoint;  // http://host:port/path
    std::string api_key;
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{200};
    std::chrono::seconds timeout{30};

    /// Reads DATACHECK_LLM_ENDPOINT / DATACHECK_LLM_KEY; nullopt when unset.
    static std::optional<LlmConfig> from_env(const std::string& endpoint_var = "DATACHECK_LLM_ENDPOINT",
                                             const std::string& key_var = "DATACHECK_LLM_KEY");
};

/// External model behind the same contract. Each step is one POST of
/// {"step","text","attributes"}; responses carry canonical spec text.
class LlmBackend : public ParserBackend {
public:
    explicit LlmBackend(LlmConfig config);

    std::string name() const override { return "llm"; }
    std::vector<ClaimRecord> detect(std::string_view document) override;
    Compoundness classify_compound(std::string_view sentence) override;
    Decomposition decompose(std::string_view sentence) override;
    FactType classify_fact_type(std::string_view fact) override;
    FactSpec to_spec(std::string_view fact, const Dataset& dataset) override;

    std::size_t requests_sent() const { return requests_; }

private:
    nlohmann::json call(std::string_view step, std::string_view text, const nlohmann::json& attributes);

    LlmConfig config_;
    std::size_t requests_ = 0;
};

}  // namespace datacheck
