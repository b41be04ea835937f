#include "datacheck/pipeline.hpp"

#include <algorithm>

namespace datacheck {

namespace {

VerificationResult unverifiable(Diagnostic d) {
    VerificationResult r;
    r.verdict = Verdict::Unverifiable;
    r.explanation = d.message;
    r.diagnostics.push_back(std::move(d));
    return r;
}

}  // namespace

VerificationResult verify_claim(const ClaimRecord& claim, const Dataset* dataset, const VeracityConfig& config) {
    if (!claim.spec) {
        return unverifiable({"NoSpec", "The claim could not be turned into a data fact specification."});
    }
    if (!dataset) {
        VerificationResult r = unverifiable({"NoDataset", "No reference dataset is bound to the claim."});
        r.subtype = subtype_of(*claim.spec);
        r.claimed = spec_to_json(*claim.spec).value("value", nlohmann::ordered_json(true));
        return r;
    }
    return verify(*dataset, *claim.spec, config);
}

DocumentCheck check_document(std::string_view document, const Dataset* dataset, ParserBackend& backend,
                             const VeracityConfig& config) {
    DocumentCheck out;
    const Dataset empty;
    for (const ClaimRecord& sentence : backend.detect(document)) {
        const Decomposition d = backend.decompose(sentence.text);
        out.diagnostics.insert(out.diagnostics.end(), d.diagnostics.begin(), d.diagnostics.end());
        for (std::size_t k = 0; k < d.facts.size(); ++k) {
            CheckedClaim c;
            c.record.id = "claim-" + std::to_string(out.claims.size() + 1);
            c.record.text = d.facts[k];
            c.record.span = k < d.spans.size()
                                ? CharSpan{sentence.span.begin + d.spans[k].begin, sentence.span.begin + d.spans[k].end}
                                : sentence.span;
            std::string fact = backend.resolve_coreference(d.facts[k], document);
            fact = backend.resolve_ellipsis(fact, document);
            try {
                c.record.fact_type = backend.classify_fact_type(fact);
                c.record.spec = backend.to_spec(fact, dataset ? *dataset : empty);
                c.record.fact_type = fact_type_of(*c.record.spec);
                c.result = verify_claim(c.record, dataset, config);
            } catch (const ParseError& e) {
                c.result = unverifiable({std::string(e.kind_name()), e.what()});
                if (c.record.fact_type) c.result.subtype = subtypes_of(*c.record.fact_type).front();
            }
            c.record.verdict = c.result.verdict;
            out.claims.push_back(std::move(c));
        }
    }
    return out;
}

int exit_code_for(const std::vector<CheckedClaim>& claims) {
    int code = 0;
    for (const auto& c : claims) {
        if (c.result.verdict == Verdict::Unverifiable) code = std::max(code, 2);
        if (c.result.verdict == Verdict::Inaccurate) code = std::max(code, 1);
    }
    return code;
}

nlohmann::ordered_json claim_to_json(const CheckedClaim& c) {
    nlohmann::ordered_json j;
    j["id"] = c.record.id;
    j["text"] = c.record.text;
    j["span"] = {c.record.span.begin, c.record.span.end};
    j["fact_type"] = c.record.fact_type ? nlohmann::ordered_json(std::string(to_string(*c.record.fact_type)))
                                        : nlohmann::ordered_json(nullptr);
    j["spec"] = c.record.spec ? spec_to_json(*c.record.spec) : nlohmann::ordered_json(nullptr);
    j["spec_text"] = c.record.spec ? nlohmann::ordered_json(serialize_spec(*c.record.spec)) : nlohmann::ordered_json(nullptr);
    j["verdict"] = std::string(to_string(c.result.verdict));
    j["result"] = result_to_json(c.result);
    return j;
}

}  // namespace datacheck
