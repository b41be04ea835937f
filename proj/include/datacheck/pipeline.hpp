#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "datacheck/dataset.hpp"
#include "datacheck/factspec.hpp"
#include "datacheck/parser.hpp"
#include "datacheck/veracity.hpp"

namespace datacheck {

struct CheckedClaim {
    ClaimRecord record;  // span indexes the document; verdict mirrors result
    VerificationResult result;
};

struct DocumentCheck {
    std::vector<CheckedClaim> claims;
    /// Sentence fragments that looked like claims but matched no template.
    std::vector<Diagnostic> diagnostics;
};

/// Detection, decomposition, spec transformation and verification for every
/// fact in `document`. Facts of a compound sentence become separate claims.
/// A null dataset leaves every claim Unverifiable.
DocumentCheck check_document(std::string_view document, const Dataset* dataset, ParserBackend& backend,
                             const VeracityConfig& config = {});

/// Verifies one claim's spec (or marks it Unverifiable when it has none or no dataset).
VerificationResult verify_claim(const ClaimRecord& claim, const Dataset* dataset, const VeracityConfig& config = {});

/// Worst-wins process exit code: 2 if any claim is unverifiable, else 1 if
/// any is inaccurate, else 0.
int exit_code_for(const std::vector<CheckedClaim>& claims);

nlohmann::ordered_json claim_to_json(const CheckedClaim& claim);

}  // namespace datacheck
