#pragma once

// Brute-force reference for verdicts. It keeps its own copy of the table as
// raw CSV text and recomputes everything with textbook formulas, so it shares
// no code with the engine beyond the FactSpec types it reads.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "datacheck/factspec.hpp"
#include "datacheck/veracity.hpp"

namespace oracle {

struct Table {
    std::vector<std::string> names;
    std::vector<std::vector<std::string>> rows;  // raw cell text, "" = missing

    std::string to_csv() const;
    int column(const std::string& name) const;
};

enum class Kind { Numeric, Categorical, Temporal };

struct Outcome {
    datacheck::Verdict verdict = datacheck::Verdict::Unverifiable;
    /// Numeric actual (mean, percent, rank, r, g1, difference, count, or the
    /// extreme target); outliers report 1/0 for the flag.
    std::optional<double> actual;
    std::optional<std::string> direction;  // trend only
    std::vector<std::pair<std::string, double>> statistics;
};

Outcome evaluate(const Table& table, const datacheck::FactSpec& spec);

/// A random table with columns name, group, x, y, z, day (z has gaps).
Table random_table(std::mt19937_64& rng, std::size_t rows);

struct Case {
    Table table;
    datacheck::FactSpec spec;
};

/// A random spec of `subtype` against `table`; the claimed value is true or
/// perturbed with equal odds.
datacheck::FactSpec random_spec(std::mt19937_64& rng, const Table& table, datacheck::Subtype subtype);

/// Case `index` of the seeded suite: subtype cycles through all 13.
Case make_case(std::uint64_t seed, std::size_t index);

bool close(double a, double b, double tolerance = 1e-9);

/// Why the engine's result differs from the oracle's outcome, if it does:
/// verdict, actual value (or trend direction) and every statistic both report.
std::optional<std::string> disagreement(const datacheck::VerificationResult& result, const Outcome& outcome,
                                        double tolerance = 1e-9);

}  // namespace oracle
