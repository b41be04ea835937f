#include <cmath>
#include <cstdio>
#include <sstream>

#include "datacheck/corpus.hpp"

namespace datacheck {

namespace {

using nlohmann::json;

bool numbers_close(double a, double b) {
    return a == b || std::fabs(a - b) <= 1e-9 * std::max(std::fabs(a), std::fabs(b));
}

bool literal_values_equal(const json& a, const json& b) {
    if (a.is_number() && b.is_number()) return numbers_close(a.get<double>(), b.get<double>());
    if (a.is_string() && b.is_string()) {
        const auto sa = a.get<std::string>();
        const auto sb = b.get<std::string>();
        const auto da = parse_date(sa);
        const auto db = parse_date(sb);
        if (da && db) return *da == *db;
        return to_lower(trim(sa)) == to_lower(trim(sb));
    }
    // A numeric column written as text on one side ("7" vs 7).
    if (a.is_number() && b.is_string()) {
        auto v = parse_number(b.get<std::string>());
        return v && numbers_close(a.get<double>(), *v);
    }
    if (a.is_string() && b.is_number()) return literal_values_equal(b, a);
    return a == b;
}

bool predicates_equal(const json& a, const json& b) {
    return fold_attribute(a.at("attribute").get<std::string>()) == fold_attribute(b.at("attribute").get<std::string>()) &&
           a.at("op") == b.at("op") && literal_values_equal(a.at("value"), b.at("value"));
}

bool scalars_equal(const std::string& key, const json& a, const json& b) {
    if (a.is_number() && b.is_number()) return numbers_close(a.get<double>(), b.get<double>());
    if (a.is_string() && b.is_string()) {
        const auto sa = a.get<std::string>();
        const auto sb = b.get<std::string>();
        if (key.rfind("measure", 0) == 0) return fold_attribute(sa) == fold_attribute(sb);
        if (key == "value") {
            auto pa = parse_percent(sa);
            auto pb = parse_percent(sb);
            if (pa && pb) return numbers_close(pa->value, pb->value);
        }
        return to_lower(trim(sa)) == to_lower(trim(sb));
    }
    return a == b;
}

/// Fraction of `truth` predicates found in `predicted`, each used at most once.
double list_credit(const json& predicted, const json& truth, bool& exact) {
    std::vector<bool> used(predicted.size(), false);
    std::size_t matched = 0;
    for (const auto& t : truth) {
        for (std::size_t i = 0; i < predicted.size(); ++i) {
            if (!used[i] && predicates_equal(predicted[i], t)) {
                used[i] = true;
                ++matched;
                break;
            }
        }
    }
    exact = matched == truth.size() && matched == predicted.size();
    if (truth.empty()) return predicted.empty() ? 1.0 : 0.0;
    return static_cast<double>(matched) / static_cast<double>(truth.size());
}

json field_or_default(const json& spec, const std::string& key, const json& like) {
    if (spec.contains(key)) return spec.at(key);
    return like.is_array() ? json::array() : json();
}

double rate(std::size_t num, std::size_t den) { return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den); }

std::string percent(double r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f%%", 100 * r);
    return buf;
}

}  // namespace

MatchResult match_specs(const FactSpec& predicted, const FactSpec& truth) {
    MatchResult out;
    const json t = spec_to_json(truth);
    const json p = spec_to_json(predicted);
    const bool same_arm = t.at("fact_type") == p.at("fact_type");
    std::size_t fields = 0;
    double credit = 0;
    bool all_exact = same_arm;
    auto keys = [](const json& j) {
        std::vector<std::string> k;
        for (auto it = j.begin(); it != j.end(); ++it)
            if (it.key() != "fact_type" && it.key() != "subtype") k.push_back(it.key());
        return k;
    };
    for (const auto& key : keys(t)) {
        ++fields;
        const json& tv = t.at(key);
        const json pv = field_or_default(p, key, tv);
        bool exact = false;
        double c = 0;
        if (tv.is_array()) {
            c = pv.is_array() ? list_credit(pv, tv, exact) : 0.0;
        } else if (tv.is_object()) {
            exact = pv.is_object() && predicates_equal(pv, tv);
            c = exact ? 1 : 0;
        } else {
            exact = scalars_equal(key, pv, tv);
            c = exact ? 1 : 0;
        }
        credit += c;
        if (!exact) {
            all_exact = false;
            out.mismatched_fields.push_back(key);
        }
    }
    // Fields the prediction adds beyond the truth arm (e.g. a measure_y).
    for (const auto& key : keys(p)) {
        if (t.contains(key)) continue;
        const json& pv = p.at(key);
        if (pv.is_array() && pv.empty()) continue;
        all_exact = false;
        out.mismatched_fields.push_back(key);
    }
    out.complete = all_exact;
    out.partial = !same_arm || fields == 0 ? 0.0 : credit / static_cast<double>(fields);
    return out;
}

double TypeRates::classification_accuracy() const { return rate(classified, entries); }
double TypeRates::complete_rate() const { return rate(complete, entries); }
double TypeRates::partial_rate() const { return entries == 0 ? 0.0 : partial_sum / static_cast<double>(entries); }

double ParserReport::mean_complete_rate() const {
    if (per_type.empty()) return 0;
    double s = 0;
    for (const auto& [type, r] : per_type) s += r.complete_rate();
    return s / static_cast<double>(per_type.size());
}

nlohmann::ordered_json ParserReport::to_json() const {
    auto rates = [](const TypeRates& r) {
        nlohmann::ordered_json j;
        j["entries"] = r.entries;
        j["classification_accuracy"] = r.classification_accuracy();
        j["complete_match_rate"] = r.complete_rate();
        j["partial_match_rate"] = r.partial_rate();
        return j;
    };
    nlohmann::ordered_json j;
    j["backend"] = backend;
    j["per_type"] = nlohmann::ordered_json::object();
    for (const auto& [type, r] : per_type) j["per_type"][std::string(to_string(type))] = rates(r);
    j["overall"] = rates(overall);
    j["mean_complete_match_rate"] = mean_complete_rate();
    auto diags = nlohmann::ordered_json::array();
    for (const auto& d : diagnostics) {
        nlohmann::ordered_json e;
        e["index"] = d.index;
        e["claim_text"] = d.claim_text;
        e["predicted_type"] = d.predicted_type ? json(std::string(to_string(*d.predicted_type))) : json();
        if (!d.error.empty()) e["error"] = d.error;
        e["mismatched_fields"] = d.mismatched_fields;
        e["partial"] = d.partial;
        diags.push_back(e);
    }
    j["diagnostics"] = diags;
    return j;
}

std::string ParserReport::to_text() const {
    std::ostringstream os;
    char line[160];
    os << "backend: " << backend << "\n";
    std::snprintf(line, sizeof line, "%-16s %8s %10s %10s %10s\n", "type", "entries", "classify", "complete",
                  "partial");
    os << line;
    auto row = [&](const std::string& name, const TypeRates& r) {
        std::snprintf(line, sizeof line, "%-16s %8zu %10s %10s %10s\n", name.c_str(), r.entries,
                      percent(r.classification_accuracy()).c_str(), percent(r.complete_rate()).c_str(),
                      percent(r.partial_rate()).c_str());
        os << line;
    };
    for (const auto& [type, r] : per_type) row(std::string(to_string(type)), r);
    row("overall", overall);
    os << "mean complete match: " << percent(mean_complete_rate()) << "\n";
    for (const auto& d : diagnostics) {
        os << "  [" << d.index << "] " << d.claim_text << "\n      ";
        if (!d.error.empty())
            os << d.error;
        else {
            os << "mismatched:";
            for (const auto& f : d.mismatched_fields) os << " " << f;
        }
        os << "\n";
    }
    return os.str();
}

ParserReport eval_parser(ParserBackend& backend, const std::vector<CorpusEntry>& corpus, const Dataset& dataset) {
    ParserReport report;
    report.backend = backend.name();
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const CorpusEntry& e = corpus[i];
        TypeRates& rates = report.per_type[e.fact_type];
        ++rates.entries;
        ++report.overall.entries;
        EntryDiagnostic diag{i, e.claim_text, std::nullopt, {}, {}, 0};
        try {
            diag.predicted_type = backend.classify_fact_type(e.claim_text);
        } catch (const std::exception& ex) {
            diag.error = std::string("classify: ") + ex.what();
        }
        if (diag.predicted_type == e.fact_type) {
            ++rates.classified;
            ++report.overall.classified;
        }
        try {
            const FactSpec predicted = backend.to_spec(e.claim_text, dataset);
            const MatchResult m = match_specs(predicted, e.truth_spec);
            diag.partial = m.partial;
            diag.mismatched_fields = m.mismatched_fields;
            rates.partial_sum += m.partial;
            report.overall.partial_sum += m.partial;
            if (m.complete) {
                ++rates.complete;
                ++report.overall.complete;
            }
            if (m.complete && diag.error.empty() && diag.predicted_type == e.fact_type) continue;
        } catch (const std::exception& ex) {
            if (diag.error.empty()) diag.error = std::string("to_spec: ") + ex.what();
        }
        report.diagnostics.push_back(std::move(diag));
    }
    return report;
}

nlohmann::ordered_json entry_to_json(const CorpusEntry& e) {
    nlohmann::ordered_json j;
    j["claim_text"] = e.claim_text;
    j["truth_spec"] = serialize_spec(e.truth_spec);
    j["intended_verdict"] = std::string(to_string(e.intended_verdict));
    j["fact_type"] = std::string(to_string(e.fact_type));
    j["subtype"] = std::string(to_string(e.subtype));
    j["seed"] = e.seed;
    j["template"] = e.template_pattern;
    if (e.paraphrase) j["paraphrase"] = *e.paraphrase;
    return j;
}

CorpusEntry entry_from_json(const json& j) {
    auto bad = [](const std::string& why) { throw CorpusError(CorpusError::Kind::BadCorpusLine, why); };
    if (!j.is_object()) bad("expected an object");
    auto str = [&](const char* key) {
        if (!j.contains(key) || !j.at(key).is_string()) bad(std::string("missing string field ") + key);
        return j.at(key).get<std::string>();
    };
    CorpusEntry e;
    e.claim_text = str("claim_text");
    try {
        e.truth_spec = parse_spec_json(str("truth_spec"));
    } catch (const SpecParseError& ex) {
        bad(std::string("truth_spec: ") + ex.what());
    }
    auto v = verdict_from_string(str("intended_verdict"));
    if (!v) bad("unknown intended_verdict");
    e.intended_verdict = *v;
    auto t = fact_type_from_string(str("fact_type"));
    if (!t) bad("unknown fact_type");
    e.fact_type = *t;
    if (j.contains("subtype")) {
        auto s = subtype_from_string(str("subtype"));
        if (!s) bad("unknown subtype");
        e.subtype = *s;
    } else {
        e.subtype = subtype_of(e.truth_spec);
    }
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned()) bad("seed must be a non-negative integer");
        e.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("template")) e.template_pattern = str("template");
    if (j.contains("paraphrase")) e.paraphrase = str("paraphrase");
    if (fact_type_of(e.truth_spec) != e.fact_type) bad("fact_type does not match truth_spec");
    return e;
}

std::string write_corpus_jsonl(const std::vector<CorpusEntry>& corpus) {
    std::string out;
    for (const auto& e : corpus) out += entry_to_json(e).dump() + "\n";
    return out;
}

std::vector<CorpusEntry> read_corpus_jsonl(std::string_view text) {
    std::vector<CorpusEntry> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        ++line_no;
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        if (trim(line).empty()) continue;
        try {
            out.push_back(entry_from_json(json::parse(line)));
        } catch (const json::exception& ex) {
            throw CorpusError(CorpusError::Kind::BadCorpusLine,
                              "BadCorpusLine(" + std::to_string(line_no) + "): " + ex.what());
        } catch (const CorpusError& ex) {
            throw CorpusError(CorpusError::Kind::BadCorpusLine,
                              "BadCorpusLine(" + std::to_string(line_no) + "): " + ex.what());
        }
    }
    return out;
}

}  // namespace datacheck
