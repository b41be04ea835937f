#include <cstdlib>
#include <mutex>
#include <thread>

#include "datacheck/parser.hpp"
#include "httplib.h"

namespace datacheck {

namespace {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

Endpoint split_endpoint(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos || url.compare(0, scheme_end, "http") != 0)
        throw ParseError(ParseError::Kind::Backend, "", "Backend: endpoint must be an http:// URL: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

std::mutex& endpoint_mutex(const std::string& endpoint) {
    static std::mutex registry_mutex;
    static std::map<std::string, std::unique_ptr<std::mutex>> registry;
    std::lock_guard lock(registry_mutex);
    auto& m = registry[endpoint];
    if (!m) m = std::make_unique<std::mutex>();
    return *m;
}

[[noreturn]] void backend_error(const std::string& message) {
    throw ParseError(ParseError::Kind::Backend, "", "Backend: " + message);
}

nlohmann::json attribute_list(const Dataset& ds) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& c : ds.columns) out.push_back({{"name", c.name}, {"kind", to_string(c.kind)}});
    return out;
}

}  // namespace

std::optional<LlmConfig> LlmConfig::from_env(const std::string& endpoint_var, const std::string& key_var) {
    const char* endpoint = std::getenv(endpoint_var.c_str());
    if (!endpoint || !*endpoint) return std::nullopt;
    LlmConfig c;
    c.endpoint = endpoint;
    if (const char* key = std::getenv(key_var.c_str())) c.api_key = key;
    return c;
}

LlmBackend::LlmBackend(LlmConfig config) : config_(std::move(config)) { split_endpoint(config_.endpoint); }

nlohmann::json LlmBackend::call(std::string_view step, std::string_view text, const nlohmann::json& attributes) {
    const Endpoint ep = split_endpoint(config_.endpoint);
    const std::string body =
        nlohmann::json{{"step", step}, {"text", text}, {"attributes", attributes}}.dump();

    std::lock_guard lock(endpoint_mutex(config_.endpoint));
    httplib::Client client(ep.origin);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    auto backoff = config_.initial_backoff;
    std::string last_error = "no attempt made";
    for (int attempt = 1; attempt <= std::max(1, config_.max_attempts); ++attempt) {
        ++requests_;
        auto res = client.Post(ep.path, headers, body, "application/json");
        bool retry = false;
        if (!res) {
            last_error = "request failed: " + httplib::to_string(res.error());
            retry = true;
        } else if (res->status >= 500 || res->status == 429) {
            last_error = "HTTP " + std::to_string(res->status);
            retry = true;
        } else if (res->status != 200) {
            backend_error("HTTP " + std::to_string(res->status) + " for step " + std::string(step));
        } else {
            auto parsed = nlohmann::json::parse(res->body, nullptr, false);
            if (parsed.is_discarded() || !parsed.is_object())
                backend_error("malformed response for step " + std::string(step));
            return parsed;
        }
        if (retry && attempt < config_.max_attempts) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
    backend_error(last_error + " (step " + std::string(step) + ")");
}

std::vector<ClaimRecord> LlmBackend::detect(std::string_view document) {
    const auto r = call("detect", document, nlohmann::json::array());
    if (!r.contains("claims") || !r["claims"].is_array()) backend_error("detect response lacks claims");
    std::vector<ClaimRecord> out;
    std::size_t search_from = 0;
    for (const auto& c : r["claims"]) {
        ClaimRecord rec;
        rec.id = "claim-" + std::to_string(out.size() + 1);
        if (c.is_string()) {
            rec.text = c.get<std::string>();
            auto pos = document.find(rec.text, search_from);
            if (pos == std::string_view::npos) pos = document.find(rec.text);
            if (pos == std::string_view::npos) backend_error("claim text not found in document");
            rec.span = {pos, pos + rec.text.size()};
        } else if (c.is_object() && c.contains("begin") && c.contains("end")) {
            const auto b = c["begin"].get<std::size_t>();
            const auto e = c["end"].get<std::size_t>();
            if (b > e || e > document.size()) backend_error("claim span out of range");
            rec.span = {b, e};
            rec.text = c.value("text", std::string(document.substr(b, e - b)));
        } else {
            backend_error("unrecognized claim entry");
        }
        search_from = rec.span.end;
        out.push_back(std::move(rec));
    }
    return out;
}

Compoundness LlmBackend::classify_compound(std::string_view sentence) {
    const auto r = call("compound", sentence, nlohmann::json::array());
    const std::string v = r.value("result", std::string());
    if (v == "single") return Compoundness::Single;
    if (v == "compound") return Compoundness::Compound;
    backend_error("compound response must be single or compound");
}

Decomposition LlmBackend::decompose(std::string_view sentence) {
    const auto r = call("decompose", sentence, nlohmann::json::array());
    if (!r.contains("facts") || !r["facts"].is_array()) backend_error("decompose response lacks facts");
    Decomposition d;
    for (const auto& f : r["facts"]) {
        if (!f.is_string()) backend_error("fact entries must be strings");
        d.facts.push_back(f.get<std::string>());
        const auto pos = sentence.find(d.facts.back());
        d.spans.push_back(pos == std::string_view::npos ? CharSpan{0, sentence.size()}
                                                        : CharSpan{pos, pos + d.facts.back().size()});
    }
    return d;
}

FactType LlmBackend::classify_fact_type(std::string_view fact) {
    const auto r = call("classify", fact, nlohmann::json::array());
    auto t = fact_type_from_string(r.value("fact_type", std::string()));
    if (!t) throw ParseError(ParseError::Kind::NoTemplateMatch, "", "NoTemplateMatch: model did not classify the fact");
    return *t;
}

FactSpec LlmBackend::to_spec(std::string_view fact, const Dataset& dataset) {
    const std::string text = resolve_ellipsis(resolve_coreference(fact, fact), fact);
    const auto r = call("to_spec", text, attribute_list(dataset));
    if (!r.contains("spec")) backend_error("to_spec response lacks spec");
    const auto& spec = r["spec"];
    try {
        if (spec.is_object() && spec.contains("fact_type")) return spec_from_json(spec);
        if (spec.is_string()) return parse_spec_json(spec.get<std::string>());
        return parse_spec_json(spec.dump());
    } catch (const SpecParseError& e) {
        backend_error(std::string("unparseable spec: ") + e.what());
    } catch (const nlohmann::json::exception& e) {
        backend_error(std::string("unparseable spec: ") + e.what());
    }
}

}  // namespace datacheck
