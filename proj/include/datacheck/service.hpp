#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "json.hpp"

#include "datacheck/dataset.hpp"
#include "datacheck/parser.hpp"
#include "datacheck/pipeline.hpp"
#include "datacheck/veracity.hpp"

namespace httplib {
class Server;
}

namespace datacheck {

struct ServiceConfig {
    std::filesystem::path data_dir = "datacheck-data";
    std::string host = "127.0.0.1";
    int port = 8080;
    VeracityConfig veracity;
    std::optional<LlmConfig> llm;

    /// Keys: host, port, data_dir (relative to `base_dir`), veracity{...},
    /// llm{endpoint, api_key_env}. The LLM key itself only comes from the environment.
    static ServiceConfig from_json(const nlohmann::json& json, const std::filesystem::path& base_dir = ".");
    static ServiceConfig load(const std::filesystem::path& path);
};

struct Response {
    int status = 200;
    nlohmann::ordered_json body;
};

struct VerdictOverride {
    Verdict verdict = Verdict::Accurate;
    std::string who = "human";
    std::string note;
    std::uint64_t revision = 0;  // session revision that recorded it
};

struct SessionClaim {
    CheckedClaim claim;  // record.id is the global claim id
    std::optional<std::string> dataset_id;  // claim-local binding
    std::optional<VerdictOverride> override;
    std::optional<std::string> suggestion;  // proposed text after a verdict-flipping edit
};

struct Session {
    std::string id;
    std::uint64_t revision = 1;
    std::string text;
    std::string dataset_id;
    std::string parser = "template";
    std::vector<SessionClaim> claims;
    std::vector<Diagnostic> diagnostics;
};

nlohmann::ordered_json session_to_json(const Session& session);
Session session_from_json(const nlohmann::json& json);

/// The HTTP API as plain calls; `mount` wires them to routes.
class Service {
public:
    explicit Service(ServiceConfig config);

    Response upload_dataset(std::string_view csv, const std::string& name);
    Response list_datasets() const;
    Response get_dataset(const std::string& id) const;

    Response create_session(const nlohmann::json& body);
    Response get_session(const std::string& id) const;
    Response get_claims(const std::string& session_id) const;
    Response get_claim(const std::string& claim_id) const;
    Response get_evidence(const std::string& claim_id, const std::string& form) const;
    Response patch_spec(const std::string& claim_id, const nlohmann::json& fragment);
    Response rectify_claim(const std::string& claim_id);
    Response rectify_all(const std::string& session_id);
    Response bind_dataset(const std::string& claim_id, const nlohmann::json& body);
    Response suitability(const std::string& claim_id, const std::string& dataset_id) const;
    Response set_verdict(const std::string& claim_id, const nlohmann::json& body);
    Response clear_verdict(const std::string& claim_id);

    void mount(httplib::Server& server);
    /// Blocks serving on the configured host and port.
    bool listen();

    const ServiceConfig& config() const { return config_; }

private:
    struct SessionSlot {
        std::mutex write;  // single writer per session
        std::shared_ptr<const Session> snapshot;
    };

    std::shared_ptr<const Dataset> dataset(const std::string& id) const;
    std::shared_ptr<SessionSlot> slot(const std::string& session_id) const;
    std::shared_ptr<const Session> snapshot(const std::string& session_id) const;
    std::unique_ptr<ParserBackend> backend_for(const std::string& parser) const;
    nlohmann::ordered_json claim_json(const Session& s, const SessionClaim& c) const;
    nlohmann::ordered_json session_json(const Session& s) const;
    void publish(SessionSlot& slot, Session next);
    void persist_session(const Session& s) const;
    void persist_dataset(const Dataset& ds, std::string_view csv) const;
    void load();

    template <class Fn>
    Response mutate_claim(const std::string& claim_id, Fn&& fn);

    ServiceConfig config_;
    mutable std::shared_mutex lock_;  // guards the maps, not the sessions
    std::map<std::string, std::shared_ptr<const Dataset>> datasets_;
    std::map<std::string, std::shared_ptr<SessionSlot>> sessions_;
    std::uint64_t next_dataset_ = 1;
    std::uint64_t next_session_ = 1;
    std::uint64_t dataset_revision_ = 0;
};

/// Session id of a global claim id ("s3-claim-2" -> "s3").
std::optional<std::string> session_of_claim(const std::string& claim_id);

}  // namespace datacheck
