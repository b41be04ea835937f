#include "datacheck/service.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "httplib.h"

#include "datacheck/evidence.hpp"
#include "datacheck/grammar.hpp"

namespace datacheck {

namespace {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

Response error(int status, std::string code, std::string message) {
    ojson body;
    body["error"] = std::move(code);
    body["message"] = std::move(message);
    return {status, std::move(body)};
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_atomic(const fs::path& path, std::string_view bytes) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) throw std::runtime_error("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::uint64_t numeric_suffix(const std::string& id) {
    std::uint64_t n = 0;
    for (char c : id)
        if (c >= '0' && c <= '9') n = n * 10 + static_cast<std::uint64_t>(c - '0');
    return n;
}

ojson schema_json(const Dataset& ds) {
    ojson a = ojson::array();
    for (const auto& e : schema(ds)) a.push_back({{"name", e.name}, {"kind", std::string(to_string(e.kind))}});
    return a;
}

ojson dataset_json(const Dataset& ds) {
    ojson j;
    j["dataset_id"] = ds.id;
    j["name"] = ds.name;
    j["rows"] = ds.rows.size();
    j["schema"] = schema_json(ds);
    return j;
}

ojson override_json(const VerdictOverride& o) {
    return {{"verdict", std::string(to_string(o.verdict))}, {"who", o.who}, {"note", o.note}, {"revision", o.revision}};
}

ojson claim_record_json(const SessionClaim& c) {
    ojson j;
    const auto& r = c.claim.record;
    j["id"] = r.id;
    j["text"] = r.text;
    j["span"] = {r.span.begin, r.span.end};
    j["fact_type"] = r.fact_type ? ojson(std::string(to_string(*r.fact_type))) : ojson(nullptr);
    j["spec_text"] = r.spec ? ojson(serialize_spec(*r.spec)) : ojson(nullptr);
    j["dataset_id"] = c.dataset_id ? ojson(*c.dataset_id) : ojson(nullptr);
    j["result"] = result_to_json(c.claim.result);
    j["override"] = c.override ? override_json(*c.override) : ojson(nullptr);
    j["suggestion"] = c.suggestion ? ojson(*c.suggestion) : ojson(nullptr);
    return j;
}

/// Text for `spec` in the phrasing of the claim's own template when possible.
std::optional<std::string> suggest_text(std::string_view original, const FactSpec& spec) {
    TemplateBackend backend;
    if (const Template* t = backend.matching_template(original))
        if (t->type == fact_type_of(spec))
            if (auto s = render_claim(*t, spec)) return s;
    for (const Template* t : TemplateGrammar::builtin().for_subtype(subtype_of(spec)))
        if (auto s = render_claim(*t, spec)) return s;
    return std::nullopt;
}

Verdict effective_verdict(const SessionClaim& c) {
    return c.override ? c.override->verdict : c.claim.result.verdict;
}

std::optional<std::string> query(const httplib::Request& req, const char* key) {
    if (!req.has_param(key)) return std::nullopt;
    return req.get_param_value(key);
}

}  // namespace

std::optional<std::string> session_of_claim(const std::string& claim_id) {
    const auto dash = claim_id.find('-');
    if (dash == std::string::npos || dash == 0) return std::nullopt;
    return claim_id.substr(0, dash);
}

ServiceConfig ServiceConfig::from_json(const nlohmann::json& j, const fs::path& base_dir) {
    ServiceConfig c;
    if (j.contains("data_dir")) {
        fs::path p = j.at("data_dir").get<std::string>();
        c.data_dir = p.is_absolute() ? p : base_dir / p;
    }
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    if (j.contains("veracity")) c.veracity = VeracityConfig::from_json(j.at("veracity"));
    if (j.contains("llm")) {
        const auto& l = j.at("llm");
        const std::string key_var = l.value("api_key_env", std::string("DATACHECK_LLM_KEY"));
        if (l.contains("endpoint")) {
            LlmConfig lc;
            lc.endpoint = l.at("endpoint").get<std::string>();
            if (const char* key = std::getenv(key_var.c_str())) lc.api_key = key;
            lc.max_attempts = l.value("max_attempts", lc.max_attempts);
            c.llm = lc;
        }
    }
    if (!c.llm) c.llm = LlmConfig::from_env();
    return c;
}

ServiceConfig ServiceConfig::load(const fs::path& path) {
    const auto j = nlohmann::json::parse(read_file(path));
    return from_json(j, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

ojson session_to_json(const Session& s) {
    ojson j;
    j["id"] = s.id;
    j["revision"] = s.revision;
    j["text"] = s.text;
    j["dataset_id"] = s.dataset_id;
    j["parser"] = s.parser;
    ojson claims = ojson::array();
    for (const auto& c : s.claims) claims.push_back(claim_record_json(c));
    j["claims"] = std::move(claims);
    ojson diags = ojson::array();
    for (const auto& d : s.diagnostics) diags.push_back({{"code", d.code}, {"message", d.message}});
    j["diagnostics"] = std::move(diags);
    return j;
}

Session session_from_json(const nlohmann::json& j) {
    Session s;
    s.id = j.at("id").get<std::string>();
    s.revision = j.at("revision").get<std::uint64_t>();
    s.text = j.at("text").get<std::string>();
    s.dataset_id = j.at("dataset_id").get<std::string>();
    s.parser = j.at("parser").get<std::string>();
    for (const auto& cj : j.at("claims")) {
        SessionClaim c;
        auto& r = c.claim.record;
        r.id = cj.at("id").get<std::string>();
        r.text = cj.at("text").get<std::string>();
        r.span = {cj.at("span").at(0).get<std::size_t>(), cj.at("span").at(1).get<std::size_t>()};
        if (!cj.at("fact_type").is_null()) r.fact_type = fact_type_from_string(cj.at("fact_type").get<std::string>());
        if (!cj.at("spec_text").is_null()) r.spec = parse_spec_json(cj.at("spec_text").get<std::string>());
        if (!cj.at("dataset_id").is_null()) c.dataset_id = cj.at("dataset_id").get<std::string>();
        c.claim.result = result_from_json(cj.at("result"));
        r.verdict = c.claim.result.verdict;
        if (!cj.at("override").is_null()) {
            const auto& o = cj.at("override");
            c.override = VerdictOverride{verdict_from_string(o.at("verdict").get<std::string>()).value(),
                                         o.at("who").get<std::string>(), o.at("note").get<std::string>(),
                                         o.at("revision").get<std::uint64_t>()};
        }
        if (!cj.at("suggestion").is_null()) c.suggestion = cj.at("suggestion").get<std::string>();
        s.claims.push_back(std::move(c));
    }
    for (const auto& d : j.at("diagnostics"))
        s.diagnostics.push_back({d.at("code").get<std::string>(), d.at("message").get<std::string>()});
    return s;
}

Service::Service(ServiceConfig config) : config_(std::move(config)) {
    fs::create_directories(config_.data_dir / "datasets");
    fs::create_directories(config_.data_dir / "sessions");
    load();
}

void Service::load() {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(config_.data_dir / "datasets"))
        if (e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& p : files) {
        const std::string id = p.stem().string();
        const auto sidecar = nlohmann::json::parse(read_file(p.parent_path() / (id + ".schema.json")));
        Dataset ds = ingest_csv(read_file(p), sidecar.at("name").get<std::string>());
        ds.id = id;
        if (nlohmann::json(schema_json(ds)) != sidecar.at("schema"))
            throw std::runtime_error("dataset " + id + ": schema sidecar does not match the stored CSV");
        next_dataset_ = std::max(next_dataset_, numeric_suffix(id) + 1);
        datasets_[id] = std::make_shared<const Dataset>(std::move(ds));
        dataset_revision_ = std::max<std::uint64_t>(dataset_revision_, sidecar.value("revision", 0));
    }
    files.clear();
    for (const auto& e : fs::directory_iterator(config_.data_dir / "sessions"))
        if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& p : files) {
        Session s = session_from_json(nlohmann::json::parse(read_file(p)));
        next_session_ = std::max(next_session_, numeric_suffix(s.id) + 1);
        auto slot = std::make_shared<SessionSlot>();
        const std::string id = s.id;
        slot->snapshot = std::make_shared<const Session>(std::move(s));
        sessions_[id] = std::move(slot);
    }
}

void Service::persist_session(const Session& s) const {
    write_atomic(config_.data_dir / "sessions" / (s.id + ".json"), session_to_json(s).dump(1) + "\n");
}

void Service::persist_dataset(const Dataset& ds, std::string_view csv) const {
    const fs::path dir = config_.data_dir / "datasets";
    ojson side;
    side["name"] = ds.name;
    side["revision"] = dataset_revision_;
    side["schema"] = schema_json(ds);
    write_atomic(dir / (ds.id + ".csv"), csv);
    write_atomic(dir / (ds.id + ".schema.json"), side.dump(1) + "\n");
}

std::shared_ptr<const Dataset> Service::dataset(const std::string& id) const {
    std::shared_lock lk(lock_);
    auto it = datasets_.find(id);
    return it == datasets_.end() ? nullptr : it->second;
}

std::shared_ptr<Service::SessionSlot> Service::slot(const std::string& session_id) const {
    std::shared_lock lk(lock_);
    auto it = sessions_.find(session_id);
    return it == sessions_.end() ? nullptr : it->second;
}

std::shared_ptr<const Session> Service::snapshot(const std::string& session_id) const {
    auto s = slot(session_id);
    if (!s) return nullptr;
    std::shared_lock lk(lock_);
    return s->snapshot;
}

void Service::publish(SessionSlot& sl, Session next) {
    persist_session(next);
    auto snap = std::make_shared<const Session>(std::move(next));
    std::unique_lock lk(lock_);
    sl.snapshot = std::move(snap);
}

std::unique_ptr<ParserBackend> Service::backend_for(const std::string& parser) const {
    if (parser == "llm") {
        if (!config_.llm) return nullptr;
        return std::make_unique<LlmBackend>(*config_.llm);
    }
    return std::make_unique<TemplateBackend>();
}

ojson Service::claim_json(const Session& s, const SessionClaim& c) const {
    ojson j;
    const auto& r = c.claim.record;
    j["id"] = r.id;
    j["session_id"] = s.id;
    j["text"] = r.text;
    j["span"] = {r.span.begin, r.span.end};
    j["fact_type"] = r.fact_type ? ojson(std::string(to_string(*r.fact_type))) : ojson(nullptr);
    j["spec"] = r.spec ? spec_to_json(*r.spec) : ojson(nullptr);
    j["spec_text"] = r.spec ? ojson(serialize_spec(*r.spec)) : ojson(nullptr);
    j["dataset_id"] = c.dataset_id.value_or(s.dataset_id);
    j["verdict"] = std::string(to_string(effective_verdict(c)));
    j["model_verdict"] = std::string(to_string(c.claim.result.verdict));
    j["override"] = c.override ? override_json(*c.override) : ojson(nullptr);
    j["rectification"] = c.claim.result.rectification ? ojson(*c.claim.result.rectification) : ojson(nullptr);
    j["suggestion"] = c.suggestion ? ojson(*c.suggestion) : ojson(nullptr);
    j["result"] = result_to_json(c.claim.result);
    return j;
}

ojson Service::session_json(const Session& s) const {
    ojson j;
    j["session_id"] = s.id;
    j["revision"] = s.revision;
    j["text"] = s.text;
    j["dataset_id"] = s.dataset_id;
    j["parser"] = s.parser;
    ojson claims = ojson::array();
    for (const auto& c : s.claims) claims.push_back(claim_json(s, c));
    j["claims"] = std::move(claims);
    ojson diags = ojson::array();
    for (const auto& d : s.diagnostics) diags.push_back({{"code", d.code}, {"message", d.message}});
    j["diagnostics"] = std::move(diags);
    return j;
}

Response Service::upload_dataset(std::string_view csv, const std::string& name) {
    Dataset ds;
    try {
        ds = ingest_csv(csv, name);
    } catch (const IngestError& e) {
        Response r = error(400, std::string(e.kind_name()), e.what());
        r.body["line"] = e.line();
        std::shared_lock lk(lock_);
        r.body["revision"] = dataset_revision_;
        return r;
    }
    std::unique_lock lk(lock_);
    ds.id = "d" + std::to_string(next_dataset_++);
    ++dataset_revision_;
    persist_dataset(ds, csv);
    ojson body = dataset_json(ds);
    body["revision"] = dataset_revision_;
    const std::string id = ds.id;
    datasets_[id] = std::make_shared<const Dataset>(std::move(ds));
    return {201, std::move(body)};
}

Response Service::list_datasets() const {
    std::shared_lock lk(lock_);
    ojson list = ojson::array();
    for (const auto& [id, ds] : datasets_) list.push_back(dataset_json(*ds));
    return {200, {{"datasets", std::move(list)}, {"revision", dataset_revision_}}};
}

Response Service::get_dataset(const std::string& id) const {
    auto ds = dataset(id);
    std::shared_lock lk(lock_);
    if (!ds) {
        Response r = error(404, "UnknownDataset", "No dataset " + id + ".");
        r.body["revision"] = dataset_revision_;
        return r;
    }
    ojson body = dataset_json(*ds);
    body["revision"] = dataset_revision_;
    return {200, std::move(body)};
}

Response Service::create_session(const nlohmann::json& body) {
    auto with_rev = [&](Response r) {
        r.body["revision"] = 0;
        return r;
    };
    if (!body.is_object()) return with_rev(error(400, "BadRequest", "Expected a JSON object."));
    const std::string text = body.value("text", std::string());
    if (trim(text).empty()) return with_rev(error(422, "EmptyText", "The document text is empty."));
    if (!body.contains("dataset_id") || !body.at("dataset_id").is_string())
        return with_rev(error(422, "MissingDataset", "dataset_id is required."));
    const std::string dataset_id = body.at("dataset_id").get<std::string>();
    auto ds = dataset(dataset_id);
    if (!ds) return with_rev(error(404, "UnknownDataset", "No dataset " + dataset_id + "."));
    const std::string parser = body.value("parser", std::string("template"));
    if (parser != "template" && parser != "llm")
        return with_rev(error(422, "UnknownParser", "parser must be \"template\" or \"llm\"."));
    auto backend = backend_for(parser);
    if (!backend)
        return with_rev(error(503, "LlmUnavailable",
                              "The llm parser is not configured; set DATACHECK_LLM_ENDPOINT or the llm config section."));

    DocumentCheck check;
    try {
        check = check_document(text, ds.get(), *backend, config_.veracity);
    } catch (const ParseError& e) {
        return with_rev(error(502, std::string(e.kind_name()), e.what()));
    }

    Session s;
    {
        std::unique_lock lk(lock_);
        s.id = "s" + std::to_string(next_session_++);
    }
    s.text = text;
    s.dataset_id = dataset_id;
    s.parser = parser;
    s.diagnostics = std::move(check.diagnostics);
    for (auto& c : check.claims) {
        SessionClaim sc;
        sc.claim = std::move(c);
        sc.claim.record.id = s.id + "-" + sc.claim.record.id;
        s.claims.push_back(std::move(sc));
    }
    auto sl = std::make_shared<SessionSlot>();
    {
        std::lock_guard w(sl->write);
        persist_session(s);
        sl->snapshot = std::make_shared<const Session>(s);
    }
    {
        std::unique_lock lk(lock_);
        sessions_[s.id] = sl;
    }
    return {201, session_json(s)};
}

Response Service::get_session(const std::string& id) const {
    auto s = snapshot(id);
    if (!s) return error(404, "UnknownSession", "No session " + id + ".");
    return {200, session_json(*s)};
}

Response Service::get_claims(const std::string& id) const {
    auto s = snapshot(id);
    if (!s) return error(404, "UnknownSession", "No session " + id + ".");
    ojson list = ojson::array();
    for (const auto& c : s->claims) list.push_back(claim_json(*s, c));
    return {200, {{"session_id", s->id}, {"revision", s->revision}, {"claims", std::move(list)}}};
}

namespace {

const SessionClaim* find_claim(const Session& s, const std::string& claim_id) {
    for (const auto& c : s.claims)
        if (c.claim.record.id == claim_id) return &c;
    return nullptr;
}

}  // namespace

Response Service::get_claim(const std::string& claim_id) const {
    auto sid = session_of_claim(claim_id);
    auto s = sid ? snapshot(*sid) : nullptr;
    const SessionClaim* c = s ? find_claim(*s, claim_id) : nullptr;
    if (!c) return error(404, "UnknownClaim", "No claim " + claim_id + ".");
    ojson body = claim_json(*s, *c);
    body["revision"] = s->revision;
    return {200, std::move(body)};
}

Response Service::get_evidence(const std::string& claim_id, const std::string& form_text) const {
    auto sid = session_of_claim(claim_id);
    auto s = sid ? snapshot(*sid) : nullptr;
    const SessionClaim* c = s ? find_claim(*s, claim_id) : nullptr;
    if (!c) return error(404, "UnknownClaim", "No claim " + claim_id + ".");
    auto with_rev = [&](Response r) {
        r.body["revision"] = s->revision;
        return r;
    };
    auto form = evidence_form_from_string(form_text);
    if (!form) return with_rev(error(400, "BadForm", "form must be table, chart or both."));
    const auto& result = c->claim.result;
    if (result.verdict == Verdict::Unverifiable || !c->claim.record.spec)
        return with_rev(error(409, "Unverifiable", "Unverifiable claims have no evidence bundle."));
    auto ds = dataset(c->dataset_id.value_or(s->dataset_id));
    if (!ds) return with_rev(error(404, "UnknownDataset", "The claim's dataset is gone."));
    const FactSpec& spec = *c->claim.record.spec;
    const EvidenceSlice slice = retrieve(*ds, spec);
    const EvidenceBundle bundle = build_bundle(*ds, slice, spec, result, *form);
    ojson body;
    body["claim_id"] = claim_id;
    body["revision"] = s->revision;
    body["bundle"] = bundle_to_json(bundle);
    return {200, std::move(body)};
}

template <class Fn>
Response Service::mutate_claim(const std::string& claim_id, Fn&& fn) {
    auto sid = session_of_claim(claim_id);
    auto sl = sid ? slot(*sid) : nullptr;
    if (!sl) return error(404, "UnknownClaim", "No claim " + claim_id + ".");
    std::lock_guard w(sl->write);
    Session next = *sl->snapshot;
    auto it = std::find_if(next.claims.begin(), next.claims.end(),
                           [&](const SessionClaim& c) { return c.claim.record.id == claim_id; });
    if (it == next.claims.end()) return error(404, "UnknownClaim", "No claim " + claim_id + ".");
    Response r = fn(next, *it);
    if (r.status >= 400) {
        r.body["revision"] = next.revision;
        return r;
    }
    ++next.revision;
    if (r.body.is_null()) r.body = claim_json(next, *it);
    r.body["revision"] = next.revision;
    publish(*sl, std::move(next));
    return r;
}

Response Service::patch_spec(const std::string& claim_id, const nlohmann::json& fragment) {
    return mutate_claim(claim_id, [&](Session& s, SessionClaim& c) -> Response {
        if (!fragment.is_object()) return error(422, "InvalidPatch", "The patch must be a JSON object.");
        FactSpec spec;
        try {
            spec = c.claim.record.spec ? apply_spec_patch(*c.claim.record.spec, fragment) : spec_from_json(fragment);
        } catch (const std::exception& e) {
            return error(422, "InvalidPatch", e.what());
        }
        auto ds = dataset(c.dataset_id.value_or(s.dataset_id));
        const Verdict before = c.claim.result.verdict;
        c.claim.record.spec = spec;
        c.claim.record.fact_type = fact_type_of(spec);
        c.claim.result = verify_claim(c.claim.record, ds.get(), config_.veracity);
        c.claim.record.verdict = c.claim.result.verdict;
        c.suggestion.reset();
        if (c.claim.result.verdict != before && c.claim.result.verdict != Verdict::Unverifiable) {
            FactSpec shown = spec;
            if (c.claim.result.verdict == Verdict::Inaccurate && c.claim.result.rectification)
                shown = apply_rectification(spec, c.claim.result);
            c.suggestion = suggest_text(c.claim.record.text, shown);
        }
        return {200, nullptr};
    });
}

namespace {

/// Replaces the claim's span in the document and shifts the later spans.
void splice_claim(Session& s, SessionClaim& target, const std::string& new_text) {
    const CharSpan old = target.claim.record.span;
    s.text = s.text.substr(0, old.begin) + new_text + s.text.substr(old.end);
    const auto delta = static_cast<std::ptrdiff_t>(new_text.size()) - static_cast<std::ptrdiff_t>(old.end - old.begin);
    for (auto& c : s.claims) {
        auto& sp = c.claim.record.span;
        if (&c == &target) {
            sp.end = sp.begin + new_text.size();
        } else if (sp.begin >= old.end) {
            sp.begin = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(sp.begin) + delta);
            sp.end = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(sp.end) + delta);
        }
    }
    target.claim.record.text = new_text;
}

/// Rectifies one claim in place; returns a diagnostic when it cannot.
std::optional<Diagnostic> rectify_in(Session& s, SessionClaim& c, const Dataset* ds, const VeracityConfig& cfg) {
    const auto& result = c.claim.result;
    if (result.verdict != Verdict::Inaccurate || !result.rectification || !c.claim.record.spec)
        return Diagnostic{"NotRectifiable", "Only inaccurate claims with a rectification can be rectified."};
    const auto& span = c.claim.record.span;
    const std::string original = s.text.substr(span.begin, span.end - span.begin);
    const RectifyOutcome out = rectify(original, result);
    if (out.diagnostic) return out.diagnostic;
    const FactSpec fixed = apply_rectification(*c.claim.record.spec, result);
    splice_claim(s, c, out.text);
    c.claim.record.spec = fixed;
    c.claim.result = verify_claim(c.claim.record, ds, cfg);
    c.claim.record.verdict = c.claim.result.verdict;
    c.suggestion.reset();
    return std::nullopt;
}

}  // namespace

Response Service::rectify_claim(const std::string& claim_id) {
    return mutate_claim(claim_id, [&](Session& s, SessionClaim& c) -> Response {
        auto ds = dataset(c.dataset_id.value_or(s.dataset_id));
        if (auto d = rectify_in(s, c, ds.get(), config_.veracity)) {
            Response r = error(409, d->code, d->message);
            return r;
        }
        ojson body;
        body["claim_id"] = claim_id;
        body["revised_text"] = c.claim.record.text;
        body["document"] = s.text;
        body["claim"] = claim_json(s, c);
        return {200, std::move(body)};
    });
}

Response Service::rectify_all(const std::string& session_id) {
    auto sl = slot(session_id);
    if (!sl) return error(404, "UnknownSession", "No session " + session_id + ".");
    std::lock_guard w(sl->write);
    Session next = *sl->snapshot;
    std::vector<std::size_t> order(next.claims.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    // Right to left so earlier spans stay valid while splicing.
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return next.claims[a].claim.record.span.begin > next.claims[b].claim.record.span.begin;
    });
    ojson rectified = ojson::array();
    ojson skipped = ojson::array();
    for (std::size_t i : order) {
        auto& c = next.claims[i];
        if (c.claim.result.verdict != Verdict::Inaccurate) continue;
        auto ds = dataset(c.dataset_id.value_or(next.dataset_id));
        if (auto d = rectify_in(next, c, ds.get(), config_.veracity))
            skipped.push_back({{"claim_id", c.claim.record.id}, {"code", d->code}, {"message", d->message}});
        else
            rectified.push_back(c.claim.record.id);
    }
    std::reverse(rectified.begin(), rectified.end());
    std::reverse(skipped.begin(), skipped.end());
    if (!rectified.empty()) {
        ++next.revision;
        publish(*sl, next);
    }
    ojson body = session_json(next);
    body["rectified"] = std::move(rectified);
    body["skipped"] = std::move(skipped);
    return {200, std::move(body)};
}

Response Service::bind_dataset(const std::string& claim_id, const nlohmann::json& body) {
    return mutate_claim(claim_id, [&](Session& s, SessionClaim& c) -> Response {
        if (!body.is_object() || !body.contains("dataset_id") || !body.at("dataset_id").is_string())
            return error(422, "MissingDataset", "dataset_id is required.");
        const std::string id = body.at("dataset_id").get<std::string>();
        auto ds = dataset(id);
        if (!ds) return error(404, "UnknownDataset", "No dataset " + id + ".");
        if (!c.claim.record.spec) {
            auto backend = backend_for(s.parser);
            if (!backend) return error(503, "LlmUnavailable", "The llm parser is not configured.");
            try {
                c.claim.record.spec = backend->to_spec(c.claim.record.text, *ds);
                c.claim.record.fact_type = fact_type_of(*c.claim.record.spec);
            } catch (const ParseError& e) {
                c.dataset_id = id;
                VerificationResult r;
                r.verdict = Verdict::Unverifiable;
                r.explanation = e.what();
                r.diagnostics.push_back({std::string(e.kind_name()), e.what()});
                if (c.claim.record.fact_type) r.subtype = subtypes_of(*c.claim.record.fact_type).front();
                c.claim.result = r;
                c.claim.record.verdict = r.verdict;
                return {200, nullptr};
            }
        }
        c.dataset_id = id;
        c.claim.result = verify_claim(c.claim.record, ds.get(), config_.veracity);
        c.claim.record.verdict = c.claim.result.verdict;
        return {200, nullptr};
    });
}

Response Service::suitability(const std::string& claim_id, const std::string& dataset_id) const {
    auto sid = session_of_claim(claim_id);
    auto s = sid ? snapshot(*sid) : nullptr;
    const SessionClaim* c = s ? find_claim(*s, claim_id) : nullptr;
    if (!c) return error(404, "UnknownClaim", "No claim " + claim_id + ".");
    auto ds = dataset(dataset_id);
    if (!ds) {
        Response r = error(404, "UnknownDataset", "No dataset " + dataset_id + ".");
        r.body["revision"] = s->revision;
        return r;
    }
    // Spec attributes when the claim parsed, otherwise the words of the claim.
    std::vector<std::string> terms;
    if (c->claim.record.spec) {
        for (const auto& m : measures_of(*c->claim.record.spec)) terms.push_back(m);
        for (const auto& p : predicates_of(*c->claim.record.spec)) terms.push_back(p.attribute);
    }
    if (terms.empty()) terms = suitability_tokens(c->claim.record.text);
    ojson body;
    body["claim_id"] = claim_id;
    body["dataset_id"] = dataset_id;
    body["terms"] = terms;
    body["score"] = terms.empty() ? 0.0 : suitability_score(terms, *ds);
    body["revision"] = s->revision;
    return {200, std::move(body)};
}

Response Service::set_verdict(const std::string& claim_id, const nlohmann::json& body) {
    return mutate_claim(claim_id, [&](Session& s, SessionClaim& c) -> Response {
        if (!body.is_object() || !body.contains("verdict") || !body.at("verdict").is_string())
            return error(422, "InvalidVerdict", "verdict is required.");
        auto v = verdict_from_string(body.at("verdict").get<std::string>());
        if (!v) return error(422, "InvalidVerdict", "verdict must be accurate, inaccurate or unverifiable.");
        const std::string who = body.value("who", std::string("human"));
        if (who != "human" && who != "model") return error(422, "InvalidVerdict", "who must be human or model.");
        c.override = VerdictOverride{*v, who, body.value("note", std::string()), s.revision + 1};
        return {200, nullptr};
    });
}

Response Service::clear_verdict(const std::string& claim_id) {
    return mutate_claim(claim_id, [&](Session&, SessionClaim& c) -> Response {
        c.override.reset();
        return {200, nullptr};
    });
}

void Service::mount(httplib::Server& server) {
    auto send = [](httplib::Response& res, const Response& r) {
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    };
    auto parse_body = [](const httplib::Request& req, nlohmann::json& out) {
        try {
            out = req.body.empty() ? nlohmann::json::object() : nlohmann::json::parse(req.body);
            return true;
        } catch (const nlohmann::json::exception&) {
            return false;
        }
    };
    auto bad_json = [send](httplib::Response& res) {
        send(res, error(400, "BadJson", "The request body is not valid JSON."));
    };

    server.Post("/datasets", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, upload_dataset(req.body, query(req, "name").value_or("dataset")));
    });
    server.Get("/datasets", [this, send](const httplib::Request&, httplib::Response& res) { send(res, list_datasets()); });
    server.Get(R"(/datasets/([^/]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, get_dataset(req.matches[1]));
    });
    server.Post("/sessions", [=, this](const httplib::Request& req, httplib::Response& res) {
        nlohmann::json body;
        if (!parse_body(req, body)) return bad_json(res);
        send(res, create_session(body));
    });
    server.Get(R"(/sessions/([^/]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, get_session(req.matches[1]));
    });
    server.Get(R"(/sessions/([^/]+)/claims)", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, get_claims(req.matches[1]));
    });
    server.Post(R"(/sessions/([^/]+)/rectify-all)", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, rectify_all(req.matches[1]));
    });
    server.Get(R"(/claims/([^/]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, get_claim(req.matches[1]));
    });
    server.Get(R"(/claims/([^/]+)/evidence)", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, get_evidence(req.matches[1], query(req, "form").value_or("both")));
    });
    server.Patch(R"(/claims/([^/]+)/spec)", [=, this](const httplib::Request& req, httplib::Response& res) {
        nlohmann::json body;
        if (!parse_body(req, body)) return bad_json(res);
        send(res, patch_spec(req.matches[1], body));
    });
    server.Post(R"(/claims/([^/]+)/rectify)", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, rectify_claim(req.matches[1]));
    });
    server.Post(R"(/claims/([^/]+)/dataset)", [=, this](const httplib::Request& req, httplib::Response& res) {
        nlohmann::json body;
        if (!parse_body(req, body)) return bad_json(res);
        send(res, bind_dataset(req.matches[1], body));
    });
    server.Get(R"(/claims/([^/]+)/suitability)", [this, send](const httplib::Request& req, httplib::Response& res) {
        auto id = query(req, "dataset_id");
        if (!id) return send(res, error(422, "MissingDataset", "dataset_id is required."));
        send(res, suitability(req.matches[1], *id));
    });
    server.Put(R"(/claims/([^/]+)/verdict)", [=, this](const httplib::Request& req, httplib::Response& res) {
        nlohmann::json body;
        if (!parse_body(req, body)) return bad_json(res);
        send(res, set_verdict(req.matches[1], body));
    });
    server.Delete(R"(/claims/([^/]+)/verdict)", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, clear_verdict(req.matches[1]));
    });
    server.set_exception_handler([send](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        send(res, error(500, "Internal", what));
    });
}

bool Service::listen() {
    httplib::Server server;
    mount(server);
    return server.listen(config_.host, config_.port);
}

}  // namespace datacheck
