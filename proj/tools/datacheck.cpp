#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "datacheck/corpus.hpp"
#include "datacheck/evidence.hpp"
#include "datacheck/pipeline.hpp"
#include "datacheck/service.hpp"

namespace {

using namespace datacheck;

enum ExitCode { kOk = 0, kInaccurate = 1, kUnverifiable = 2, kOperational = 3 };

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path);
}

Dataset load_dataset(const std::string& path) {
    std::string name = std::filesystem::path(path).stem().string();
    Dataset ds = ingest_csv(read_file(path), name);
    ds.id = name;
    return ds;
}

std::string verdict_line(const CheckedClaim& c) {
    std::string upper(to_string(c.result.verdict));
    for (auto& ch : upper) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    std::ostringstream os;
    os << "[" << upper << "] " << c.record.id << " (" << c.record.span.begin << "-" << c.record.span.end
       << "): " << c.record.text;
    if (!c.result.explanation.empty()) os << "\n    " << c.result.explanation;
    if (c.result.rectification) os << "\n    rectification: " << *c.result.rectification;
    return os.str();
}

int run_verify(const std::string& dataset_path, const std::string& text_path, const std::string& json_out) {
    const Dataset ds = load_dataset(dataset_path);
    const std::string text = read_file(text_path);
    TemplateBackend backend;
    const DocumentCheck check = check_document(text, &ds, backend);
    for (const auto& c : check.claims) std::cout << verdict_line(c) << "\n";
    for (const auto& d : check.diagnostics) std::cerr << "note: " << d.code << ": " << d.message << "\n";
    const int code = exit_code_for(check.claims);
    if (!json_out.empty()) {
        nlohmann::ordered_json report;
        report["dataset"] = ds.name;
        nlohmann::ordered_json claims = nlohmann::ordered_json::array();
        for (const auto& c : check.claims) claims.push_back(claim_to_json(c));
        report["claims"] = std::move(claims);
        nlohmann::ordered_json diags = nlohmann::ordered_json::array();
        for (const auto& d : check.diagnostics) diags.push_back({{"code", d.code}, {"message", d.message}});
        report["diagnostics"] = std::move(diags);
        report["exit_code"] = code;
        write_file(json_out, report.dump(2) + "\n");
    }
    return code;
}

int run_gen_corpus(const std::string& dataset_path, std::size_t per_type, std::uint64_t seed, const std::string& out) {
    const Dataset ds = load_dataset(dataset_path);
    const auto corpus = generate_corpus(ds, per_type, seed);
    std::cerr << coverage_summary(corpus);
    write_file(out, write_corpus_jsonl(corpus));
    return kOk;
}

int run_eval_parser(const std::string& backend_name, const std::string& corpus_path, const std::string& dataset_path,
                    bool json) {
    const Dataset ds = load_dataset(dataset_path);
    const auto corpus = read_corpus_jsonl(read_file(corpus_path));
    std::unique_ptr<ParserBackend> backend;
    if (backend_name == "llm") {
        auto cfg = LlmConfig::from_env();
        if (!cfg) throw IoError("the llm backend needs DATACHECK_LLM_ENDPOINT");
        backend = std::make_unique<LlmBackend>(*cfg);
    } else {
        backend = std::make_unique<TemplateBackend>();
    }
    const ParserReport report = eval_parser(*backend, corpus, ds);
    std::cout << (json ? report.to_json().dump(2) + "\n" : report.to_text());
    return kOk;
}

int run_evidence(const std::string& spec_path, const std::string& dataset_path, const std::string& form_text) {
    const Dataset ds = load_dataset(dataset_path);
    const FactSpec spec = parse_spec_json(read_file(spec_path));
    const auto form = evidence_form_from_string(form_text);
    if (!form) throw IoError("unknown form " + form_text);
    const VerificationResult result = verify(ds, spec);
    if (result.verdict == Verdict::Unverifiable) {
        std::cerr << "unverifiable: " << result.explanation << "\n";
        return kUnverifiable;
    }
    const EvidenceSlice slice = retrieve(ds, spec);
    std::cout << bundle_to_json(build_bundle(ds, slice, spec, result, *form)).dump(2) << "\n";
    return result.verdict == Verdict::Inaccurate ? kInaccurate : kOk;
}

int run_serve(const std::string& config_path) {
    Service service(ServiceConfig::load(config_path));
    std::cerr << "listening on " << service.config().host << ":" << service.config().port << "\n";
    return service.listen() ? kOk : kOperational;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Checks data claims in text against tabular datasets."};
    app.require_subcommand(1);

    std::string dataset, text, json_out, corpus, out, backend = "template", spec, form = "both", config;
    std::size_t per_type = 40;
    std::uint64_t seed = 7;
    bool json = false;

    auto* verify_cmd = app.add_subcommand("verify", "Verify every claim in a document");
    verify_cmd->add_option("--dataset", dataset, "CSV dataset")->required();
    verify_cmd->add_option("--text", text, "Document text file")->required();
    verify_cmd->add_option("--json", json_out, "Write a machine-readable report here");

    auto* gen_cmd = app.add_subcommand("gen-corpus", "Generate a labelled claim corpus");
    gen_cmd->add_option("--dataset", dataset, "CSV dataset")->required();
    gen_cmd->add_option("--per-type", per_type, "Entries per fact type");
    gen_cmd->add_option("--seed", seed, "Generator seed");
    gen_cmd->add_option("--out", out, "Output JSONL")->required();

    auto* eval_cmd = app.add_subcommand("eval-parser", "Score a parser backend on a corpus");
    eval_cmd->add_option("--backend", backend, "template or llm")->check(CLI::IsMember({"template", "llm"}));
    eval_cmd->add_option("--corpus", corpus, "Corpus JSONL")->required();
    eval_cmd->add_option("--dataset", dataset, "CSV dataset")->required();
    eval_cmd->add_flag("--json", json, "JSON report instead of tables");

    auto* ev_cmd = app.add_subcommand("evidence", "Build the evidence bundle for one spec");
    ev_cmd->add_option("--claim-spec", spec, "Spec JSON file")->required();
    ev_cmd->add_option("--dataset", dataset, "CSV dataset")->required();
    ev_cmd->add_option("--form", form, "table, chart or both");

    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
    serve_cmd->add_option("--config", config, "Config JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kOperational;
    }

    try {
        if (*verify_cmd) return run_verify(dataset, text, json_out);
        if (*gen_cmd) return run_gen_corpus(dataset, per_type, seed, out);
        if (*eval_cmd) return run_eval_parser(backend, corpus, dataset, json);
        if (*ev_cmd) return run_evidence(spec, dataset, form);
        if (*serve_cmd) return run_serve(config);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kOperational;
    }
    return kOperational;
}
