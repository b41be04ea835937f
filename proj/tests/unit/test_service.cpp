#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "httplib.h"

#include "datacheck/service.hpp"

using namespace datacheck;
namespace fs = std::filesystem;

namespace {

const char* kNbaDocument =
    "Nikola Jokic is ranked 4th in points among all players. "
    "Nikola Jokic has the highest assists among all centers. "
    "The average salary for all players is 40570773. "
    "The average rebounds for all players is 8.675.";

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class ServiceTest : public ::testing::Test {
protected:
    void SetUp() override {
        std::random_device rd;
        dir_ = fs::temp_directory_path() / ("datacheck-service-" + std::to_string(rd()));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    ServiceConfig config() const {
        ServiceConfig c;
        c.data_dir = dir_;
        c.llm.reset();
        return c;
    }

    std::string upload(Service& svc, const std::string& file) {
        Response r = svc.upload_dataset(slurp(fs::path(DATACHECK_FIXTURE_DIR) / file), fs::path(file).stem().string());
        EXPECT_EQ(r.status, 201) << r.body.dump();
        return r.body.at("dataset_id").get<std::string>();
    }

    /// Uploads both NBA tables and opens a session on the NBA document.
    std::string nba_session(Service& svc) {
        players_ = upload(svc, "nba_players.csv");
        salaries_ = upload(svc, "nba_salaries.csv");
        Response r = svc.create_session({{"text", kNbaDocument}, {"dataset_id", players_}});
        EXPECT_EQ(r.status, 201) << r.body.dump();
        return r.body.at("session_id").get<std::string>();
    }

    static std::string claim_id(const Response& session, std::size_t i) {
        return session.body.at("claims").at(i).at("id").get<std::string>();
    }

    fs::path dir_;
    std::string players_, salaries_;
};

}  // namespace

TEST_F(ServiceTest, NbaSessionVerdicts) {
    Service svc(config());
    const std::string sid = nba_session(svc);
    Response s = svc.get_session(sid);
    ASSERT_EQ(s.status, 200);
    const auto& claims = s.body.at("claims");
    ASSERT_EQ(claims.size(), 4u);
    EXPECT_EQ(claims[0].at("verdict"), "inaccurate");
    EXPECT_EQ(claims[1].at("verdict"), "inaccurate");
    EXPECT_EQ(claims[2].at("verdict"), "unverifiable");
    EXPECT_EQ(claims[3].at("verdict"), "accurate");
    EXPECT_EQ(claims[0].at("span"), nlohmann::json::array({0, 55}));
    EXPECT_EQ(s.body.at("revision"), 1);
    EXPECT_EQ(claims[2].at("result").at("diagnostics").at(0).at("code"), "UnresolvedAttribute");
}

TEST_F(ServiceTest, RectifyRewritesDocument) {
    Service svc(config());
    const std::string sid = nba_session(svc);
    const std::string c1 = claim_id(svc.get_session(sid), 0);
    Response r = svc.rectify_claim(c1);
    ASSERT_EQ(r.status, 200) << r.body.dump();
    const std::string revised = r.body.at("revised_text");
    EXPECT_NE(revised.find("8th"), std::string::npos);
    const std::string doc = r.body.at("document");
    EXPECT_EQ(doc.rfind(revised, 0), 0u);
    EXPECT_EQ(r.body.at("claim").at("verdict"), "accurate");
    EXPECT_EQ(r.body.at("revision"), 2);
    EXPECT_EQ(svc.get_session(sid).body.at("text"), doc);

    // Rectifying again has nothing to do.
    Response again = svc.rectify_claim(c1);
    EXPECT_EQ(again.status, 409);
    EXPECT_EQ(again.body.at("revision"), 2);
}

TEST_F(ServiceTest, PatchSubspaceFlipsVerdict) {
    Service svc(config());
    const std::string sid = nba_session(svc);
    const std::string c2 = claim_id(svc.get_session(sid), 1);
    nlohmann::json patch = nlohmann::json::parse(R"({"subspace":[{"attribute":"position","op":"=","value":"C"}]})");
    Response r = svc.patch_spec(c2, patch);
    ASSERT_EQ(r.status, 200) << r.body.dump();
    EXPECT_EQ(r.body.at("verdict"), "accurate");
    EXPECT_EQ(r.body.at("revision"), 2);
    EXPECT_TRUE(r.body.at("suggestion").is_string());
    EXPECT_EQ(r.body.at("spec").at("subspace").size(), 1u);

    Response bad = svc.patch_spec(c2, nlohmann::json::parse(R"({"subspace":[{"attribute":"position","op":"~"}]})"));
    EXPECT_EQ(bad.status, 422);
    EXPECT_EQ(bad.body.at("error"), "InvalidPatch");
    EXPECT_EQ(bad.body.at("revision"), 2);
}

TEST_F(ServiceTest, BindingIsClaimLocal) {
    Service svc(config());
    const std::string sid = nba_session(svc);
    const Response before = svc.get_session(sid);
    const std::string c3 = claim_id(before, 2);
    Response r = svc.bind_dataset(c3, {{"dataset_id", salaries_}});
    ASSERT_EQ(r.status, 200) << r.body.dump();
    EXPECT_EQ(r.body.at("verdict"), "accurate");
    EXPECT_EQ(r.body.at("dataset_id"), salaries_);

    const Response after = svc.get_session(sid);
    EXPECT_EQ(after.body.at("dataset_id"), players_);
    for (std::size_t i : {0u, 1u, 3u}) {
        EXPECT_EQ(after.body.at("claims")[i].at("dataset_id"), players_);
        EXPECT_EQ(after.body.at("claims")[i].at("verdict"), before.body.at("claims")[i].at("verdict"));
    }

    EXPECT_EQ(svc.bind_dataset(c3, nlohmann::json::object()).status, 422);
    EXPECT_EQ(svc.bind_dataset(c3, {{"dataset_id", "d99"}}).status, 404);
}

TEST_F(ServiceTest, RectifyAllIsIdempotent) {
    Service svc(config());
    const std::string sid = nba_session(svc);
    Response first = svc.rectify_all(sid);
    ASSERT_EQ(first.status, 200);
    ASSERT_EQ(first.body.at("rectified").size(), 1u);
    EXPECT_EQ(first.body.at("rectified")[0], first.body.at("claims")[0].at("id"));
    // Extreme claims carry no rectification.
    ASSERT_EQ(first.body.at("skipped").size(), 1u);
    EXPECT_EQ(first.body.at("skipped")[0].at("code"), "NotRectifiable");
    EXPECT_EQ(first.body.at("revision"), 2);
    EXPECT_EQ(first.body.at("claims")[0].at("verdict"), "accurate");

    Response second = svc.rectify_all(sid);
    EXPECT_TRUE(second.body.at("rectified").empty());
    EXPECT_EQ(second.body.at("revision"), 2);
    EXPECT_EQ(second.body.at("text"), first.body.at("text"));
}

TEST_F(ServiceTest, RestartReproducesState) {
    std::string sid, before_session, before_claims, datasets;
    {
        Service svc(config());
        sid = nba_session(svc);
        const std::string c2 = claim_id(svc.get_session(sid), 1);
        svc.rectify_claim(claim_id(svc.get_session(sid), 0));
        svc.bind_dataset(claim_id(svc.get_session(sid), 2), {{"dataset_id", salaries_}});
        svc.set_verdict(c2, {{"verdict", "accurate"}, {"who", "human"}, {"note", "checked by hand"}});
        before_session = svc.get_session(sid).body.dump();
        before_claims = svc.get_claims(sid).body.dump();
        datasets = svc.list_datasets().body.dump();
    }
    Service svc(config());
    EXPECT_EQ(svc.get_session(sid).body.dump(), before_session);
    EXPECT_EQ(svc.get_claims(sid).body.dump(), before_claims);
    EXPECT_EQ(svc.list_datasets().body.dump(), datasets);

    // New ids continue after the reloaded ones.
    Response s2 = svc.create_session({{"text", kNbaDocument}, {"dataset_id", players_}});
    EXPECT_NE(s2.body.at("session_id"), sid);
}

TEST_F(ServiceTest, VerdictOverride) {
    Service svc(config());
    const std::string sid = nba_session(svc);
    const std::string c1 = claim_id(svc.get_session(sid), 0);
    Response r = svc.set_verdict(c1, {{"verdict", "accurate"}, {"note", "source is newer"}});
    ASSERT_EQ(r.status, 200);
    EXPECT_EQ(r.body.at("verdict"), "accurate");
    EXPECT_EQ(r.body.at("model_verdict"), "inaccurate");
    EXPECT_EQ(r.body.at("override").at("who"), "human");
    EXPECT_EQ(svc.set_verdict(c1, {{"verdict", "maybe"}}).status, 422);
    EXPECT_EQ(svc.set_verdict(c1, {{"verdict", "accurate"}, {"who", "robot"}}).status, 422);

    Response cleared = svc.clear_verdict(c1);
    EXPECT_EQ(cleared.body.at("verdict"), "inaccurate");
    EXPECT_TRUE(cleared.body.at("override").is_null());
    EXPECT_EQ(cleared.body.at("revision"), 3);
}

TEST_F(ServiceTest, EvidenceForms) {
    Service svc(config());
    const std::string sid = nba_session(svc);
    const Response s = svc.get_session(sid);
    Response ev = svc.get_evidence(claim_id(s, 0), "both");
    ASSERT_EQ(ev.status, 200) << ev.body.dump();
    EXPECT_TRUE(ev.body.at("bundle").contains("table"));
    EXPECT_TRUE(ev.body.at("bundle").contains("chart"));
    EXPECT_EQ(ev.body.at("revision"), 1);
    EXPECT_EQ(svc.get_evidence(claim_id(s, 0), "poster").status, 400);
    Response unv = svc.get_evidence(claim_id(s, 2), "table");
    EXPECT_EQ(unv.status, 409);
    EXPECT_EQ(unv.body.at("error"), "Unverifiable");
}

TEST_F(ServiceTest, StatusCodes) {
    Service svc(config());
    const std::string players = upload(svc, "nba_players.csv");
    EXPECT_EQ(svc.create_session({{"text", "   "}, {"dataset_id", players}}).status, 422);
    EXPECT_EQ(svc.create_session({{"text", kNbaDocument}}).status, 422);
    EXPECT_EQ(svc.create_session({{"text", kNbaDocument}, {"dataset_id", "d42"}}).status, 404);
    EXPECT_EQ(svc.create_session({{"text", kNbaDocument}, {"dataset_id", players}, {"parser", "llm"}}).status, 503);
    EXPECT_EQ(svc.create_session({{"text", kNbaDocument}, {"dataset_id", players}, {"parser", "magic"}}).status, 422);
    EXPECT_EQ(svc.get_session("s404").status, 404);
    EXPECT_EQ(svc.get_claims("s404").status, 404);
    EXPECT_EQ(svc.get_claim("s404-claim-1").status, 404);
    EXPECT_EQ(svc.get_dataset("d404").status, 404);
    EXPECT_EQ(svc.rectify_all("s404").status, 404);
    EXPECT_EQ(svc.upload_dataset("a,b\n1,2\n3\n", "ragged").status, 400);

    Response s = svc.create_session({{"text", kNbaDocument}, {"dataset_id", players}});
    Response accurate = svc.rectify_claim(claim_id(s, 3));
    EXPECT_EQ(accurate.status, 409);
    EXPECT_EQ(accurate.body.at("error"), "NotRectifiable");
    EXPECT_EQ(accurate.body.at("revision"), 1);
}

TEST_F(ServiceTest, SuitabilityOfMatchingDataset) {
    Service svc(config());
    const std::string sid = nba_session(svc);
    const std::string c4 = claim_id(svc.get_session(sid), 3);
    Response up = svc.upload_dataset("rebounds\n1\n2\n", "rebounds_only");
    ASSERT_EQ(up.status, 201);
    Response r = svc.suitability(c4, up.body.at("dataset_id"));
    ASSERT_EQ(r.status, 200);
    EXPECT_DOUBLE_EQ(r.body.at("score").get<double>(), 1.0);

    Response other = svc.suitability(c4, salaries_);
    EXPECT_LT(other.body.at("score").get<double>(), 1.0);
    EXPECT_EQ(svc.suitability(c4, "d404").status, 404);
}

TEST_F(ServiceTest, ConfigFromJson) {
    auto c = ServiceConfig::from_json(nlohmann::json::parse(R"({"host":"0.0.0.0","port":9000,"data_dir":"state"})"),
                                      "/srv/app");
    EXPECT_EQ(c.host, "0.0.0.0");
    EXPECT_EQ(c.port, 9000);
    EXPECT_EQ(c.data_dir, fs::path("/srv/app/state"));
}

TEST_F(ServiceTest, HttpRoundTrip) {
    Service svc(config());
    httplib::Server server;
    svc.mount(server);
    const int port = server.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    httplib::Client cli("127.0.0.1", port);
    auto up = cli.Post("/datasets?name=nba_players", slurp(fs::path(DATACHECK_FIXTURE_DIR) / "nba_players.csv"),
                       "text/csv");
    ASSERT_TRUE(up);
    EXPECT_EQ(up->status, 201);
    const std::string ds = nlohmann::json::parse(up->body).at("dataset_id");

    auto bad = cli.Post("/sessions", "{not json", "application/json");
    ASSERT_TRUE(bad);
    EXPECT_EQ(bad->status, 400);

    nlohmann::json req = {{"text", kNbaDocument}, {"dataset_id", ds}};
    auto created = cli.Post("/sessions", req.dump(), "application/json");
    ASSERT_TRUE(created);
    ASSERT_EQ(created->status, 201);
    const auto session = nlohmann::json::parse(created->body);
    const std::string c1 = session.at("claims")[0].at("id");

    auto claim = cli.Get("/claims/" + c1);
    ASSERT_TRUE(claim);
    EXPECT_EQ(nlohmann::json::parse(claim->body).at("verdict"), "inaccurate");

    auto ev = cli.Get("/claims/" + c1 + "/evidence?form=table");
    ASSERT_TRUE(ev);
    EXPECT_EQ(ev->status, 200);

    auto fix = cli.Post("/claims/" + c1 + "/rectify", "", "application/json");
    ASSERT_TRUE(fix);
    EXPECT_EQ(fix->status, 200);

    auto put = cli.Put("/claims/" + c1 + "/verdict", R"({"verdict":"unverifiable"})", "application/json");
    ASSERT_TRUE(put);
    EXPECT_EQ(nlohmann::json::parse(put->body).at("verdict"), "unverifiable");
    auto del = cli.Delete("/claims/" + c1 + "/verdict");
    ASSERT_TRUE(del);
    EXPECT_EQ(nlohmann::json::parse(del->body).at("verdict"), "accurate");

    auto suit = cli.Get("/claims/" + c1 + "/suitability");
    ASSERT_TRUE(suit);
    EXPECT_EQ(suit->status, 422);

    auto missing = cli.Get("/sessions/s999");
    ASSERT_TRUE(missing);
    EXPECT_EQ(missing->status, 404);

    server.stop();
    th.join();
}
