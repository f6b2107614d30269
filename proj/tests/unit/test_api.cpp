// Copyright 2026 The Custody Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <thread>

#include "httplib.h"

#include "api_harness.hpp"
#include "custody/case_ledger.hpp"
#include "custody/detection.hpp"
#include "custody/encoding.hpp"
#include "custody/http_server.hpp"
#include "custody/media.hpp"

using namespace custody;
using harness::World;
using nlohmann::json;

namespace {

std::string pnm_noise(std::uint32_t seed, std::size_t side = 32) {
    const auto img = detect::generate_item({1, seed, side / 2}, detect::Upsampler::none, 0);
    return as_string(media::encode_pnm(img));
}

std::string wav_noise(std::size_t n, std::uint32_t seed) {
    features::Waveform w;
    std::mt19937 rng(seed);
    std::normal_distribution<double> g(0.0, 0.2);
    w.samples.resize(n);
    for (auto& s : w.samples) s = g(rng);
    return as_string(media::encode_wav_pcm16(w));
}

std::string fill(const std::string& pattern, const std::string& hash, const std::string& case_id) {
    std::string p = pattern;
    auto sub = [&](const std::string& key, const std::string& v) {
        if (auto at = p.find(key); at != std::string::npos) p.replace(at, key.size(), v);
    };
    sub("{hash}", hash);
    sub("{id}", case_id);
    sub("{name}", "nobody");
    return p;
}

}  // namespace

TEST(Policy, TableIsCompleteAndValid) {
    std::vector<std::string> ids;
    for (const auto& r : api::route_table()) ids.push_back(r.id);
    EXPECT_NO_THROW(api::validate_policy(api::route_table(), ids));
    auto missing = ids;
    missing.pop_back();
    EXPECT_THROW(api::validate_policy(api::route_table(), missing), Error);
    auto extra = ids;
    extra.push_back("shadow_route");
    EXPECT_THROW(api::validate_policy(api::route_table(), extra), Error);
    auto dup = api::route_table();
    dup.push_back(dup.front());
    EXPECT_THROW(api::validate_policy(dup, ids), Error);
}

TEST(Policy, DocumentationListsEveryRoute) {
    const auto doc = harness::read_policy_doc(std::string(CUSTODY_DOCS_DIR) + "/api.md");
    ASSERT_EQ(doc.roles.size(), 4u);
    ASSERT_EQ(doc.rows.size(), api::route_table().size());
    for (std::size_t i = 0; i < doc.rows.size(); ++i) {
        const auto& spec = api::route_table()[i];
        EXPECT_EQ(doc.rows[i].id, spec.id);
        EXPECT_EQ(doc.rows[i].method, spec.method);
        EXPECT_EQ(doc.rows[i].path, spec.pattern);
    }
}

// Every role against every route, judged only by the documented table and the
// live responses.
TEST(Policy, LiveMatrixMatchesDocumentation) {
    World w;
    const auto doc = harness::read_policy_doc(std::string(CUSTODY_DOCS_DIR) + "/api.md");
    const auto reg = w.register_bytes("matrix evidence");
    ASSERT_EQ(reg.status, 201);
    const auto cs = w.call("POST", "/cases", "ann", json{{"title", "matrix"}}.dump());
    ASSERT_EQ(cs.status, 201);
    const std::string hash = std::string(64, 'e');  // unknown: handlers reject, gate decides first
    const std::string case_id = cs.body.at("id").get<std::string>();

    std::size_t checked = 0;
    for (const auto& row : doc.rows) {
        const std::string path = fill(row.path, hash, case_id);
        for (std::size_t k = 0; k < doc.roles.size(); ++k) {
            const auto role = identity::parse_user_role(doc.roles[k]);
            const std::string user = harness::role_users().at(role);
            const auto r = w.call(row.method, path, user);
            const std::string& cell = row.cells[k];
            if (cell == "deny") {
                EXPECT_TRUE(harness::role_policy_denial(r)) << row.id << " as " << doc.roles[k] << " -> " << r.status;
            } else {
                EXPECT_FALSE(harness::role_policy_denial(r)) << row.id << " as " << doc.roles[k];
                EXPECT_NE(r.status, 401) << row.id;
            }
            ++checked;
        }
        if (row.cells[0] == "public") {
            EXPECT_NE(w.call(row.method, path).status, 401) << row.id;
        } else {
            const auto anon = w.call(row.method, path);
            EXPECT_EQ(anon.status, 401) << row.id;
            EXPECT_EQ(anon.body["code"], "InvalidSignature");
        }
    }
    EXPECT_EQ(checked, api::route_table().size() * 4);
}

TEST(Routing, UnknownPathAndWrongMethod) {
    World w;
    const auto nf = w.call("GET", "/nope", "ann");
    EXPECT_EQ(nf.status, 404);
    EXPECT_EQ(nf.body["code"], "NotFound");
    const auto wm = w.call("DELETE", "/health");
    EXPECT_EQ(wm.status, 405);
    EXPECT_TRUE(wm.body.contains("message"));
    EXPECT_TRUE(wm.body.contains("detail"));
}

TEST(Auth, LoginFailuresAndTokenChecks) {
    World w;
    EXPECT_EQ(w.call("POST", "/auth/login", {}, json{{"username", "ann"}, {"password", "bad"}}.dump()).status, 401);
    EXPECT_EQ(w.call("POST", "/auth/login", {}, "{not json").status, 422);
    EXPECT_EQ(w.call("POST", "/auth/login", {}, json{{"username", "ann"}}.dump()).status, 422);

    const auto me = w.call("GET", "/auth/me", "ann");
    EXPECT_EQ(me.status, 200);
    EXPECT_EQ(me.body["id"], "principal:ann");
    EXPECT_EQ(me.body["role"], "FORENSIC_ANALYST");

    w.tokens["forged"] = w.tokens["ann"] + "x";
    EXPECT_EQ(w.call("GET", "/auth/me", "forged").status, 401);
    w.now += 3601;
    const auto exp = w.call("GET", "/auth/me", "ann");
    EXPECT_EQ(exp.status, 401);
    EXPECT_EQ(exp.body["code"], "Expired");
}

TEST(Evidence, RegisterDuplicateVerifyFlow) {
    World w;
    const std::string bytes = pnm_noise(1);
    const auto det = w.call("POST", "/detect/image", "ann", bytes);
    ASSERT_EQ(det.status, 200);

    const auto reg = w.register_bytes(bytes, "image");
    ASSERT_EQ(reg.status, 201) << reg.body.dump();
    const std::string hash = content::sha256(as_bytes(bytes)).hex();
    EXPECT_EQ(reg.body["content_hash"], hash);
    EXPECT_EQ(reg.body["cid"], content::derive_cid(as_bytes(bytes)).text());
    EXPECT_EQ(reg.body["verified"], false);
    EXPECT_EQ(reg.body["evidence_type"], "image");
    EXPECT_EQ(reg.body["tx_hash"], reg.body["register_tx"]);
    ASSERT_EQ(reg.body["detections"].size(), 1u);
    EXPECT_EQ(reg.body["detections"][0]["id"], det.body["id"]);

    const std::string root = w.state_root();
    const auto dup = w.register_bytes(bytes, "image");
    EXPECT_EQ(dup.status, 409);
    EXPECT_EQ(dup.body["code"], "DuplicateEvidence");
    EXPECT_EQ(dup.body["detail"]["registered_at"], reg.body["registered_at"]);
    EXPECT_EQ(dup.body["detail"]["tx_hash"], reg.body["tx_hash"]);
    EXPECT_EQ(w.state_root(), root);

    const auto got = w.call("GET", "/evidence/" + hash, "lee");
    EXPECT_EQ(got.status, 200);
    EXPECT_EQ(got.body["content_hash"], hash);
    const auto content = w.call("GET", "/evidence/" + hash + "/content", "root");
    EXPECT_EQ(content.status, 200);
    EXPECT_EQ(content.content_type, "application/octet-stream");
    EXPECT_EQ(content.raw.value(), bytes);

    ++w.now;
    const auto ver = w.call("POST", "/evidence/" + hash + "/verify", "lee");
    ASSERT_EQ(ver.status, 200);
    EXPECT_EQ(ver.body["verified"], true);
    EXPECT_EQ(ver.body["verifier"], identity::chain_address_for("principal:lee").hex());
    EXPECT_FALSE(ver.body["verify_tx"].is_null());
    const auto again = w.call("POST", "/evidence/" + hash + "/verify", "lee");
    EXPECT_EQ(again.status, 409);
    EXPECT_EQ(again.body["code"], "AlreadyVerified");
}

TEST(Evidence, FailedRequestsLeaveStateRootAlone) {
    World w;
    ASSERT_EQ(w.register_bytes("kept").status, 201);
    const std::string root = w.state_root();
    const std::string unknown = content::sha256(std::string_view("never registered")).hex();
    for (int i = 0; i < 3; ++i) {
        EXPECT_EQ(w.call("POST", "/evidence/" + unknown + "/verify", "lee").status, 404);
        EXPECT_EQ(w.register_bytes("kept").status, 409);
        EXPECT_EQ(w.call("POST", "/evidence/register", "ann", "x", {{"type", "hologram"}}).status, 422);
        EXPECT_EQ(w.call("POST", "/evidence/register", "ann", "x").status, 422);
        EXPECT_EQ(w.call("POST", "/evidence/register", "lee", "x", {{"type", "image"}}).status, 403);
        EXPECT_EQ(w.call("POST", "/evidence/zz/verify", "lee").status, 422);
        EXPECT_EQ(w.state_root(), root);
    }
}

TEST(Evidence, ListFiltersAndPaging) {
    World w;
    for (int i = 0; i < 5; ++i) ASSERT_EQ(w.register_bytes("doc " + std::to_string(i)).status, 201);
    ASSERT_EQ(w.register_bytes(pnm_noise(3), "image").status, 201);
    const auto all = w.call("GET", "/evidence", "lee");
    EXPECT_EQ(all.body["total"], 6);
    EXPECT_EQ(all.body["limit"], 100);
    const auto page = w.call("GET", "/evidence", "lee", {}, {{"offset", "2"}, {"limit", "2"}});
    EXPECT_EQ(page.body["items"].size(), 2u);
    EXPECT_EQ(page.body["items"][0], all.body["items"][2]);
    EXPECT_EQ(w.call("GET", "/evidence", "lee", {}, {{"type", "image"}}).body["total"], 1);
    EXPECT_EQ(w.call("GET", "/evidence", "lee", {}, {{"verified", "true"}}).body["total"], 0);
    EXPECT_EQ(w.call("GET", "/evidence", "lee", {}, {{"limit", "5000"}}).body["limit"], 1000);
    EXPECT_EQ(w.call("GET", "/evidence", "lee", {}, {{"verified", "maybe"}}).status, 422);
    EXPECT_EQ(w.call("GET", "/evidence", "lee", {}, {{"offset", "-1"}}).status, 422);
}

TEST(Detect, CaseworkFlagAndMediaErrors) {
    World w;
    const std::string img = pnm_noise(4);
    const auto pat = w.call("POST", "/detect/image", "pat", img);
    ASSERT_EQ(pat.status, 200);
    EXPECT_EQ(pat.body["casework"], false);
    const auto ann = w.call("POST", "/detect/image", "ann", img);
    EXPECT_EQ(ann.body["casework"], true);
    const auto aud = w.call("POST", "/detect/audio", "pat", wav_noise(16000, 1));
    EXPECT_EQ(aud.status, 200);
    EXPECT_EQ(aud.body["modality"], "audio");

    const auto wrong = w.call("POST", "/detect/image", "ann", wav_noise(16000, 1));
    EXPECT_EQ(wrong.status, 415);
    EXPECT_EQ(wrong.body["code"], "UnsupportedMedia");
    EXPECT_EQ(w.call("POST", "/detect/audio", "ann", wav_noise(100, 1)).status, 422);
    EXPECT_EQ(w.call("POST", "/detect/image", "ann", "").status, 422);
    EXPECT_EQ(w.call("POST", "/detect/video", "ann", "P5\n2 2\n255\n").status, 422);
}

TEST(Detect, UploadCap) {
    World w(4096);
    const auto big = w.register_bytes(std::string(5000, 'x'));
    EXPECT_EQ(big.status, 413);
    EXPECT_EQ(big.body["code"], "PayloadTooLarge");
    EXPECT_EQ(w.register_bytes(std::string(4096, 'x')).status, 201);
}

TEST(Fingerprint, UncalibratedThenFitted) {
    World w;
    const std::string item = as_string(media::encode_pnm(detect::generate_item({1, 9, 64}, detect::Upsampler::nearest, 0)));
    const auto none = w.call("POST", "/fingerprint", "pat", item);
    EXPECT_EQ(none.status, 503);
    EXPECT_EQ(none.body["code"], "UncalibratedClassifier");

    const auto split = detect::split_profiles(detect::corpus_profiles({40, 9, 64}));
    w.platform->set_fingerprint_calibration(detect::fit_fingerprint(split.train));
    const auto pat = w.call("POST", "/fingerprint", "pat", item);
    ASSERT_EQ(pat.status, 200) << pat.body.dump();
    EXPECT_EQ(pat.body["casework"], false);
    EXPECT_EQ(pat.body["stage1"]["label"], "generated");
    EXPECT_EQ(pat.body["stage2"]["class"], "ADM");
    EXPECT_EQ(pat.body["stage2"]["class_scores"].size(), 4u);
}

TEST(Gan, ReconstructionIsNotImplemented) {
    World w;
    const auto r = w.call("POST", "/gan/reconstruct", "ann", pnm_noise(5));
    EXPECT_EQ(r.status, 501);
    EXPECT_EQ(r.body["detail"]["reason"], "unsupported");
}

TEST(Cases, LifecycleOwnershipAndBundle) {
    World w;
    w.add_user("amy", "FORENSIC_ANALYST");
    const auto reg = w.register_bytes("case item");
    const std::string hash = reg.body["content_hash"];
    const auto cs = w.call("POST", "/cases", "ann", json{{"title", "Burglary 12"}}.dump());
    ASSERT_EQ(cs.status, 201);
    const std::string id = cs.body["id"];
    EXPECT_EQ(cs.body["status"], "open");

    EXPECT_EQ(w.call("POST", "/cases/" + id + "/status", "ann", json{{"status", "submitted"}}.dump()).status, 422);
    const auto other = w.call("POST", "/cases/" + id + "/evidence", "amy", json{{"content_hash", hash}}.dump());
    EXPECT_EQ(other.status, 403);
    EXPECT_FALSE(harness::role_policy_denial(other));
    ASSERT_EQ(w.call("POST", "/cases/" + id + "/evidence", "ann", json{{"content_hash", hash}}.dump()).status, 200);
    EXPECT_EQ(w.call("POST", "/cases/" + id + "/status", "ann", json{{"status", "submitted"}}.dump()).body["status"],
              "submitted");
    EXPECT_EQ(w.call("POST", "/cases/" + id + "/status", "ann", json{{"status", "verified"}}.dump()).status, 422);
    ASSERT_EQ(w.call("POST", "/evidence/" + hash + "/verify", "lee").status, 200);
    EXPECT_EQ(w.call("POST", "/cases/" + id + "/status", "ann", json{{"status", "verified"}}.dump()).body["status"],
              "verified");
    EXPECT_EQ(w.call("POST", "/cases/" + id + "/status", "ann", json{{"status", "bogus"}}.dump()).status, 422);

    const auto bundle = w.call("GET", "/cases/" + id + "/bundle", "lee");
    ASSERT_EQ(bundle.status, 200);
    const auto check = ledger::verify_case_bundle(json::parse(bundle.body.dump()));
    EXPECT_TRUE(check.ok);
    EXPECT_EQ(check.replayed_root.hex(), w.state_root());
    EXPECT_EQ(w.call("GET", "/cases/missing", "lee").status, 404);

    const auto audit = w.call("GET", "/admin/audit", "root");
    bool exported = false;
    for (const auto& e : audit.body["items"]) exported |= e["action"] == "case.export";
    EXPECT_TRUE(exported);
}

TEST(Admin, UserManagement) {
    World w;
    EXPECT_EQ(w.call("POST", "/admin/users", "root", json{{"name", "ann"}, {"role", "ADMIN"}, {"password", "longenough"}}.dump())
                  .status,
              409);
    EXPECT_EQ(w.call("POST", "/admin/users", "root", json{{"name", "bo"}, {"role", "ADMIN"}, {"password", "short"}}.dump())
                  .status,
              422);
    EXPECT_EQ(w.call("POST", "/admin/users", "root", json{{"name", "bo"}, {"role", "KING"}, {"password", "longenough"}}.dump())
                  .status,
              422);
    EXPECT_EQ(w.call("GET", "/admin/users", "root").body["items"].size(), 4u);
    EXPECT_EQ(w.call("POST", "/admin/users/root/disable", "root").status, 422);

    EXPECT_EQ(w.call("POST", "/admin/users/pat/disable", "root").body["disabled"], true);
    const auto blocked = w.call("GET", "/auth/me", "pat");
    EXPECT_EQ(blocked.status, 403);
    EXPECT_EQ(blocked.body["code"], "AccountDisabled");
    EXPECT_EQ(w.call("POST", "/admin/users/pat/disable", "root", json{{"disabled", false}}.dump()).body["disabled"], false);
    EXPECT_EQ(w.call("GET", "/auth/me", "pat").status, 200);
    EXPECT_EQ(w.call("POST", "/admin/users/nobody/disable", "root").status, 404);

    const auto page = w.call("GET", "/admin/audit", "root", {}, {{"offset", "1"}, {"limit", "2"}});
    EXPECT_EQ(page.body["items"].size(), 2u);
    EXPECT_GT(page.body["total"].get<int>(), 5);
}

TEST(Platform, ReopenKeepsEverything) {
    World w;
    const auto reg = w.register_bytes("durable");
    const std::string hash = reg.body["content_hash"];
    ASSERT_EQ(w.call("POST", "/evidence/" + hash + "/verify", "lee").status, 200);
    const std::string root = w.state_root();
    const auto audit_before = w.call("GET", "/admin/audit", "root").body["total"];
    w.reopen();
    EXPECT_EQ(w.state_root(), root);
    EXPECT_EQ(w.call("GET", "/evidence/" + hash, "ann").body["verified"], true);
    EXPECT_EQ(w.call("GET", "/admin/audit", "root").body["total"], audit_before);
    EXPECT_NO_THROW(w.login("pat", "pat-password"));
    EXPECT_THROW(api::Platform::init(w.config, "root", "rootpass1"), Error);
}

TEST(Http, LiveServer) {
    World w(8192);
    api::HttpServer server(*w.service, w.config.max_upload);
    const int port = server.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    httplib::Client cli("127.0.0.1", port);
    auto health = cli.Get("/health");
    ASSERT_TRUE(health);
    EXPECT_EQ(health->status, 200);
    EXPECT_EQ(json::parse(health->body)["state_root"], w.state_root());

    auto login = cli.Post("/auth/login", json{{"username", "ann"}, {"password", "ann-password"}}.dump(), "application/json");
    ASSERT_TRUE(login);
    ASSERT_EQ(login->status, 200);
    const std::string token = json::parse(login->body)["token"];
    httplib::Headers auth = {{"Authorization", "Bearer " + token}};

    auto reg = cli.Post("/evidence/register?type=document", auth, "over the wire", "application/octet-stream");
    ASSERT_TRUE(reg);
    EXPECT_EQ(reg->status, 201);
    auto dup = cli.Post("/evidence/register?type=document", auth, "over the wire", "application/octet-stream");
    EXPECT_EQ(dup->status, 409);
    auto big = cli.Post("/evidence/register?type=document", auth, std::string(9000, 'b'), "application/octet-stream");
    ASSERT_TRUE(big);
    EXPECT_EQ(big->status, 413);
    EXPECT_EQ(json::parse(big->body)["code"], "PayloadTooLarge");
    auto denied = cli.Get("/admin/users", auth);
    EXPECT_EQ(denied->status, 403);

    server.stop();
    t.join();
}
