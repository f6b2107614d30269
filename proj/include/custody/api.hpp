// Copyright 2026 The Custody Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Authenticated gateway. Service::handle is transport independent; the
// HTTP adapter in http_server.hpp only translates requests and responses.
//
// On-disk layout under ApiConfig::data_dir:
//   token.key            HMAC key for role tokens (created by init)
//   chain/config.json    genesis parameters
//   chain/tx.log         accepted transactions, replayed on open
//   users.json           principal table
//   ledger.jsonl         ledger journal
//   blobs/               content store
//   detectors.json       optional detector registry override
//   fingerprint.json     optional fitted fingerprint calibration

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "custody/case_ledger.hpp"
#include "custody/common.hpp"
#include "custody/content_store.hpp"
#include "custody/detection.hpp"
#include "custody/error.hpp"
#include "custody/evidence_chain.hpp"
#include "custody/identity.hpp"

namespace custody::api {

using identity::RoleSet;
using identity::UserRole;

inline constexpr std::size_t kDefaultMaxUpload = 25u * 1024u * 1024u;

struct ApiConfig {
    std::string bind_address = "127.0.0.1";
    int port = 8080;
    std::filesystem::path data_dir = "data";
    std::string token_key;  // falls back to data_dir/token.key
    std::int64_t token_ttl = 3600;
    int password_iterations = 10000;
    std::size_t max_upload = kDefaultMaxUpload;
    std::optional<std::filesystem::path> detector_registry;
    std::optional<std::filesystem::path> fingerprint_calibration;
    Clock clock = system_clock();

    // Keys: bind_address, port, data_dir, token_ttl, max_upload,
    // detector_registry, fingerprint_calibration.
    static ApiConfig from_json(const nlohmann::json& j, ApiConfig base);
    static ApiConfig from_json(const nlohmann::json& j);
    static ApiConfig load(const std::filesystem::path& path, ApiConfig base);
    static ApiConfig load(const std::filesystem::path& path);
    // CUSTODY_TOKEN_KEY, CUSTODY_PORT, CUSTODY_DATA_DIR, CUSTODY_BIND.
    ApiConfig with_env() const;
};

struct RouteSpec {
    std::string id;
    std::string method;
    std::string pattern;  // segments in braces are parameters
    bool authenticated = true;
    RoleSet allowed;
};

// The role policy table. Every route the service answers is listed here.
const std::vector<RouteSpec>& route_table();
// Throws ValidationFailure unless every handler has exactly one policy row
// and every policy row has a handler.
void validate_policy(const std::vector<RouteSpec>& table, const std::vector<std::string>& handler_ids);
// Markdown rendering of the table as published in docs/api.md.
std::string policy_markdown(const std::vector<RouteSpec>& table);

int http_status_for(Errc code);

struct Request {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::map<std::string, std::string> headers;  // lower-case names
    std::string body;
};

struct Response {
    int status = 200;
    nlohmann::ordered_json body = nlohmann::ordered_json::object();
    // When set, sent verbatim instead of the JSON body.
    std::optional<std::string> raw;
    std::string content_type = "application/json";
};

// Storage and services behind the gateway.
class Platform {
  public:
    // Creates a fresh data directory with its genesis admin.
    static void init(const ApiConfig& config, const std::string& admin_name, const std::string& admin_password);
    // Opens an initialized data directory, replaying the chain log and
    // reconciling the ledger with it.
    explicit Platform(ApiConfig config);

    Platform(const Platform&) = delete;
    Platform& operator=(const Platform&) = delete;

    const ApiConfig& config() const { return config_; }
    content::BlobStore& blobs() { return *blobs_; }
    chain::EvidenceChain& chain() { return *chain_; }
    identity::IdentityService& identity() { return *identity_; }
    ledger::Ledger& ledger() { return *ledger_; }
    const detect::DetectorRegistry& detectors() const { return detectors_; }
    const detect::FingerprintCalibration* fingerprint_calibration() const {
        return fingerprint_ ? &*fingerprint_ : nullptr;
    }
    void set_fingerprint_calibration(detect::FingerprintCalibration cal);
    void save_identity();

  private:
    ApiConfig config_;
    std::unique_ptr<content::BlobStore> blobs_;
    std::unique_ptr<chain::EvidenceChain> chain_;
    std::unique_ptr<chain::TxLogWriter> tx_log_;
    std::unique_ptr<identity::IdentityService> identity_;
    std::unique_ptr<ledger::Ledger> ledger_;
    detect::DetectorRegistry detectors_;
    std::optional<detect::FingerprintCalibration> fingerprint_;
    std::mutex save_mutex_;
};

class Service {
  public:
    explicit Service(Platform& platform);

    Response handle(const Request& request);

  private:
    struct Context;
    using Handler = Response (Service::*)(Context&);

    Response login(Context& c);
    Response whoami(Context& c);
    Response health(Context& c);
    Response detect(Context& c, Modality m);
    Response detect_image(Context& c) { return detect(c, Modality::image); }
    Response detect_video(Context& c) { return detect(c, Modality::video); }
    Response detect_audio(Context& c) { return detect(c, Modality::audio); }
    Response fingerprint(Context& c);
    Response gan_reconstruct(Context& c);
    Response evidence_register(Context& c);
    Response evidence_verify(Context& c);
    Response evidence_list(Context& c);
    Response evidence_get(Context& c);
    Response evidence_content(Context& c);
    Response case_create(Context& c);
    Response case_get(Context& c);
    Response case_attach(Context& c);
    Response case_status(Context& c);
    Response case_bundle(Context& c);
    Response user_create(Context& c);
    Response user_list(Context& c);
    Response user_disable(Context& c);
    Response audit(Context& c);

    nlohmann::ordered_json packet(const ledger::EvidenceView& view) const;
    ledger::EvidenceView mirrored_view(const chain::EvidenceReceipt& r, const std::string& actor);

    Platform& p_;
    std::map<std::string, Handler> handlers_;
};

nlohmann::ordered_json error_body(Errc code, const std::string& message,
                                  nlohmann::ordered_json detail = nlohmann::ordered_json::object());

}  // namespace custody::api
