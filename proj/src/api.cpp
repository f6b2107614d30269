// Copyright 2026 The Custody Authors
// SPDX-License-Identifier: Apache-2.0

#include "custody/api.hpp"

#include <openssl/rand.h>

#include <cstdlib>
#include <fstream>
#include <set>

#include "custody/encoding.hpp"
#include "custody/error.hpp"
#include "custody/media.hpp"

namespace custody::api {

using nlohmann::json;
using nlohmann::ordered_json;

using content::ContentHash;

namespace {

constexpr RoleSet kEveryone = RoleSet::all();
constexpr RoleSet kAnalyst{UserRole::forensic_analyst};
constexpr RoleSet kAuthority{UserRole::legal_authority};
constexpr RoleSet kAdmin{UserRole::admin};
constexpr RoleSet kCasework{UserRole::forensic_analyst, UserRole::legal_authority, UserRole::admin};
constexpr RoleSet kInvestigators{UserRole::forensic_analyst, UserRole::legal_authority};

std::vector<std::string> split_path(std::string_view path) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < path.size()) {
        if (path[i] == '/') {
            ++i;
            continue;
        }
        const std::size_t j = std::min(path.find('/', i), path.size());
        out.emplace_back(path.substr(i, j - i));
        i = j;
    }
    return out;
}

bool match(const std::string& pattern, const std::vector<std::string>& segs, std::map<std::string, std::string>& params) {
    const auto pat = split_path(pattern);
    if (pat.size() != segs.size()) return false;
    std::map<std::string, std::string> found;
    for (std::size_t i = 0; i < pat.size(); ++i) {
        if (pat[i].size() > 2 && pat[i].front() == '{' && pat[i].back() == '}') {
            found[pat[i].substr(1, pat[i].size() - 2)] = segs[i];
        } else if (pat[i] != segs[i]) {
            return false;
        }
    }
    params = std::move(found);
    return true;
}

std::string read_key_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::string key;
    if (!in || !std::getline(in, key) || key.empty()) fail(Errc::not_found, "no token key at " + path.string());
    return key;
}

std::string random_key() {
    Bytes b(32);
    if (RAND_bytes(b.data(), static_cast<int>(b.size())) != 1) fail(Errc::storage_failure, "random key generation failed");
    return to_hex(b);
}

json parse_body(const std::string& body) {
    if (body.empty()) fail(Errc::validation_failure, "request body must be a JSON object");
    try {
        json j = json::parse(body);
        if (!j.is_object()) fail(Errc::validation_failure, "request body must be a JSON object");
        return j;
    } catch (const json::exception& e) {
        fail(Errc::parse_error, std::string("malformed JSON body: ") + e.what());
    }
}

std::string required_string(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string() || it->get<std::string>().empty()) {
        fail(Errc::validation_failure, std::string("field '") + key + "' must be a non-empty string");
    }
    return it->get<std::string>();
}

ContentHash hash_param(const std::string& text) {
    try {
        return ContentHash::from_hex(text);
    } catch (const Error&) {
        fail(Errc::validation_failure, "content hash must be 64 lower-case hex digits");
    }
}

std::uint64_t uint_param(const std::map<std::string, std::string>& q, const char* key, std::uint64_t fallback) {
    auto it = q.find(key);
    if (it == q.end()) return fallback;
    try {
        std::size_t used = 0;
        const auto v = std::stoull(it->second, &used);
        if (used != it->second.size() || it->second.front() == '-') throw std::invalid_argument(key);
        return v;
    } catch (const std::exception&) {
        fail(Errc::validation_failure, std::string("query parameter '") + key + "' must be a non-negative integer");
    }
}

ordered_json principal_json(const identity::Principal& p) {
    ordered_json j;
    j["id"] = p.id;
    j["name"] = p.display_name;
    j["role"] = identity::to_string(p.role);
    j["chain_address"] = p.chain_address ? ordered_json(p.chain_address->hex()) : ordered_json(nullptr);
    j["disabled"] = p.disabled;
    return j;
}

ordered_json detection_json(const ledger::DetectionEvent& e) {
    return ledger::to_json(e);
}

}  // namespace

// ---- config ----

ApiConfig ApiConfig::from_json(const json& j, ApiConfig c) {
    c.bind_address = j.value("bind_address", c.bind_address);
    c.port = j.value("port", c.port);
    if (j.contains("data_dir")) c.data_dir = j.at("data_dir").get<std::string>();
    c.token_ttl = j.value("token_ttl", c.token_ttl);
    c.max_upload = j.value("max_upload", c.max_upload);
    if (j.contains("detector_registry")) c.detector_registry = j.at("detector_registry").get<std::string>();
    if (j.contains("fingerprint_calibration")) {
        c.fingerprint_calibration = j.at("fingerprint_calibration").get<std::string>();
    }
    return c;
}

ApiConfig ApiConfig::from_json(const json& j) {
    return from_json(j, ApiConfig{});
}

ApiConfig ApiConfig::load(const std::filesystem::path& path) {
    return load(path, ApiConfig{});
}

ApiConfig ApiConfig::load(const std::filesystem::path& path, ApiConfig base) {
    std::ifstream in(path);
    if (!in) fail(Errc::not_found, "cannot open config " + path.string());
    try {
        return from_json(json::parse(in), std::move(base));
    } catch (const json::exception& e) {
        fail(Errc::parse_error, std::string("config: ") + e.what());
    }
}

ApiConfig ApiConfig::with_env() const {
    ApiConfig c = *this;
    if (const char* v = std::getenv("CUSTODY_TOKEN_KEY"); v && *v) c.token_key = v;
    if (const char* v = std::getenv("CUSTODY_DATA_DIR"); v && *v) c.data_dir = v;
    if (const char* v = std::getenv("CUSTODY_BIND"); v && *v) c.bind_address = v;
    if (const char* v = std::getenv("CUSTODY_PORT"); v && *v) {
        try {
            c.port = std::stoi(v);
        } catch (const std::exception&) {
            fail(Errc::invalid_argument, "CUSTODY_PORT must be an integer");
        }
    }
    return c;
}

// ---- policy ----

const std::vector<RouteSpec>& route_table() {
    static const std::vector<RouteSpec> table = {
        {"health", "GET", "/health", false, {}},
        {"login", "POST", "/auth/login", false, {}},
        {"whoami", "GET", "/auth/me", true, kEveryone},
        {"detect_image", "POST", "/detect/image", true, kEveryone},
        {"detect_video", "POST", "/detect/video", true, kEveryone},
        {"detect_audio", "POST", "/detect/audio", true, kEveryone},
        {"fingerprint", "POST", "/fingerprint", true, kEveryone},
        {"gan_reconstruct", "POST", "/gan/reconstruct", true, kInvestigators},
        {"evidence_register", "POST", "/evidence/register", true, kAnalyst},
        {"evidence_verify", "POST", "/evidence/{hash}/verify", true, kAuthority},
        {"evidence_list", "GET", "/evidence", true, kCasework},
        {"evidence_get", "GET", "/evidence/{hash}", true, kCasework},
        {"evidence_content", "GET", "/evidence/{hash}/content", true, kCasework},
        {"case_create", "POST", "/cases", true, kAnalyst},
        {"case_get", "GET", "/cases/{id}", true, kCasework},
        {"case_attach", "POST", "/cases/{id}/evidence", true, kAnalyst},
        {"case_status", "POST", "/cases/{id}/status", true, kAnalyst},
        {"case_bundle", "GET", "/cases/{id}/bundle", true, kCasework},
        {"user_create", "POST", "/admin/users", true, kAdmin},
        {"user_list", "GET", "/admin/users", true, kAdmin},
        {"user_disable", "POST", "/admin/users/{name}/disable", true, kAdmin},
        {"audit", "GET", "/admin/audit", true, kAdmin},
    };
    return table;
}

void validate_policy(const std::vector<RouteSpec>& table, const std::vector<std::string>& handler_ids) {
    std::set<std::string> rows;
    for (const auto& r : table) {
        if (!rows.insert(r.id).second) fail(Errc::validation_failure, "duplicate policy row for route " + r.id);
        if (r.authenticated && r.allowed.empty()) fail(Errc::validation_failure, "route " + r.id + " admits no role");
    }
    std::set<std::string> handlers(handler_ids.begin(), handler_ids.end());
    for (const auto& id : handlers) {
        if (!rows.contains(id)) fail(Errc::validation_failure, "route " + id + " has no policy row");
    }
    for (const auto& id : rows) {
        if (!handlers.contains(id)) fail(Errc::validation_failure, "policy row " + id + " has no handler");
    }
}

std::string policy_markdown(const std::vector<RouteSpec>& table) {
    std::string out = "| Route | Method | Path |";
    for (UserRole r : identity::kAllRoles) out += " " + std::string(identity::to_string(r)) + " |";
    out += "\n|---|---|---|";
    for (std::size_t i = 0; i < identity::kAllRoles.size(); ++i) out += "---|";
    out += "\n";
    for (const auto& r : table) {
        out += "| " + r.id + " | " + r.method + " | `" + r.pattern + "` |";
        for (UserRole role : identity::kAllRoles) {
            out += !r.authenticated ? " public |" : (r.allowed.contains(role) ? " allow |" : " deny |");
        }
        out += "\n";
    }
    return out;
}

int http_status_for(Errc code) {
    switch (code) {
        case Errc::invalid_credentials:
        case Errc::invalid_signature:
        case Errc::expired: return 401;
        case Errc::unauthorized:
        case Errc::forbidden:
        case Errc::account_disabled: return 403;
        case Errc::not_found: return 404;
        case Errc::duplicate_evidence:
        case Errc::already_verified:
        case Errc::duplicate_name: return 409;
        case Errc::payload_too_large: return 413;
        case Errc::unsupported_media: return 415;
        case Errc::invalid_argument:
        case Errc::parse_error:
        case Errc::validation_failure:
        case Errc::too_short:
        case Errc::non_finite_input:
        case Errc::bad_channel_count:
        case Errc::bad_shape:
        case Errc::empty_video:
        case Errc::insufficient_data:
        case Errc::empty_matrix:
        case Errc::single_class: return 422;
        case Errc::storage_failure:
        case Errc::integrity_violation: return 502;
        case Errc::uncalibrated_classifier: return 503;
        case Errc::replay_mismatch:
        case Errc::consistency_error: return 500;
    }
    return 500;
}

ordered_json error_body(Errc code, const std::string& message, ordered_json detail) {
    ordered_json j;
    j["code"] = to_string(code);
    j["message"] = message;
    j["detail"] = std::move(detail);
    return j;
}

// ---- platform ----

namespace {

std::filesystem::path chain_dir(const ApiConfig& c) {
    return c.data_dir / "chain";
}

}  // namespace

void Platform::init(const ApiConfig& config, const std::string& admin_name, const std::string& admin_password) {
    namespace fs = std::filesystem;
    if (fs::exists(chain_dir(config) / "config.json")) {
        fail(Errc::duplicate_name, "data directory " + config.data_dir.string() + " is already initialized");
    }
    fs::create_directories(chain_dir(config));

    const fs::path key_path = config.data_dir / "token.key";
    if (config.token_key.empty() && !fs::exists(key_path)) {
        std::ofstream out(key_path, std::ios::trunc);
        out << random_key() << '\n';
        if (!out) fail(Errc::storage_failure, "cannot write " + key_path.string());
        out.close();
        fs::permissions(key_path, fs::perms::owner_read | fs::perms::owner_write, fs::perm_options::replace);
    }

    chain::ChainConfig cc;
    cc.genesis_admin = identity::chain_address_for(identity::principal_id_for(admin_name));
    cc.genesis_time = static_cast<std::uint64_t>(std::max<std::int64_t>(0, config.clock()));
    {
        std::ofstream out(chain_dir(config) / "config.json", std::ios::trunc);
        out << ledger::to_json(cc).dump(2) << '\n';
        if (!out) fail(Errc::storage_failure, "cannot write chain config");
    }
    std::ofstream(chain_dir(config) / "tx.log", std::ios::app);

    Platform p(config);
    p.identity().bootstrap_admin(admin_name, admin_password);
    p.save_identity();
    p.ledger().append_audit(identity::principal_id_for(admin_name), "platform.init", config.data_dir.string());
}

Platform::Platform(ApiConfig config) : config_(std::move(config)) {
    namespace fs = std::filesystem;
    const fs::path chain_config = chain_dir(config_) / "config.json";
    if (!fs::exists(chain_config)) {
        fail(Errc::not_found, "data directory " + config_.data_dir.string() + " is not initialized (run init)");
    }
    if (config_.token_key.empty()) config_.token_key = read_key_file(config_.data_dir / "token.key");

    blobs_ = std::make_unique<content::BlobStore>(config_.data_dir / "blobs");

    std::ifstream in(chain_config);
    const chain::ChainConfig cc = ledger::chain_config_from_json(json::parse(in));
    const fs::path log_path = chain_dir(config_) / "tx.log";
    const auto txs = fs::exists(log_path) ? chain::read_tx_log(log_path) : std::vector<chain::ChainTransaction>{};
    chain_ = chain::replay(cc, txs);
    tx_log_ = std::make_unique<chain::TxLogWriter>(log_path);
    chain_->set_tx_sink([w = tx_log_.get()](const chain::ChainTransaction& tx) { w->append(tx); });

    identity::IdentityConfig ic;
    ic.server_key = config_.token_key;
    ic.token_ttl = config_.token_ttl;
    ic.password_iterations = config_.password_iterations;
    ic.clock = config_.clock;
    identity_ = std::make_unique<identity::IdentityService>(ic, *chain_);
    if (fs::exists(config_.data_dir / "users.json")) identity_->load(config_.data_dir / "users.json");

    ledger_ = std::make_unique<ledger::Ledger>(config_.data_dir / "ledger.jsonl", config_.clock);
    ledger_->reconcile(*chain_);

    const fs::path reg = config_.detector_registry.value_or(config_.data_dir / "detectors.json");
    if (config_.detector_registry || fs::exists(reg)) detectors_ = detect::DetectorRegistry::load(reg);

    const fs::path fp = config_.fingerprint_calibration.value_or(config_.data_dir / "fingerprint.json");
    if (config_.fingerprint_calibration || fs::exists(fp)) fingerprint_ = detect::FingerprintCalibration::load(fp);
}

void Platform::set_fingerprint_calibration(detect::FingerprintCalibration cal) {
    fingerprint_ = std::move(cal);
}

void Platform::save_identity() {
    std::lock_guard lock(save_mutex_);
    identity_->save(config_.data_dir / "users.json");
}

// ---- service ----

struct Service::Context {
    const Request& req;
    const RouteSpec& route;
    std::map<std::string, std::string> params;
    std::optional<identity::Principal> principal;
};

Service::Service(Platform& platform) : p_(platform) {
    handlers_ = {
        {"health", &Service::health},
        {"login", &Service::login},
        {"whoami", &Service::whoami},
        {"detect_image", &Service::detect_image},
        {"detect_video", &Service::detect_video},
        {"detect_audio", &Service::detect_audio},
        {"fingerprint", &Service::fingerprint},
        {"gan_reconstruct", &Service::gan_reconstruct},
        {"evidence_register", &Service::evidence_register},
        {"evidence_verify", &Service::evidence_verify},
        {"evidence_list", &Service::evidence_list},
        {"evidence_get", &Service::evidence_get},
        {"evidence_content", &Service::evidence_content},
        {"case_create", &Service::case_create},
        {"case_get", &Service::case_get},
        {"case_attach", &Service::case_attach},
        {"case_status", &Service::case_status},
        {"case_bundle", &Service::case_bundle},
        {"user_create", &Service::user_create},
        {"user_list", &Service::user_list},
        {"user_disable", &Service::user_disable},
        {"audit", &Service::audit},
    };
    std::vector<std::string> ids;
    for (const auto& [id, _] : handlers_) ids.push_back(id);
    validate_policy(route_table(), ids);
}

Response Service::handle(const Request& req) {
    const auto segs = split_path(req.path);
    const RouteSpec* route = nullptr;
    std::map<std::string, std::string> params;
    bool path_known = false;
    for (const auto& r : route_table()) {
        std::map<std::string, std::string> found;
        if (!match(r.pattern, segs, found)) continue;
        path_known = true;
        if (r.method == req.method) {
            route = &r;
            params = std::move(found);
            break;
        }
    }
    if (!route) {
        if (path_known) return {405, error_body(Errc::invalid_argument, "method not allowed"), {}, "application/json"};
        return {404, error_body(Errc::not_found, "no route for " + req.path), {}, "application/json"};
    }

    Context ctx{req, *route, std::move(params), std::nullopt};
    try {
        if (route->authenticated) {
            auto auth = req.headers.find("authorization");
            if (auth == req.headers.end() || !auth->second.starts_with("Bearer ")) {
                return {401, error_body(Errc::invalid_signature, "missing bearer token"), {}, "application/json"};
            }
            try {
                ctx.principal = p_.identity().verify_token(std::string_view(auth->second).substr(7), route->allowed);
            } catch (const Error& e) {
                ordered_json detail = ordered_json::object();
                if (e.code() == Errc::forbidden) detail = {{"reason", "role_policy"}, {"route", route->id}};
                return {http_status_for(e.code()), error_body(e.code(), e.what(), detail), {}, "application/json"};
            }
        }
        if (req.body.size() > p_.config().max_upload) {
            fail(Errc::payload_too_large, "request body exceeds " + std::to_string(p_.config().max_upload) + " bytes");
        }
        return (this->*handlers_.at(route->id))(ctx);
    } catch (const Error& e) {
        ordered_json detail = ordered_json::object();
        if (e.code() == Errc::duplicate_evidence) {
            const ContentHash h = content::sha256(as_bytes(req.body));
            if (auto v = p_.ledger().evidence(h)) detail = packet(*v);
        }
        return {http_status_for(e.code()), error_body(e.code(), e.what(), detail), {}, "application/json"};
    } catch (const json::exception& e) {
        return {422, error_body(Errc::parse_error, e.what()), {}, "application/json"};
    } catch (const std::exception& e) {
        return {500, error_body(Errc::consistency_error, std::string("internal error: ") + e.what()), {}, "application/json"};
    }
}

Response Service::health(Context&) {
    Response r;
    r.body["status"] = "ok";
    r.body["blocks"] = p_.chain().head().number;
    r.body["state_root"] = p_.chain().state_root().hex();
    return r;
}

Response Service::login(Context& c) {
    const json body = parse_body(c.req.body);
    const std::string user = required_string(body, "username");
    const std::string pass = required_string(body, "password");
    const identity::RoleToken t = p_.identity().authenticate(user, pass);
    p_.ledger().append_audit(t.claims.subject, "auth.login", user);
    Response r;
    r.body["token"] = t.compact();
    r.body["principal_id"] = t.claims.subject;
    r.body["role"] = identity::to_string(t.claims.role);
    r.body["expires_at"] = t.claims.expires_at;
    return r;
}

Response Service::whoami(Context& c) {
    return {200, principal_json(*c.principal), {}, "application/json"};
}

Response Service::detect(Context& c, Modality m) {
    const std::string& body = c.req.body;
    if (body.empty()) fail(Errc::validation_failure, "upload is empty");
    const ByteView bytes = as_bytes(body);
    const detect::DetectorRegistry& reg = p_.detectors();
    detect::DetectionResult res;
    switch (m) {
        case Modality::image: res = reg.detect_image(media::decode_image(bytes)); break;
        case Modality::video: res = reg.detect_video(media::decode_video(bytes)); break;
        case Modality::audio: res = reg.detect_audio(media::decode_audio(bytes)); break;
        case Modality::fingerprint: fail(Errc::invalid_argument, "use /fingerprint");
    }
    ledger::DetectionEvent e;
    e.principal_id = c.principal->id;
    e.modality = m;
    e.media_hash = content::sha256(bytes);
    e.score = res.score;
    e.threshold = res.threshold;
    e.verdict = res.fake ? ledger::Verdict::fake : ledger::Verdict::real;
    e.detector_id = res.detector_id;
    e.casework = c.principal->role != UserRole::normal_user;
    e.id = p_.ledger().record_detection(e);
    return {200, detection_json(*p_.ledger().detection(e.id)), {}, "application/json"};
}

Response Service::fingerprint(Context& c) {
    const detect::FingerprintCalibration* cal = p_.fingerprint_calibration();
    if (!cal) fail(Errc::uncalibrated_classifier, "fingerprint classifier has not been fitted on this server");
    if (c.req.body.empty()) fail(Errc::validation_failure, "upload is empty");
    const ByteView bytes = as_bytes(c.req.body);
    const auto gray = features::grayscale(media::decode_image(bytes));
    const detect::FingerprintVerdict v = detect::fingerprint(cal, gray);

    ledger::DetectionEvent e;
    e.principal_id = c.principal->id;
    e.modality = Modality::fingerprint;
    e.media_hash = content::sha256(bytes);
    e.score = v.stage1.score;
    e.threshold = 0.5;
    e.verdict = v.stage1.generated ? ledger::Verdict::fake : ledger::Verdict::real;
    e.detector_id = p_.detectors().card(Modality::fingerprint).id;
    e.casework = c.principal->role != UserRole::normal_user;
    e.id = p_.ledger().record_detection(e);

    Response r;
    r.body["id"] = e.id;
    r.body["media_hash"] = e.media_hash.hex();
    r.body["stage1"] = {{"label", v.stage1.generated ? "generated" : "real"}, {"score", v.stage1.score}};
    if (v.stage2) {
        ordered_json scores;
        for (auto a : detect::kAllArchitectures) {
            scores[std::string(detect::to_string(a))] = v.stage2->class_scores[static_cast<std::size_t>(a)];
        }
        r.body["stage2"] = {{"class", std::string(detect::to_string(v.stage2->architecture))}, {"class_scores", scores}};
    } else {
        r.body["stage2"] = nullptr;
    }
    r.body["casework"] = e.casework;
    return r;
}

Response Service::gan_reconstruct(Context&) {
    return {501,
            error_body(Errc::invalid_argument, "GAN reconstruction is not implemented by this server",
                       {{"reason", "unsupported"}}),
            {},
            "application/json"};
}

ordered_json Service::packet(const ledger::EvidenceView& v) const {
    ordered_json j = ledger::to_json(v);
    j["tx_hash"] = v.register_tx.hex();
    j["block_number"] = v.register_block;
    ordered_json dets = ordered_json::array();
    for (const auto& d : p_.ledger().detections_for(v.record.content_hash)) dets.push_back(detection_json(d));
    j["detections"] = dets;
    return j;
}

ledger::EvidenceView Service::mirrored_view(const chain::EvidenceReceipt& r, const std::string& actor) {
    try {
        p_.ledger().mirror_chain(r.receipt, r.record, actor);
    } catch (const Error& e) {
        if (e.code() != Errc::consistency_error) throw;
        // A concurrent request can mirror out of order; the chain is the truth.
        p_.ledger().reconcile(p_.chain());
    }
    auto v = p_.ledger().evidence(r.record.content_hash);
    if (!v) fail(Errc::consistency_error, "ledger has no view of " + r.record.content_hash.hex());
    return *v;
}

Response Service::evidence_register(Context& c) {
    auto type_it = c.req.query.find("type");
    if (type_it == c.req.query.end()) fail(Errc::validation_failure, "query parameter 'type' is required");
    chain::EvidenceType type;
    try {
        type = chain::parse_evidence_type(type_it->second);
    } catch (const Error&) {
        fail(Errc::validation_failure, "type must be image, video, audio or document");
    }
    if (c.req.body.empty()) fail(Errc::validation_failure, "upload is empty");
    if (!c.principal->chain_address) fail(Errc::forbidden, "principal has no chain address");

    const ByteView bytes = as_bytes(c.req.body);
    const ContentHash hash = content::sha256(bytes);
    if (p_.chain().find_evidence(hash)) fail(Errc::duplicate_evidence, "evidence " + hash.hex() + " is already registered");
    // Blob first: a storage failure must leave no chain state behind.
    const content::Cid cid = p_.blobs().put(bytes);
    const chain::EvidenceReceipt r = p_.chain().submit_register(*c.principal->chain_address, hash, cid, type);
    return {201, packet(mirrored_view(r, c.principal->id)), {}, "application/json"};
}

Response Service::evidence_verify(Context& c) {
    const ContentHash hash = hash_param(c.params.at("hash"));
    const chain::EvidenceReceipt r = p_.chain().submit_verify(*c.principal->chain_address, hash);
    return {200, packet(mirrored_view(r, c.principal->id)), {}, "application/json"};
}

Response Service::evidence_list(Context& c) {
    const auto& q = c.req.query;
    ledger::EvidenceFilter f;
    try {
        if (auto it = q.find("type"); it != q.end()) f.type = chain::parse_evidence_type(it->second);
        if (auto it = q.find("analyst"); it != q.end()) f.analyst = chain::ChainAddress::from_hex(it->second);
    } catch (const Error& e) {
        fail(Errc::validation_failure, e.what());
    }
    if (auto it = q.find("verified"); it != q.end()) {
        if (it->second != "true" && it->second != "false") fail(Errc::validation_failure, "verified must be true or false");
        f.verified = it->second == "true";
    }
    if (q.contains("from")) f.registered_from = uint_param(q, "from", 0);
    if (q.contains("to")) f.registered_to = uint_param(q, "to", 0);
    const std::uint64_t offset = uint_param(q, "offset", 0);
    const std::uint64_t limit = std::min<std::uint64_t>(uint_param(q, "limit", 100), 1000);

    const auto all = p_.ledger().query_evidence(f);
    Response r;
    r.body["total"] = all.size();
    r.body["offset"] = offset;
    r.body["limit"] = limit;
    ordered_json items = ordered_json::array();
    for (std::size_t i = offset; i < all.size() && i < offset + limit; ++i) items.push_back(packet(all[i]));
    r.body["items"] = items;
    return r;
}

Response Service::evidence_get(Context& c) {
    const ContentHash hash = hash_param(c.params.at("hash"));
    auto v = p_.ledger().evidence(hash);
    if (!v) fail(Errc::not_found, "no evidence " + hash.hex());
    return {200, packet(*v), {}, "application/json"};
}

Response Service::evidence_content(Context& c) {
    const ContentHash hash = hash_param(c.params.at("hash"));
    auto v = p_.ledger().evidence(hash);
    if (!v) fail(Errc::not_found, "no evidence " + hash.hex());
    const Bytes data = p_.blobs().get(v->record.cid);
    Response r;
    r.raw = as_string(data);
    r.content_type = "application/octet-stream";
    return r;
}

Response Service::case_create(Context& c) {
    const json body = parse_body(c.req.body);
    const std::string id = p_.ledger().create_case(c.principal->id, required_string(body, "title"));
    return {201, ledger::to_json(p_.ledger().get_case(id)), {}, "application/json"};
}

Response Service::case_get(Context& c) {
    return {200, ledger::to_json(p_.ledger().get_case(c.params.at("id"))), {}, "application/json"};
}

namespace {

void require_owner(const ledger::CaseRecord& cr, const identity::Principal& p) {
    if (cr.owner != p.id) fail(Errc::forbidden, "only the owning analyst may change case " + cr.id);
}

}  // namespace

Response Service::case_attach(Context& c) {
    const json body = parse_body(c.req.body);
    const ContentHash hash = hash_param(required_string(body, "content_hash"));
    require_owner(p_.ledger().get_case(c.params.at("id")), *c.principal);
    return {200, ledger::to_json(p_.ledger().attach_evidence(c.params.at("id"), c.principal->id, hash)), {},
            "application/json"};
}

Response Service::case_status(Context& c) {
    const json body = parse_body(c.req.body);
    ledger::CaseStatus status;
    try {
        status = ledger::parse_case_status(required_string(body, "status"));
    } catch (const Error& e) {
        fail(Errc::validation_failure, e.what());
    }
    require_owner(p_.ledger().get_case(c.params.at("id")), *c.principal);
    return {200, ledger::to_json(p_.ledger().set_case_status(c.params.at("id"), c.principal->id, status)), {},
            "application/json"};
}

Response Service::case_bundle(Context& c) {
    const std::string& id = c.params.at("id");
    ordered_json bundle = ledger::make_case_bundle(p_.ledger(), p_.chain(), id);
    p_.ledger().append_audit(c.principal->id, "case.export", id);
    return {200, std::move(bundle), {}, "application/json"};
}

Response Service::user_create(Context& c) {
    const json body = parse_body(c.req.body);
    identity::PrincipalSpec spec;
    spec.name = required_string(body, "name");
    spec.password = required_string(body, "password");
    try {
        spec.role = identity::parse_user_role(required_string(body, "role"));
    } catch (const Error& e) {
        fail(Errc::validation_failure, e.what());
    }
    if (spec.password.size() < 8) fail(Errc::validation_failure, "password must be at least 8 characters");
    const identity::Principal p = p_.identity().provision_principal(*c.principal, spec);
    p_.save_identity();
    p_.ledger().append_audit(c.principal->id, "user.create", p.id);
    return {201, principal_json(p), {}, "application/json"};
}

Response Service::user_list(Context&) {
    Response r;
    r.body["items"] = ordered_json::array();
    for (const auto& p : p_.identity().principals()) r.body["items"].push_back(principal_json(p));
    return r;
}

Response Service::user_disable(Context& c) {
    bool disabled = true;
    if (!c.req.body.empty()) {
        const json body = parse_body(c.req.body);
        if (body.contains("disabled")) {
            if (!body.at("disabled").is_boolean()) fail(Errc::validation_failure, "disabled must be a boolean");
            disabled = body.at("disabled").get<bool>();
        }
    }
    const std::string& name = c.params.at("name");
    if (name == c.principal->display_name && disabled) fail(Errc::validation_failure, "administrators cannot disable themselves");
    const identity::Principal p = p_.identity().set_disabled(*c.principal, name, disabled);
    p_.save_identity();
    p_.ledger().append_audit(c.principal->id, disabled ? "user.disable" : "user.enable", p.id);
    return {200, principal_json(p), {}, "application/json"};
}

Response Service::audit(Context& c) {
    const std::uint64_t offset = uint_param(c.req.query, "offset", 0);
    const std::uint64_t limit = std::min<std::uint64_t>(uint_param(c.req.query, "limit", 100), 1000);
    const auto log = p_.ledger().audit_log();
    Response r;
    r.body["total"] = log.size();
    r.body["items"] = ordered_json::array();
    for (std::size_t i = offset; i < log.size() && i < offset + limit; ++i) r.body["items"].push_back(ledger::to_json(log[i]));
    return r;
}

}  // namespace custody::api
