// Copyright 2026 The Custody Authors
// SPDX-License-Identifier: Apache-2.0

#include "custody/identity.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/rand.h>

#include <fstream>
#include <mutex>

#include "json.hpp"

#include "custody/encoding.hpp"
#include "custody/error.hpp"

namespace custody::identity {

using nlohmann::json;

namespace {

constexpr std::string_view kTokenHeader = R"({"alg":"HS256","typ":"JWT"})";
constexpr std::size_t kSaltSize = 16;

std::string hash_password(std::string_view password, ByteView salt, int iterations) {
    Bytes out(32);
    if (PKCS5_PBKDF2_HMAC(password.data(), static_cast<int>(password.size()), salt.data(),
                          static_cast<int>(salt.size()), iterations, EVP_sha256(), static_cast<int>(out.size()),
                          out.data()) != 1) {
        fail(Errc::invalid_argument, "password hashing failed");
    }
    return to_hex(out);
}

bool constant_time_equal(std::string_view a, std::string_view b) {
    return a.size() == b.size() && CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

json claims_to_json(const TokenClaims& c) {
    // nlohmann::json objects are key-sorted, which is the canonical claim order.
    return json{{"sub", c.subject}, {"role", std::string(to_string(c.role))}, {"iat", c.issued_at},
                {"exp", c.expires_at}};
}

}  // namespace

std::string_view to_string(UserRole r) {
    switch (r) {
        case UserRole::forensic_analyst: return "FORENSIC_ANALYST";
        case UserRole::legal_authority: return "LEGAL_AUTHORITY";
        case UserRole::admin: return "ADMIN";
        case UserRole::normal_user: return "NORMAL_USER";
    }
    return "UNKNOWN";
}

UserRole parse_user_role(std::string_view s) {
    for (UserRole r : kAllRoles) {
        if (to_string(r) == s) return r;
    }
    fail(Errc::invalid_argument, "unknown role '" + std::string(s) + "'");
}

std::optional<chain::Role> chain_role_for(UserRole r) {
    switch (r) {
        case UserRole::forensic_analyst: return chain::Role::analyst;
        case UserRole::legal_authority: return chain::Role::authority;
        case UserRole::admin: return chain::Role::admin;
        case UserRole::normal_user: return std::nullopt;
    }
    return std::nullopt;
}

std::string principal_id_for(std::string_view name) {
    return "principal:" + std::string(name);
}

chain::ChainAddress chain_address_for(std::string_view principal_id) {
    return chain::ChainAddress::derive(principal_id);
}

Bytes hmac_sha256(ByteView key, ByteView message) {
    Bytes out(EVP_MAX_MD_SIZE);
    unsigned int len = 0;
    if (HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), message.data(), message.size(), out.data(),
             &len) == nullptr) {
        fail(Errc::invalid_argument, "HMAC computation failed");
    }
    out.resize(len);
    return out;
}

RoleToken sign_token(const TokenClaims& claims, std::string_view key) {
    RoleToken t;
    t.claims = claims;
    t.header = base64url_encode(as_bytes(kTokenHeader));
    t.payload = base64url_encode(as_bytes(claims_to_json(claims).dump()));
    const std::string signing_input = t.header + "." + t.payload;
    t.mac = base64url_encode(hmac_sha256(as_bytes(key), as_bytes(signing_input)));
    return t;
}

RoleToken RoleToken::parse(std::string_view compact) {
    const auto first = compact.find('.');
    const auto second = first == std::string_view::npos ? first : compact.find('.', first + 1);
    if (second == std::string_view::npos || compact.find('.', second + 1) != std::string_view::npos) {
        fail(Errc::invalid_signature, "token is not a three-part compact serialization");
    }
    RoleToken t;
    t.header = std::string(compact.substr(0, first));
    t.payload = std::string(compact.substr(first + 1, second - first - 1));
    t.mac = std::string(compact.substr(second + 1));
    try {
        json header = json::parse(as_string(base64url_decode(t.header)));
        if (header.value("alg", "") != "HS256") fail(Errc::invalid_signature, "unsupported token algorithm");
        json claims = json::parse(as_string(base64url_decode(t.payload)));
        t.claims.subject = claims.at("sub").get<std::string>();
        t.claims.role = parse_user_role(claims.at("role").get<std::string>());
        t.claims.issued_at = claims.at("iat").get<std::int64_t>();
        t.claims.expires_at = claims.at("exp").get<std::int64_t>();
    } catch (const Error& e) {
        if (e.code() == Errc::invalid_signature) throw;
        fail(Errc::invalid_signature, std::string("malformed token: ") + e.what());
    } catch (const json::exception& e) {
        fail(Errc::invalid_signature, std::string("malformed token: ") + e.what());
    }
    return t;
}

IdentityService::IdentityService(IdentityConfig config, chain::EvidenceChain& chain)
    : config_(std::move(config)), chain_(chain) {
    if (config_.server_key.empty()) fail(Errc::invalid_argument, "token signing key must not be empty");
    if (config_.token_ttl <= 0) fail(Errc::invalid_argument, "token TTL must be positive");
    if (config_.password_iterations < 10000) fail(Errc::invalid_argument, "password hashing needs >= 10000 iterations");
    if (!config_.clock) config_.clock = system_clock();
}

Principal IdentityService::make_principal(const PrincipalSpec& spec) const {
    if (spec.name.empty()) fail(Errc::invalid_argument, "principal name must not be empty");
    Principal p;
    p.id = principal_id_for(spec.name);
    p.display_name = spec.name;
    p.role = spec.role;
    if (chain_role_for(spec.role)) p.chain_address = chain_address_for(p.id);
    Bytes salt(kSaltSize);
    if (RAND_bytes(salt.data(), static_cast<int>(salt.size())) != 1) {
        fail(Errc::invalid_argument, "random salt generation failed");
    }
    p.salt = to_hex(salt);
    p.credential_hash = hash_password(spec.password, salt, config_.password_iterations);
    return p;
}

bool IdentityService::check_password(const Principal& p, std::string_view password) const {
    Bytes salt = from_hex(p.salt);
    return constant_time_equal(hash_password(password, salt, config_.password_iterations), p.credential_hash);
}

Principal IdentityService::bootstrap_admin(const std::string& name, const std::string& password) {
    Principal p = make_principal({name, UserRole::admin, password});
    if (!chain_.has_role(*p.chain_address, chain::Role::admin)) {
        fail(Errc::forbidden, "bootstrap admin address " + p.chain_address->hex() + " is not the chain's genesis admin");
    }
    std::unique_lock lock(mutex_);
    if (by_name_.contains(name)) fail(Errc::duplicate_name, "principal '" + name + "' already exists");
    by_name_.emplace(name, p);
    return p;
}

RoleToken IdentityService::authenticate(std::string_view username, std::string_view password) const {
    std::optional<Principal> p = find_by_name(username);
    // Hash even for unknown users so timing does not reveal which names exist.
    if (!p) {
        hash_password(password, Bytes(kSaltSize), config_.password_iterations);
        fail(Errc::invalid_credentials, "invalid username or password");
    }
    if (!check_password(*p, password)) fail(Errc::invalid_credentials, "invalid username or password");
    if (p->disabled) fail(Errc::account_disabled, "account '" + std::string(username) + "' is disabled");
    const std::int64_t now = config_.clock();
    return sign_token(TokenClaims{p->id, p->role, now, now + config_.token_ttl}, config_.server_key);
}

Principal IdentityService::verify_token(std::string_view compact, RoleSet required) const {
    RoleToken t = RoleToken::parse(compact);
    const std::string signing_input = t.header + "." + t.payload;
    const std::string expected = base64url_encode(hmac_sha256(as_bytes(config_.server_key), as_bytes(signing_input)));
    if (!constant_time_equal(expected, t.mac)) fail(Errc::invalid_signature, "token signature mismatch");
    if (config_.clock() >= t.claims.expires_at) fail(Errc::expired, "token expired");
    std::optional<Principal> p = find_by_id(t.claims.subject);
    if (!p || p->role != t.claims.role) fail(Errc::invalid_signature, "token subject is not a known principal");
    if (p->disabled) fail(Errc::account_disabled, "account is disabled");
    if (!required.contains(p->role)) {
        fail(Errc::forbidden, "role " + std::string(to_string(p->role)) + " may not perform this operation");
    }
    return *p;
}

Principal IdentityService::provision_principal(const Principal& admin, const PrincipalSpec& spec) {
    if (admin.role != UserRole::admin || admin.disabled) fail(Errc::forbidden, "only administrators manage accounts");
    if (find_by_name(spec.name)) fail(Errc::duplicate_name, "principal '" + spec.name + "' already exists");
    Principal p = make_principal(spec);

    std::unique_lock lock(mutex_);
    if (by_name_.contains(spec.name)) fail(Errc::duplicate_name, "principal '" + spec.name + "' already exists");
    if (auto role = chain_role_for(p.role)) {
        if (!admin.chain_address) fail(Errc::forbidden, "administrator has no chain address");
        chain_.grant_role(*admin.chain_address, *p.chain_address, *role);
    }
    by_name_.emplace(spec.name, p);
    return p;
}

Principal IdentityService::set_disabled(const Principal& admin, std::string_view name, bool disabled) {
    if (admin.role != UserRole::admin || admin.disabled) fail(Errc::forbidden, "only administrators manage accounts");
    std::unique_lock lock(mutex_);
    auto it = by_name_.find(name);
    if (it == by_name_.end()) fail(Errc::not_found, "no principal named '" + std::string(name) + "'");
    it->second.disabled = disabled;
    return it->second;
}

std::optional<Principal> IdentityService::find_by_name(std::string_view name) const {
    std::shared_lock lock(mutex_);
    auto it = by_name_.find(name);
    if (it == by_name_.end()) return std::nullopt;
    return it->second;
}

std::optional<Principal> IdentityService::find_by_id(std::string_view id) const {
    std::shared_lock lock(mutex_);
    for (const auto& [_, p] : by_name_) {
        if (p.id == id) return p;
    }
    return std::nullopt;
}

std::vector<Principal> IdentityService::principals() const {
    std::shared_lock lock(mutex_);
    std::vector<Principal> out;
    for (const auto& [_, p] : by_name_) out.push_back(p);
    return out;
}

void IdentityService::save(const std::filesystem::path& path) const {
    json doc = json::array();
    for (const Principal& p : principals()) {
        json j{{"id", p.id},
               {"name", p.display_name},
               {"role", std::string(to_string(p.role))},
               {"credential_hash", p.credential_hash},
               {"salt", p.salt},
               {"disabled", p.disabled}};
        if (p.chain_address) j["chain_address"] = p.chain_address->hex();
        doc.push_back(std::move(j));
    }
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) fail(Errc::storage_failure, "cannot write " + tmp.string());
        out << doc.dump(2) << '\n';
        if (!out) fail(Errc::storage_failure, "write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void IdentityService::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::not_found, "cannot open principal table " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        fail(Errc::parse_error, std::string("principal table: ") + e.what());
    }
    std::map<std::string, Principal, std::less<>> loaded;
    for (const json& j : doc) {
        Principal p;
        p.id = j.at("id").get<std::string>();
        p.display_name = j.at("name").get<std::string>();
        p.role = parse_user_role(j.at("role").get<std::string>());
        p.credential_hash = j.at("credential_hash").get<std::string>();
        p.salt = j.at("salt").get<std::string>();
        p.disabled = j.value("disabled", false);
        if (j.contains("chain_address")) {
            p.chain_address = chain::ChainAddress::from_hex(j.at("chain_address").get<std::string>());
        }
        loaded.emplace(p.display_name, std::move(p));
    }
    std::unique_lock lock(mutex_);
    by_name_ = std::move(loaded);
}

}  // namespace custody::identity
