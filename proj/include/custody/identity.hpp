// Copyright 2026 The Custody Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "custody/common.hpp"
#include "custody/evidence_chain.hpp"

namespace custody::identity {

enum class UserRole : std::uint8_t { forensic_analyst = 0, legal_authority = 1, admin = 2, normal_user = 3 };

inline constexpr std::array<UserRole, 4> kAllRoles = {UserRole::forensic_analyst, UserRole::legal_authority,
                                                      UserRole::admin, UserRole::normal_user};

std::string_view to_string(UserRole r);  // FORENSIC_ANALYST, LEGAL_AUTHORITY, ADMIN, NORMAL_USER
UserRole parse_user_role(std::string_view s);

// On-chain role that mirrors a platform role; NORMAL_USER has none.
std::optional<chain::Role> chain_role_for(UserRole r);

class RoleSet {
  public:
    constexpr RoleSet() = default;
    constexpr RoleSet(std::initializer_list<UserRole> roles) {
        for (UserRole r : roles) bits_ |= bit(r);
    }

    static constexpr RoleSet all() { return RoleSet{kAllRoles[0], kAllRoles[1], kAllRoles[2], kAllRoles[3]}; }

    constexpr bool contains(UserRole r) const { return (bits_ & bit(r)) != 0; }
    constexpr bool empty() const { return bits_ == 0; }
    constexpr void insert(UserRole r) { bits_ |= bit(r); }

    constexpr bool operator==(const RoleSet&) const = default;

  private:
    static constexpr std::uint8_t bit(UserRole r) { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(r)); }
    std::uint8_t bits_ = 0;
};

struct Principal {
    std::string id;
    std::string display_name;
    UserRole role = UserRole::normal_user;
    std::optional<chain::ChainAddress> chain_address;
    std::string credential_hash;  // hex PBKDF2-HMAC-SHA256
    std::string salt;             // hex
    bool disabled = false;
};

// Deterministic principal id and address derivation.
std::string principal_id_for(std::string_view name);
chain::ChainAddress chain_address_for(std::string_view principal_id);

struct TokenClaims {
    std::string subject;
    UserRole role = UserRole::normal_user;
    std::int64_t issued_at = 0;
    std::int64_t expires_at = 0;
};

// Compact form: base64url(header).base64url(claims).base64url(hmac)
// header = {"alg":"HS256","typ":"JWT"}; claims are serialized key-sorted:
// {"exp":..,"iat":..,"role":"..","sub":".."}.
struct RoleToken {
    std::string header;   // base64url segment
    std::string payload;  // base64url segment
    std::string mac;      // base64url segment
    TokenClaims claims;

    std::string compact() const { return header + "." + payload + "." + mac; }
    // Structural parse only; signature is checked by IdentityService.
    static RoleToken parse(std::string_view compact);
};

RoleToken sign_token(const TokenClaims& claims, std::string_view key);
Bytes hmac_sha256(ByteView key, ByteView message);

struct IdentityConfig {
    std::string server_key;
    std::int64_t token_ttl = 3600;
    int password_iterations = 10000;
    Clock clock = system_clock();
};

struct PrincipalSpec {
    std::string name;
    UserRole role = UserRole::normal_user;
    std::string password;
};

class IdentityService {
  public:
    IdentityService(IdentityConfig config, chain::EvidenceChain& chain);

    IdentityService(const IdentityService&) = delete;
    IdentityService& operator=(const IdentityService&) = delete;

    // Creates the first administrator. Its derived address must already hold
    // ADMIN_ROLE on the chain (i.e. be the chain's genesis admin).
    Principal bootstrap_admin(const std::string& name, const std::string& password);

    RoleToken authenticate(std::string_view username, std::string_view password) const;
    Principal verify_token(std::string_view compact, RoleSet required) const;

    Principal provision_principal(const Principal& admin, const PrincipalSpec& spec);
    Principal set_disabled(const Principal& admin, std::string_view name, bool disabled);

    std::optional<Principal> find_by_name(std::string_view name) const;
    std::optional<Principal> find_by_id(std::string_view id) const;
    std::vector<Principal> principals() const;

    // JSON persistence of the principal table (credentials included, hashed).
    void save(const std::filesystem::path& path) const;
    void load(const std::filesystem::path& path);

    const IdentityConfig& config() const { return config_; }

  private:
    Principal make_principal(const PrincipalSpec& spec) const;
    bool check_password(const Principal& p, std::string_view password) const;

    IdentityConfig config_;
    chain::EvidenceChain& chain_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, Principal, std::less<>> by_name_;
};

}  // namespace custody::identity
