// Copyright 2026 The Custody Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "json.hpp"

#include "custody/encoding.hpp"
#include "custody/error.hpp"
#include "custody/identity.hpp"
#include "oracles.hpp"

using namespace custody;
using namespace custody::identity;

namespace {

template <typename F>
std::optional<Errc> code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return std::nullopt;
}

struct World {
    std::int64_t now = 1000;
    chain::EvidenceChain chain;
    IdentityService ids;
    Principal admin;

    World()
        : chain(chain::ChainConfig{chain_address_for(principal_id_for("root"))}),
          ids(IdentityConfig{"test-key", 600, 10000, [this] { return now; }}, chain),
          admin(ids.bootstrap_admin("root", "rootpass1")) {}

    Principal add(const std::string& name, UserRole role) {
        return ids.provision_principal(admin, {name, role, name + "-pw"});
    }
};

}  // namespace

TEST(Hmac, Rfc4231Case2) {
    const Bytes mac = hmac_sha256(as_bytes("Jefe"), as_bytes("what do ya want for nothing?"));
    EXPECT_EQ(to_hex(mac), "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843");
}

TEST(Principal, IdAndAddressDerivation) {
    EXPECT_EQ(principal_id_for("ann"), "principal:ann");
    EXPECT_EQ(chain_address_for("principal:ann"), chain::ChainAddress::derive("principal:ann"));
}

TEST(Roles, ChainMapping) {
    EXPECT_EQ(chain_role_for(UserRole::forensic_analyst), chain::Role::analyst);
    EXPECT_EQ(chain_role_for(UserRole::legal_authority), chain::Role::authority);
    EXPECT_EQ(chain_role_for(UserRole::admin), chain::Role::admin);
    EXPECT_FALSE(chain_role_for(UserRole::normal_user));
    for (UserRole r : kAllRoles) EXPECT_EQ(parse_user_role(to_string(r)), r);
    EXPECT_EQ(code_of([] { parse_user_role("ROOT"); }), Errc::invalid_argument);
}

TEST(Bootstrap, RequiresGenesisAdminAddress) {
    chain::EvidenceChain chain(chain::ChainConfig{chain::ChainAddress::derive("someone else")});
    IdentityService ids(IdentityConfig{"k", 600, 10000, [] { return 0; }}, chain);
    EXPECT_EQ(code_of([&] { ids.bootstrap_admin("root", "pw"); }), Errc::forbidden);
}

TEST(Config, RejectsWeakSettings) {
    chain::EvidenceChain chain(chain::ChainConfig{});
    EXPECT_EQ(code_of([&] { IdentityService(IdentityConfig{"", 600, 10000, [] { return 0; }}, chain); }),
              Errc::invalid_argument);
    EXPECT_EQ(code_of([&] { IdentityService(IdentityConfig{"k", 600, 1000, [] { return 0; }}, chain); }),
              Errc::invalid_argument);
}

TEST(Provision, GrantsChainRoleExceptNormalUser) {
    World w;
    const auto ann = w.add("ann", UserRole::forensic_analyst);
    const auto lee = w.add("lee", UserRole::legal_authority);
    const auto pat = w.add("pat", UserRole::normal_user);
    EXPECT_TRUE(w.chain.has_role(*ann.chain_address, chain::Role::analyst));
    EXPECT_TRUE(w.chain.has_role(*lee.chain_address, chain::Role::authority));
    EXPECT_FALSE(pat.chain_address);
    EXPECT_EQ(code_of([&] { w.add("ann", UserRole::admin); }), Errc::duplicate_name);
    EXPECT_EQ(code_of([&] { w.ids.provision_principal(ann, {"x", UserRole::admin, "pw"}); }), Errc::forbidden);
}

TEST(Authenticate, TokenClaimsAndLayout) {
    World w;
    w.add("ann", UserRole::forensic_analyst);
    const RoleToken t = w.ids.authenticate("ann", "ann-pw");
    EXPECT_EQ(t.claims.subject, "principal:ann");
    EXPECT_EQ(t.claims.role, UserRole::forensic_analyst);
    EXPECT_EQ(t.claims.issued_at, 1000);
    EXPECT_EQ(t.claims.expires_at, 1600);
    EXPECT_EQ(as_string(base64url_decode(t.header)), R"({"alg":"HS256","typ":"JWT"})");
    EXPECT_EQ(as_string(base64url_decode(t.payload)),
              R"({"exp":1600,"iat":1000,"role":"FORENSIC_ANALYST","sub":"principal:ann"})");
    EXPECT_EQ(t.mac, base64url_encode(hmac_sha256(as_bytes("test-key"), as_bytes(t.header + "." + t.payload))));
    EXPECT_EQ(RoleToken::parse(t.compact()).claims.subject, "principal:ann");
}

TEST(Authenticate, FailuresAreIndistinguishable) {
    World w;
    w.add("ann", UserRole::forensic_analyst);
    EXPECT_EQ(code_of([&] { w.ids.authenticate("ann", "wrong"); }), Errc::invalid_credentials);
    EXPECT_EQ(code_of([&] { w.ids.authenticate("nobody", "ann-pw"); }), Errc::invalid_credentials);
}

TEST(VerifyToken, RoleSetsExpiryTamperAndDisable) {
    World w;
    w.add("ann", UserRole::forensic_analyst);
    const std::string tok = w.ids.authenticate("ann", "ann-pw").compact();
    EXPECT_EQ(w.ids.verify_token(tok, {UserRole::forensic_analyst}).id, "principal:ann");
    EXPECT_EQ(code_of([&] { w.ids.verify_token(tok, {UserRole::legal_authority}); }), Errc::forbidden);

    std::string forged = tok;
    forged.back() = forged.back() == 'A' ? 'B' : 'A';
    EXPECT_EQ(code_of([&] { w.ids.verify_token(forged, RoleSet::all()); }), Errc::invalid_signature);
    EXPECT_EQ(code_of([&] { w.ids.verify_token("not-a-token", RoleSet::all()); }), Errc::invalid_signature);

    // Role escalation by editing the payload breaks the MAC.
    RoleToken t = RoleToken::parse(tok);
    TokenClaims c = t.claims;
    c.role = UserRole::admin;
    RoleToken fake = sign_token(c, "wrong-key");
    EXPECT_EQ(code_of([&] { w.ids.verify_token(fake.compact(), RoleSet::all()); }), Errc::invalid_signature);
    // Correctly signed but with a role the principal does not hold.
    RoleToken stale = sign_token(c, "test-key");
    EXPECT_EQ(code_of([&] { w.ids.verify_token(stale.compact(), RoleSet::all()); }), Errc::invalid_signature);

    w.now = 1599;
    EXPECT_NO_THROW(w.ids.verify_token(tok, RoleSet::all()));
    w.now = 1600;
    EXPECT_EQ(code_of([&] { w.ids.verify_token(tok, RoleSet::all()); }), Errc::expired);

    w.now = 1000;
    w.ids.set_disabled(w.admin, "ann", true);
    EXPECT_EQ(code_of([&] { w.ids.verify_token(tok, RoleSet::all()); }), Errc::account_disabled);
    EXPECT_EQ(code_of([&] { w.ids.authenticate("ann", "ann-pw"); }), Errc::account_disabled);
    w.ids.set_disabled(w.admin, "ann", false);
    EXPECT_NO_THROW(w.ids.verify_token(tok, RoleSet::all()));
    EXPECT_EQ(code_of([&] { w.ids.set_disabled(w.admin, "ghost", true); }), Errc::not_found);
}

TEST(Persistence, SaveLoadKeepsCredentialsHashed) {
    oracle::TempDir dir("ids");
    World w;
    w.add("ann", UserRole::forensic_analyst);
    w.ids.save(dir / "users.json");
    const std::string text = oracle::slurp(dir / "users.json");
    EXPECT_EQ(text.find("ann-pw"), std::string::npos);
    EXPECT_EQ(text.find("rootpass1"), std::string::npos);

    IdentityService again(IdentityConfig{"test-key", 600, 10000, [] { return 1000; }}, w.chain);
    again.load(dir / "users.json");
    EXPECT_EQ(again.principals().size(), 2u);
    EXPECT_EQ(again.authenticate("ann", "ann-pw").claims.subject, "principal:ann");
}
