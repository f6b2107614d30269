// Copyright 2026 The Custody Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <chrono>
#include <map>
#include <random>
#include <set>
#include <thread>

#include "custody/error.hpp"
#include "custody/evidence_chain.hpp"
#include "oracles.hpp"

using namespace custody;
using namespace custody::chain;

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

ContentHash hash_of(const std::string& s) {
    return content::sha256(std::string_view(s));
}

Cid cid_of(const std::string& s) {
    return content::derive_cid(as_bytes(s));
}

// Manual canonical field: u32 big-endian length then payload.
void field(Bytes& out, ByteView payload) {
    const auto n = static_cast<std::uint32_t>(payload.size());
    for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(n >> s));
    out.insert(out.end(), payload.begin(), payload.end());
}

Bytes u64be(std::uint64_t v) {
    Bytes b;
    for (int s = 56; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(v >> s));
    return b;
}

struct Fixture {
    ChainAddress admin = ChainAddress::derive("admin");
    ChainAddress analyst = ChainAddress::derive("analyst");
    ChainAddress analyst2 = ChainAddress::derive("analyst2");
    ChainAddress authority = ChainAddress::derive("authority");
    ChainAddress outsider = ChainAddress::derive("outsider");
    std::unique_ptr<EvidenceChain> chain;

    explicit Fixture(ChainConfig cfg = {}) {
        cfg.genesis_admin = admin;
        chain = std::make_unique<EvidenceChain>(cfg);
        chain->grant_role(admin, analyst, Role::analyst);
        chain->grant_role(admin, analyst2, Role::analyst);
        chain->grant_role(admin, authority, Role::authority);
    }
};

}  // namespace

TEST(ChainAddress, HexRoundTrip) {
    const auto a = ChainAddress::derive("x");
    EXPECT_EQ(a.hex().size(), 42u);
    EXPECT_EQ(a.hex().substr(0, 2), "0x");
    EXPECT_EQ(ChainAddress::from_hex(a.hex()), a);
    EXPECT_EQ(code_of([] { ChainAddress::from_hex("1234"); }), Errc::invalid_argument);
    const auto digest = content::sha256(std::string_view("x"));
    EXPECT_TRUE(std::equal(a.bytes().begin(), a.bytes().end(), digest.bytes().begin()));
}

TEST(ChainTransaction, HashIsSha256OfDocumentedLayout) {
    const auto sender = ChainAddress::derive("s");
    const auto h = hash_of("payload");
    const Bytes args = encode_verify_args(h);
    const auto tx = ChainTransaction::make(7, sender, Method::verify_evidence, args);

    Bytes expect_args;
    field(expect_args, h.bytes());
    EXPECT_EQ(args, expect_args);

    Bytes enc;
    field(enc, u64be(7));
    field(enc, sender.bytes());
    field(enc, as_bytes("verifyEvidence"));
    field(enc, expect_args);
    EXPECT_EQ(tx.encode(), enc);
    EXPECT_EQ(tx.tx_hash, content::sha256(enc));
    EXPECT_EQ(ChainTransaction::decode(enc).tx_hash, tx.tx_hash);
}

TEST(Block, GenesisAndHashLayout) {
    Fixture f;
    const auto blocks = f.chain->blocks();
    ASSERT_EQ(blocks.size(), 4u);  // genesis + 3 grants
    EXPECT_EQ(blocks[0].number, 0u);
    EXPECT_EQ(blocks[0].timestamp, 0u);
    for (std::size_t i = 1; i < blocks.size(); ++i) {
        EXPECT_EQ(blocks[i].number, i);
        EXPECT_EQ(blocks[i].timestamp, i);
        EXPECT_EQ(blocks[i].parent_hash, blocks[i - 1].block_hash);
        ASSERT_EQ(blocks[i].tx_hashes.size(), 1u);
        Bytes buf(blocks[i].parent_hash.bytes().begin(), blocks[i].parent_hash.bytes().end());
        for (auto b : u64be(i)) buf.push_back(b);
        for (auto b : u64be(i)) buf.push_back(b);
        buf.insert(buf.end(), blocks[i].tx_hashes[0].bytes().begin(), blocks[i].tx_hashes[0].bytes().end());
        EXPECT_EQ(blocks[i].block_hash, content::sha256(buf));
    }
}

TEST(StateRoot, EmptyRegistryConstant) {
    ChainConfig cfg;
    cfg.genesis_admin = ChainAddress::derive("admin");
    EvidenceChain c(cfg);
    Bytes enc;
    field(enc, as_bytes("evidence"));
    field(enc, u64be(0));
    field(enc, as_bytes("roles"));
    field(enc, u64be(1));
    field(enc, cfg.genesis_admin.bytes());
    enc.insert(enc.end(), {0, 0, 0, 1, 2});  // role set {ADMIN_ROLE}
    EXPECT_EQ(c.state_root(), content::sha256(enc));
}

TEST(Register, HappyPathRecordAndEvent) {
    Fixture f;
    const auto r = f.chain->submit_register(f.analyst, hash_of("a"), cid_of("a"), EvidenceType::image);
    EXPECT_FALSE(r.record.verified);
    EXPECT_EQ(r.record.analyst, f.analyst);
    EXPECT_EQ(r.record.registered_at, r.receipt.block_timestamp);
    ASSERT_EQ(r.receipt.events.size(), 1u);
    EXPECT_EQ(r.receipt.events[0].name, EventName::evidence_registered);
    EXPECT_EQ(r.receipt.events[0].content_hash, hash_of("a"));
    EXPECT_EQ(f.chain->get_evidence(hash_of("a")), r.record);
}

TEST(Register, RejectsDuplicateFromAnyAnalyst) {
    Fixture f;
    f.chain->submit_register(f.analyst, hash_of("a"), cid_of("a"), EvidenceType::image);
    EXPECT_EQ(code_of([&] { f.chain->submit_register(f.analyst, hash_of("a"), cid_of("a"), EvidenceType::image); }),
              Errc::duplicate_evidence);
    EXPECT_EQ(code_of([&] { f.chain->submit_register(f.analyst2, hash_of("a"), cid_of("a"), EvidenceType::video); }),
              Errc::duplicate_evidence);
}

TEST(Register, RoleGateAndCidMismatch) {
    Fixture f;
    EXPECT_EQ(code_of([&] { f.chain->submit_register(f.outsider, hash_of("a"), cid_of("a"), EvidenceType::image); }),
              Errc::unauthorized);
    EXPECT_EQ(code_of([&] { f.chain->submit_register(f.authority, hash_of("a"), cid_of("a"), EvidenceType::image); }),
              Errc::unauthorized);
    EXPECT_EQ(code_of([&] { f.chain->submit_register(f.analyst, hash_of("a"), cid_of("b"), EvidenceType::image); }),
              Errc::invalid_argument);
}

TEST(Verify, LifecycleAndErrors) {
    Fixture f;
    EXPECT_EQ(code_of([&] { f.chain->submit_verify(f.authority, hash_of("a")); }), Errc::not_found);
    const auto reg = f.chain->submit_register(f.analyst, hash_of("a"), cid_of("a"), EvidenceType::audio);
    EXPECT_EQ(code_of([&] { f.chain->submit_verify(f.analyst, hash_of("a")); }), Errc::unauthorized);
    const auto ver = f.chain->submit_verify(f.authority, hash_of("a"));
    EXPECT_TRUE(ver.record.verified);
    EXPECT_EQ(ver.record.verifier, f.authority);
    EXPECT_GE(*ver.record.verified_at, reg.record.registered_at);
    EXPECT_EQ(ver.receipt.events.at(0).name, EventName::evidence_verified);
    EXPECT_EQ(code_of([&] { f.chain->submit_verify(f.authority, hash_of("a")); }), Errc::already_verified);
    EXPECT_EQ(code_of([&] { f.chain->get_evidence(hash_of("zzz")); }), Errc::not_found);
}

TEST(GrantRole, AdminOnlyAndIdempotentWithEvent) {
    Fixture f;
    EXPECT_EQ(code_of([&] { f.chain->grant_role(f.analyst, f.outsider, Role::analyst); }), Errc::unauthorized);
    const auto before = f.chain->events({EventName::role_granted}).size();
    f.chain->grant_role(f.admin, f.analyst, Role::analyst);
    EXPECT_EQ(f.chain->events({EventName::role_granted}).size(), before + 1);
    EXPECT_EQ(f.chain->roles_of(f.analyst), std::set<Role>{Role::analyst});
}

TEST(FailedTransactions, LeaveNoTrace) {
    Fixture f;
    f.chain->submit_register(f.analyst, hash_of("a"), cid_of("a"), EvidenceType::image);
    const auto root = f.chain->state_root();
    const auto nonce = f.chain->next_nonce(f.analyst);
    const auto events = f.chain->events().size();
    const auto txs = f.chain->transaction_count();
    const auto head = f.chain->head().block_hash;
    EXPECT_TRUE(code_of([&] { f.chain->submit_register(f.analyst, hash_of("a"), cid_of("a"), EvidenceType::image); }));
    EXPECT_TRUE(code_of([&] { f.chain->submit_verify(f.analyst, hash_of("a")); }));
    EXPECT_TRUE(code_of([&] { f.chain->submit_verify(f.authority, hash_of("nope")); }));
    EXPECT_EQ(f.chain->state_root(), root);
    EXPECT_EQ(f.chain->next_nonce(f.analyst), nonce);
    EXPECT_EQ(f.chain->events().size(), events);
    EXPECT_EQ(f.chain->transaction_count(), txs);
    EXPECT_EQ(f.chain->head().block_hash, head);
}

// Random operation sequences checked against a plain set-based model.
TEST(Property, MatchesReferenceModelUnderRandomOperations) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Fixture f;
        std::mt19937_64 rng(seed);
        std::map<ContentHash, bool> model;  // hash -> verified
        std::size_t ok_ops = 0;
        const ChainAddress senders[] = {f.analyst, f.analyst2, f.authority, f.outsider};
        for (int step = 0; step < 150; ++step) {
            const std::string key = "item" + std::to_string(rng() % 25);
            const ContentHash h = hash_of(key);
            const ChainAddress& who = senders[rng() % 4];
            const bool reg = rng() % 2 == 0;
            const auto root_before = f.chain->state_root();
            std::optional<Errc> got;
            if (reg) {
                got = code_of([&] { f.chain->submit_register(who, h, cid_of(key), EvidenceType::document); });
                const bool analyst = who == f.analyst || who == f.analyst2;
                const std::optional<Errc> want = !analyst ? std::optional(Errc::unauthorized)
                                                 : model.contains(h) ? std::optional(Errc::duplicate_evidence)
                                                                     : std::nullopt;
                ASSERT_EQ(got, want) << "seed " << seed << " step " << step;
                if (!want) model[h] = false;
            } else {
                got = code_of([&] { f.chain->submit_verify(who, h); });
                const std::optional<Errc> want = who != f.authority ? std::optional(Errc::unauthorized)
                                                 : !model.contains(h) ? std::optional(Errc::not_found)
                                                 : model[h]           ? std::optional(Errc::already_verified)
                                                                      : std::nullopt;
                ASSERT_EQ(got, want) << "seed " << seed << " step " << step;
                if (!want) model[h] = true;
            }
            if (got) {
                ASSERT_EQ(f.chain->state_root(), root_before);
            } else {
                ++ok_ops;
            }
        }
        const auto all = f.chain->all_evidence();
        ASSERT_EQ(all.size(), model.size());
        for (const auto& r : all) {
            EXPECT_EQ(r.verified, model.at(r.content_hash));
            if (r.verified) EXPECT_GE(*r.verified_at, r.registered_at);
        }
        // 3 grants plus every accepted op, one event each.
        EXPECT_EQ(f.chain->events().size(), 3 + ok_ops);
        EXPECT_EQ(f.chain->transaction_count(), 3 + ok_ops);
    }
}

TEST(Concurrency, MappingGuardHoldsUnderContention) {
    Fixture f;
    std::atomic<int> accepted{0}, dupes{0};
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&, t] {
            const ChainAddress& who = t % 2 ? f.analyst : f.analyst2;
            for (int i = 0; i < 50; ++i) {
                const std::string key = "shared" + std::to_string((i * 7 + t) % 50);
                const auto c = code_of([&] { f.chain->submit_register(who, hash_of(key), cid_of(key), EvidenceType::video); });
                if (!c) {
                    ++accepted;
                } else if (*c == Errc::duplicate_evidence) {
                    ++dupes;
                }
            }
        });
    }
    for (auto& t : threads) t.join();
    EXPECT_EQ(accepted.load(), 50);
    EXPECT_EQ(dupes.load(), 8 * 50 - 50);
    EXPECT_EQ(f.chain->all_evidence().size(), 50u);
    EXPECT_EQ(f.chain->events({EventName::evidence_registered}).size(), 50u);
    // Nonces have no gaps: each analyst's count equals its accepted txs.
    std::size_t by_a = 0, by_b = 0;
    for (const auto& tx : f.chain->transactions()) {
        by_a += tx.sender == f.analyst;
        by_b += tx.sender == f.analyst2;
    }
    EXPECT_EQ(f.chain->next_nonce(f.analyst), by_a);
    EXPECT_EQ(f.chain->next_nonce(f.analyst2), by_b);
}

TEST(Replay, ReproducesEverythingBitForBit) {
    Fixture f;
    for (int i = 0; i < 200; ++i) {
        const std::string key = "r" + std::to_string(i);
        f.chain->submit_register(i % 2 ? f.analyst : f.analyst2, hash_of(key), cid_of(key), EvidenceType::image);
        if (i % 3 == 0) f.chain->submit_verify(f.authority, hash_of(key));
    }
    const auto txs = f.chain->transactions();
    const auto copy = replay(f.chain->config(), txs);
    EXPECT_EQ(copy->state_root(), f.chain->state_root());
    const auto a = f.chain->blocks(), b = copy->blocks();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].block_hash, b[i].block_hash);
        EXPECT_EQ(a[i].tx_hashes, b[i].tx_hashes);
    }
    EXPECT_EQ(copy->events(), f.chain->events());
}

TEST(Replay, LogFileRoundTrip) {
    oracle::TempDir dir("chain");
    Fixture f;
    const auto log = dir / "tx.log";
    {
        TxLogWriter w(log);
        f.chain->set_tx_sink([&](const ChainTransaction& tx) { w.append(tx); });
        for (int i = 0; i < 10; ++i) {
            const std::string key = "l" + std::to_string(i);
            f.chain->submit_register(f.analyst, hash_of(key), cid_of(key), EvidenceType::audio);
        }
        f.chain->set_tx_sink(nullptr);
    }
    const auto read = read_tx_log(log);
    ASSERT_EQ(read.size(), 10u);
    EXPECT_EQ(parse_tx_log(format_tx_log(read)).size(), 10u);
    // Only the 10 logged registrations: replay needs the grants too.
    std::vector<ChainTransaction> all = f.chain->transactions();
    EXPECT_EQ(replay(f.chain->config(), all)->state_root(), f.chain->state_root());
    EXPECT_EQ(code_of([&] { replay(f.chain->config(), read); }), Errc::replay_mismatch);
}

TEST(Replay, TamperedOrReorderedLogsDiverge) {
    Fixture f;
    f.chain->submit_register(f.analyst, hash_of("x"), cid_of("x"), EvidenceType::image);
    f.chain->submit_register(f.analyst2, hash_of("y"), cid_of("y"), EvidenceType::image);
    auto txs = f.chain->transactions();

    auto swapped = txs;
    std::swap(swapped[3], swapped[4]);  // two different senders: both still valid
    const auto other = replay(f.chain->config(), swapped);
    EXPECT_NE(other->state_root(), f.chain->state_root());

    auto tampered = txs;
    tampered[3].args.back() ^= 1;
    EXPECT_EQ(code_of([&] { replay(f.chain->config(), tampered); }), Errc::replay_mismatch);

    std::string text = format_tx_log(txs);
    text[10] = text[10] == 'a' ? 'b' : 'a';
    EXPECT_TRUE(code_of([&] { replay(f.chain->config(), parse_tx_log(text)); }));
}

TEST(Batching, SeveralTransactionsPerBlock) {
    ChainConfig cfg;
    cfg.txs_per_block = 3;
    cfg.genesis_time = 1000;
    cfg.block_interval = 5;
    Fixture f(cfg);  // 3 grants fill block 1
    f.chain->submit_register(f.analyst, hash_of("p"), cid_of("p"), EvidenceType::image);
    f.chain->submit_register(f.analyst, hash_of("q"), cid_of("q"), EvidenceType::image);
    EXPECT_EQ(f.chain->blocks().size(), 2u);
    f.chain->seal_block();
    const auto blocks = f.chain->blocks();
    ASSERT_EQ(blocks.size(), 3u);
    EXPECT_EQ(blocks[1].tx_hashes.size(), 3u);
    EXPECT_EQ(blocks[2].tx_hashes.size(), 2u);
    EXPECT_EQ(blocks[2].timestamp, 1010u);
    EXPECT_EQ(f.chain->get_evidence(hash_of("q")).registered_at, 1010u);
    const auto evs = f.chain->events({std::nullopt, std::nullopt, 2, 2});
    ASSERT_EQ(evs.size(), 2u);
    EXPECT_EQ(evs[0].log_index, 0u);
    EXPECT_EQ(evs[1].log_index, 1u);
}

TEST(Events, FilterByNameHashAndRange) {
    Fixture f;
    f.chain->submit_register(f.analyst, hash_of("e1"), cid_of("e1"), EvidenceType::image);
    f.chain->submit_register(f.analyst, hash_of("e2"), cid_of("e2"), EvidenceType::image);
    f.chain->submit_verify(f.authority, hash_of("e1"));
    EXPECT_EQ(f.chain->events({EventName::evidence_registered}).size(), 2u);
    EXPECT_EQ(f.chain->events({std::nullopt, hash_of("e1")}).size(), 2u);
    EXPECT_EQ(f.chain->events({std::nullopt, std::nullopt, 5, 6}).size(), 2u);
}
