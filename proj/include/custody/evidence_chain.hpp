// Copyright 2026 The Custody Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Deterministic in-process chain hosting the evidence registry contract.
//
// Transactions are executed by a single serial executor (one mutex) and
// packed into blocks stamped by a logical clock. Only successful
// transactions are included: a rejected submission consumes no nonce,
// produces no event and leaves state_root() untouched.
//
// Byte layouts (see canonical.hpp for `field`):
//   tx       = field(u64 nonce) field(sender[20]) field(method name) field(args)
//   tx_hash  = sha256(tx)
//   block    = sha256(parent_hash[32] || u64be number || u64be timestamp || tx_hash...)
//   args(registerEvidence) = field(content_hash[32]) field(cid text) field(u8 type)
//   args(verifyEvidence)   = field(content_hash[32])
//   args(grantRole)        = field(grantee[20]) field(u8 role)

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "custody/common.hpp"
#include "custody/content_store.hpp"

namespace custody::chain {

using content::Cid;
using content::ContentHash;

class ChainAddress {
  public:
    static constexpr std::size_t kSize = 20;

    ChainAddress() = default;
    explicit ChainAddress(const std::array<std::uint8_t, kSize>& bytes) : bytes_(bytes) {}

    static ChainAddress from_bytes(ByteView bytes);
    // Requires the 0x prefix and 40 hex digits.
    static ChainAddress from_hex(std::string_view hex);
    // First 20 bytes of sha256(id).
    static ChainAddress derive(std::string_view id);

    const std::array<std::uint8_t, kSize>& bytes() const { return bytes_; }
    std::string hex() const;

    auto operator<=>(const ChainAddress&) const = default;

  private:
    std::array<std::uint8_t, kSize> bytes_{};
};

enum class EvidenceType : std::uint8_t { image = 0, video = 1, audio = 2, document = 3 };
enum class Role : std::uint8_t { analyst = 0, authority = 1, admin = 2 };
enum class Method : std::uint8_t { register_evidence, verify_evidence, grant_role };
enum class EventName : std::uint8_t { evidence_registered, evidence_verified, role_granted };

std::string_view to_string(EvidenceType t);
std::string_view to_string(Role r);      // ANALYST_ROLE, AUTHORITY_ROLE, ADMIN_ROLE
std::string_view to_string(Method m);    // registerEvidence, verifyEvidence, grantRole
std::string_view to_string(EventName e); // EvidenceRegistered, EvidenceVerified, RoleGranted
EvidenceType parse_evidence_type(std::string_view s);
Role parse_role(std::string_view s);
Method parse_method(std::string_view s);
EventName parse_event_name(std::string_view s);

struct ChainTransaction {
    std::uint64_t nonce = 0;
    ChainAddress sender;
    Method method = Method::register_evidence;
    Bytes args;
    ContentHash tx_hash;

    Bytes encode() const;
    // Decodes and recomputes tx_hash from the encoding.
    static ChainTransaction decode(ByteView encoded);
    static ChainTransaction make(std::uint64_t nonce, const ChainAddress& sender, Method method, Bytes args);
};

Bytes encode_register_args(const ContentHash& hash, const Cid& cid, EvidenceType type);
Bytes encode_verify_args(const ContentHash& hash);
Bytes encode_grant_args(const ChainAddress& grantee, Role role);

struct Block {
    std::uint64_t number = 0;
    std::uint64_t timestamp = 0;
    ContentHash parent_hash;
    std::vector<ContentHash> tx_hashes;
    ContentHash block_hash;

    static ContentHash compute_hash(const ContentHash& parent, std::uint64_t number, std::uint64_t timestamp,
                                    const std::vector<ContentHash>& tx_hashes);
};

struct EvidenceRecord {
    ContentHash content_hash;
    Cid cid = Cid::for_digest(ContentHash{});
    EvidenceType evidence_type = EvidenceType::document;
    ChainAddress analyst;
    std::uint64_t registered_at = 0;
    bool verified = false;
    std::optional<ChainAddress> verifier;
    std::optional<std::uint64_t> verified_at;

    bool operator==(const EvidenceRecord&) const = default;
};

struct ChainEvent {
    EventName name = EventName::evidence_registered;
    std::optional<ContentHash> content_hash;
    std::optional<ChainAddress> subject;  // grantee of RoleGranted
    std::optional<Role> role;
    ContentHash tx_hash;
    std::uint64_t block_number = 0;
    std::uint32_t log_index = 0;

    bool operator==(const ChainEvent&) const = default;
};

struct EventFilter {
    std::optional<EventName> name;
    std::optional<ContentHash> content_hash;
    std::optional<std::uint64_t> from_block;
    std::optional<std::uint64_t> to_block;
};

struct TxReceipt {
    ChainTransaction tx;
    std::uint64_t block_number = 0;
    std::uint64_t block_timestamp = 0;
    std::vector<ChainEvent> events;
};

struct EvidenceReceipt {
    TxReceipt receipt;
    EvidenceRecord record;
};

struct ChainConfig {
    ChainAddress genesis_admin;
    std::uint64_t genesis_time = 0;
    std::uint64_t block_interval = 1;
    std::uint32_t txs_per_block = 1;
};

class EvidenceChain {
  public:
    explicit EvidenceChain(ChainConfig config);

    EvidenceChain(const EvidenceChain&) = delete;
    EvidenceChain& operator=(const EvidenceChain&) = delete;

    EvidenceReceipt submit_register(const ChainAddress& sender, const ContentHash& content_hash, const Cid& cid,
                                    EvidenceType type);
    EvidenceReceipt submit_verify(const ChainAddress& sender, const ContentHash& content_hash);
    TxReceipt grant_role(const ChainAddress& sender, const ChainAddress& grantee, Role role);

    // Replay path: executes a previously recorded transaction. The nonce must
    // be the sender's next nonce; any rejection is Errc::replay_mismatch.
    TxReceipt apply(const ChainTransaction& tx);

    EvidenceRecord get_evidence(const ContentHash& content_hash) const;
    std::optional<EvidenceRecord> find_evidence(const ContentHash& content_hash) const;
    std::vector<EvidenceRecord> all_evidence() const;

    bool has_role(const ChainAddress& address, Role role) const;
    std::set<Role> roles_of(const ChainAddress& address) const;
    std::uint64_t next_nonce(const ChainAddress& address) const;

    ContentHash state_root() const;

    std::vector<ChainEvent> events(const EventFilter& filter = {}) const;
    // Sealed blocks, genesis first.
    std::vector<Block> blocks() const;
    Block head() const;
    // Seals the open block if it holds any transactions (batching mode).
    void seal_block();

    std::vector<ChainTransaction> transactions() const;
    std::size_t transaction_count() const;

    // Called under the executor lock after each accepted transaction.
    void set_tx_sink(std::function<void(const ChainTransaction&)> sink);

    const ChainConfig& config() const { return config_; }

  private:
    struct OpenBlock {
        std::uint64_t number = 0;
        std::uint64_t timestamp = 0;
        std::vector<ContentHash> tx_hashes;
        std::uint32_t next_log_index = 0;
    };

    TxReceipt execute_locked(const ChainTransaction& tx, EvidenceRecord* record_out);
    void seal_locked();
    void open_next_block_locked();
    bool has_role_locked(const ChainAddress& address, Role role) const;

    ChainConfig config_;
    mutable std::shared_mutex mutex_;
    std::map<ContentHash, EvidenceRecord> evidence_;
    std::map<ChainAddress, std::set<Role>> roles_;
    std::map<ChainAddress, std::uint64_t> nonces_;
    std::vector<Block> blocks_;
    OpenBlock open_;
    std::vector<ChainEvent> events_;
    std::vector<ChainTransaction> txs_;
    std::function<void(const ChainTransaction&)> sink_;
};

// Replays a recorded log on a fresh chain built from `config`.
std::unique_ptr<EvidenceChain> replay(const ChainConfig& config, std::span<const ChainTransaction> txs);

// Transaction log: one hex-encoded canonical transaction per line.
std::vector<ChainTransaction> read_tx_log(const std::filesystem::path& path);
std::vector<ChainTransaction> parse_tx_log(std::string_view text);
std::string format_tx_log(std::span<const ChainTransaction> txs);
void write_tx_log(const std::filesystem::path& path, std::span<const ChainTransaction> txs);

// Append-only writer; each line is flushed before append() returns.
class TxLogWriter {
  public:
    explicit TxLogWriter(const std::filesystem::path& path);
    void append(const ChainTransaction& tx);

  private:
    std::mutex mutex_;
    std::ofstream out_;
};

}  // namespace custody::chain
