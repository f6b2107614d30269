// Copyright 2026 The Custody Authors
// SPDX-License-Identifier: Apache-2.0

#include "custody/evidence_chain.hpp"

#include <algorithm>
#include <sstream>

#include "custody/canonical.hpp"
#include "custody/encoding.hpp"
#include "custody/error.hpp"

namespace custody::chain {

namespace {

ByteView view(const ContentHash& h) {
    return h.bytes();
}

ByteView view(const ChainAddress& a) {
    return a.bytes();
}

struct RegisterArgs {
    ContentHash hash;
    Cid cid = Cid::for_digest(ContentHash{});
    EvidenceType type = EvidenceType::document;
};

RegisterArgs decode_register_args(ByteView args) {
    try {
        CanonicalReader r(args);
        RegisterArgs out;
        out.hash = ContentHash::from_bytes(r.field());
        out.cid = Cid::parse(r.text());
        std::uint8_t type = r.byte();
        if (type > static_cast<std::uint8_t>(EvidenceType::document)) {
            fail(Errc::invalid_argument, "unknown evidence type");
        }
        out.type = static_cast<EvidenceType>(type);
        if (!r.done()) fail(Errc::invalid_argument, "trailing bytes in registerEvidence args");
        return out;
    } catch (const Error& e) {
        fail(Errc::invalid_argument, std::string("malformed registerEvidence args: ") + e.what());
    }
}

ContentHash decode_verify_args(ByteView args) {
    try {
        CanonicalReader r(args);
        ContentHash hash = ContentHash::from_bytes(r.field());
        if (!r.done()) fail(Errc::invalid_argument, "trailing bytes");
        return hash;
    } catch (const Error& e) {
        fail(Errc::invalid_argument, std::string("malformed verifyEvidence args: ") + e.what());
    }
}

std::pair<ChainAddress, Role> decode_grant_args(ByteView args) {
    try {
        CanonicalReader r(args);
        ChainAddress grantee = ChainAddress::from_bytes(r.field());
        std::uint8_t role = r.byte();
        if (role > static_cast<std::uint8_t>(Role::admin)) fail(Errc::invalid_argument, "unknown role");
        if (!r.done()) fail(Errc::invalid_argument, "trailing bytes");
        return {grantee, static_cast<Role>(role)};
    } catch (const Error& e) {
        fail(Errc::invalid_argument, std::string("malformed grantRole args: ") + e.what());
    }
}

}  // namespace

ChainAddress ChainAddress::from_bytes(ByteView bytes) {
    if (bytes.size() != kSize) fail(Errc::invalid_argument, "chain address must be 20 bytes");
    std::array<std::uint8_t, kSize> out{};
    std::copy(bytes.begin(), bytes.end(), out.begin());
    return ChainAddress(out);
}

ChainAddress ChainAddress::from_hex(std::string_view hex) {
    if (hex.size() != 2 + 2 * kSize || hex.substr(0, 2) != "0x") {
        fail(Errc::invalid_argument, "chain address must be 0x followed by 40 hex digits");
    }
    try {
        return from_bytes(custody::from_hex(hex.substr(2)));
    } catch (const Error&) {
        fail(Errc::invalid_argument, "chain address contains non-hex characters");
    }
}

ChainAddress ChainAddress::derive(std::string_view id) {
    ContentHash h = content::sha256(id);
    return from_bytes(ByteView(h.bytes()).first(kSize));
}

std::string ChainAddress::hex() const {
    return "0x" + to_hex(bytes_);
}

std::string_view to_string(EvidenceType t) {
    switch (t) {
        case EvidenceType::image: return "image";
        case EvidenceType::video: return "video";
        case EvidenceType::audio: return "audio";
        case EvidenceType::document: return "document";
    }
    return "unknown";
}

std::string_view to_string(Role r) {
    switch (r) {
        case Role::analyst: return "ANALYST_ROLE";
        case Role::authority: return "AUTHORITY_ROLE";
        case Role::admin: return "ADMIN_ROLE";
    }
    return "unknown";
}

std::string_view to_string(Method m) {
    switch (m) {
        case Method::register_evidence: return "registerEvidence";
        case Method::verify_evidence: return "verifyEvidence";
        case Method::grant_role: return "grantRole";
    }
    return "unknown";
}

std::string_view to_string(EventName e) {
    switch (e) {
        case EventName::evidence_registered: return "EvidenceRegistered";
        case EventName::evidence_verified: return "EvidenceVerified";
        case EventName::role_granted: return "RoleGranted";
    }
    return "unknown";
}

EvidenceType parse_evidence_type(std::string_view s) {
    for (auto t : {EvidenceType::image, EvidenceType::video, EvidenceType::audio, EvidenceType::document}) {
        if (to_string(t) == s) return t;
    }
    fail(Errc::invalid_argument, "unknown evidence type '" + std::string(s) + "'");
}

Role parse_role(std::string_view s) {
    for (auto r : {Role::analyst, Role::authority, Role::admin}) {
        if (to_string(r) == s) return r;
    }
    fail(Errc::invalid_argument, "unknown chain role '" + std::string(s) + "'");
}

Method parse_method(std::string_view s) {
    for (auto m : {Method::register_evidence, Method::verify_evidence, Method::grant_role}) {
        if (to_string(m) == s) return m;
    }
    fail(Errc::invalid_argument, "unknown method '" + std::string(s) + "'");
}

EventName parse_event_name(std::string_view s) {
    for (auto e : {EventName::evidence_registered, EventName::evidence_verified, EventName::role_granted}) {
        if (to_string(e) == s) return e;
    }
    fail(Errc::invalid_argument, "unknown event '" + std::string(s) + "'");
}

Bytes ChainTransaction::encode() const {
    CanonicalWriter w;
    w.integer(nonce).field(view(sender)).text(to_string(method)).field(args);
    return std::move(w).bytes();
}

ChainTransaction ChainTransaction::make(std::uint64_t nonce, const ChainAddress& sender, Method method, Bytes args) {
    ChainTransaction tx;
    tx.nonce = nonce;
    tx.sender = sender;
    tx.method = method;
    tx.args = std::move(args);
    tx.tx_hash = content::sha256(tx.encode());
    return tx;
}

ChainTransaction ChainTransaction::decode(ByteView encoded) {
    CanonicalReader r(encoded);
    std::uint64_t nonce = r.integer();
    ChainAddress sender = ChainAddress::from_bytes(r.field());
    Method method = parse_method(r.text());
    ByteView args = r.field();
    if (!r.done()) fail(Errc::parse_error, "trailing bytes after transaction");
    return make(nonce, sender, method, Bytes(args.begin(), args.end()));
}

Bytes encode_register_args(const ContentHash& hash, const Cid& cid, EvidenceType type) {
    CanonicalWriter w;
    w.field(view(hash)).text(cid.text()).byte(static_cast<std::uint8_t>(type));
    return std::move(w).bytes();
}

Bytes encode_verify_args(const ContentHash& hash) {
    CanonicalWriter w;
    w.field(view(hash));
    return std::move(w).bytes();
}

Bytes encode_grant_args(const ChainAddress& grantee, Role role) {
    CanonicalWriter w;
    w.field(view(grantee)).byte(static_cast<std::uint8_t>(role));
    return std::move(w).bytes();
}

ContentHash Block::compute_hash(const ContentHash& parent, std::uint64_t number, std::uint64_t timestamp,
                                const std::vector<ContentHash>& tx_hashes) {
    Bytes buf(parent.bytes().begin(), parent.bytes().end());
    put_u64be(buf, number);
    put_u64be(buf, timestamp);
    for (const auto& h : tx_hashes) buf.insert(buf.end(), h.bytes().begin(), h.bytes().end());
    return content::sha256(buf);
}

EvidenceChain::EvidenceChain(ChainConfig config) : config_(config) {
    if (config_.block_interval == 0) fail(Errc::invalid_argument, "block interval must be positive");
    if (config_.txs_per_block == 0) fail(Errc::invalid_argument, "txs_per_block must be positive");
    roles_[config_.genesis_admin].insert(Role::admin);
    Block genesis;
    genesis.number = 0;
    genesis.timestamp = config_.genesis_time;
    genesis.block_hash = Block::compute_hash(genesis.parent_hash, 0, genesis.timestamp, {});
    blocks_.push_back(genesis);
    open_next_block_locked();
}

void EvidenceChain::open_next_block_locked() {
    const Block& parent = blocks_.back();
    open_ = OpenBlock{parent.number + 1, parent.timestamp + config_.block_interval, {}, 0};
}

void EvidenceChain::seal_locked() {
    Block b;
    b.number = open_.number;
    b.timestamp = open_.timestamp;
    b.parent_hash = blocks_.back().block_hash;
    b.tx_hashes = std::move(open_.tx_hashes);
    b.block_hash = Block::compute_hash(b.parent_hash, b.number, b.timestamp, b.tx_hashes);
    blocks_.push_back(std::move(b));
    open_next_block_locked();
}

void EvidenceChain::seal_block() {
    std::unique_lock lock(mutex_);
    if (!open_.tx_hashes.empty()) seal_locked();
}

bool EvidenceChain::has_role_locked(const ChainAddress& address, Role role) const {
    auto it = roles_.find(address);
    return it != roles_.end() && it->second.contains(role);
}

TxReceipt EvidenceChain::execute_locked(const ChainTransaction& tx, EvidenceRecord* record_out) {
    TxReceipt receipt;
    receipt.tx = tx;
    receipt.block_number = open_.number;
    receipt.block_timestamp = open_.timestamp;

    auto make_event = [&](EventName name) {
        ChainEvent e;
        e.name = name;
        e.tx_hash = tx.tx_hash;
        e.block_number = open_.number;
        return e;
    };

    // Validate everything first; state is only touched once the tx is known to succeed.
    std::optional<ChainEvent> event;
    std::function<void()> commit;
    switch (tx.method) {
        case Method::register_evidence: {
            RegisterArgs a = decode_register_args(tx.args);
            if (a.cid.digest() != a.hash) fail(Errc::invalid_argument, "CID does not address the content hash");
            if (!has_role_locked(tx.sender, Role::analyst)) {
                fail(Errc::unauthorized, tx.sender.hex() + " lacks ANALYST_ROLE");
            }
            if (evidence_.contains(a.hash)) fail(Errc::duplicate_evidence, "evidence " + a.hash.hex() + " already registered");
            EvidenceRecord rec;
            rec.content_hash = a.hash;
            rec.cid = a.cid;
            rec.evidence_type = a.type;
            rec.analyst = tx.sender;
            rec.registered_at = open_.timestamp;
            event = make_event(EventName::evidence_registered);
            event->content_hash = a.hash;
            commit = [this, rec, record_out] {
                evidence_.emplace(rec.content_hash, rec);
                if (record_out) *record_out = rec;
            };
            break;
        }
        case Method::verify_evidence: {
            ContentHash hash = decode_verify_args(tx.args);
            if (!has_role_locked(tx.sender, Role::authority)) {
                fail(Errc::unauthorized, tx.sender.hex() + " lacks AUTHORITY_ROLE");
            }
            auto it = evidence_.find(hash);
            if (it == evidence_.end()) fail(Errc::not_found, "evidence " + hash.hex() + " is not registered");
            if (it->second.verified) fail(Errc::already_verified, "evidence " + hash.hex() + " is already verified");
            event = make_event(EventName::evidence_verified);
            event->content_hash = hash;
            commit = [this, it, sender = tx.sender, record_out] {
                it->second.verified = true;
                it->second.verifier = sender;
                it->second.verified_at = open_.timestamp;
                if (record_out) *record_out = it->second;
            };
            break;
        }
        case Method::grant_role: {
            auto [grantee, role] = decode_grant_args(tx.args);
            if (!has_role_locked(tx.sender, Role::admin)) {
                fail(Errc::unauthorized, tx.sender.hex() + " lacks ADMIN_ROLE");
            }
            event = make_event(EventName::role_granted);
            event->subject = grantee;
            event->role = role;
            commit = [this, grantee, role] { roles_[grantee].insert(role); };
            break;
        }
    }

    commit();
    nonces_[tx.sender] = tx.nonce + 1;
    event->log_index = open_.next_log_index++;
    events_.push_back(*event);
    receipt.events.push_back(*event);
    txs_.push_back(tx);
    open_.tx_hashes.push_back(tx.tx_hash);
    if (sink_) sink_(tx);
    if (open_.tx_hashes.size() >= config_.txs_per_block) seal_locked();
    return receipt;
}

EvidenceReceipt EvidenceChain::submit_register(const ChainAddress& sender, const ContentHash& content_hash,
                                               const Cid& cid, EvidenceType type) {
    std::unique_lock lock(mutex_);
    auto tx = ChainTransaction::make(nonces_[sender], sender, Method::register_evidence,
                                     encode_register_args(content_hash, cid, type));
    EvidenceReceipt out;
    out.receipt = execute_locked(tx, &out.record);
    return out;
}

EvidenceReceipt EvidenceChain::submit_verify(const ChainAddress& sender, const ContentHash& content_hash) {
    std::unique_lock lock(mutex_);
    auto tx = ChainTransaction::make(nonces_[sender], sender, Method::verify_evidence, encode_verify_args(content_hash));
    EvidenceReceipt out;
    out.receipt = execute_locked(tx, &out.record);
    return out;
}

TxReceipt EvidenceChain::grant_role(const ChainAddress& sender, const ChainAddress& grantee, Role role) {
    std::unique_lock lock(mutex_);
    auto tx = ChainTransaction::make(nonces_[sender], sender, Method::grant_role, encode_grant_args(grantee, role));
    return execute_locked(tx, nullptr);
}

TxReceipt EvidenceChain::apply(const ChainTransaction& tx) {
    std::unique_lock lock(mutex_);
    if (content::sha256(tx.encode()) != tx.tx_hash) {
        fail(Errc::replay_mismatch, "transaction hash does not match its encoding");
    }
    auto it = nonces_.find(tx.sender);
    const std::uint64_t expected = it == nonces_.end() ? 0 : it->second;
    if (tx.nonce != expected) {
        fail(Errc::replay_mismatch, "nonce gap for " + tx.sender.hex() + ": expected " + std::to_string(expected) +
                                        ", got " + std::to_string(tx.nonce));
    }
    try {
        return execute_locked(tx, nullptr);
    } catch (const Error& e) {
        fail(Errc::replay_mismatch, "recorded transaction " + tx.tx_hash.hex() + " rejected: " +
                                        std::string(to_string(e.code())) + ": " + e.what());
    }
}

EvidenceRecord EvidenceChain::get_evidence(const ContentHash& content_hash) const {
    auto rec = find_evidence(content_hash);
    if (!rec) fail(Errc::not_found, "evidence " + content_hash.hex() + " is not registered");
    return *rec;
}

std::optional<EvidenceRecord> EvidenceChain::find_evidence(const ContentHash& content_hash) const {
    std::shared_lock lock(mutex_);
    auto it = evidence_.find(content_hash);
    if (it == evidence_.end()) return std::nullopt;
    return it->second;
}

std::vector<EvidenceRecord> EvidenceChain::all_evidence() const {
    std::shared_lock lock(mutex_);
    std::vector<EvidenceRecord> out;
    out.reserve(evidence_.size());
    for (const auto& [_, rec] : evidence_) out.push_back(rec);
    return out;
}

bool EvidenceChain::has_role(const ChainAddress& address, Role role) const {
    std::shared_lock lock(mutex_);
    return has_role_locked(address, role);
}

std::set<Role> EvidenceChain::roles_of(const ChainAddress& address) const {
    std::shared_lock lock(mutex_);
    auto it = roles_.find(address);
    return it == roles_.end() ? std::set<Role>{} : it->second;
}

std::uint64_t EvidenceChain::next_nonce(const ChainAddress& address) const {
    std::shared_lock lock(mutex_);
    auto it = nonces_.find(address);
    return it == nonces_.end() ? 0 : it->second;
}

ContentHash EvidenceChain::state_root() const {
    std::shared_lock lock(mutex_);
    CanonicalWriter w;
    w.text("evidence").integer(evidence_.size());
    for (const auto& [hash, rec] : evidence_) {
        w.field(view(hash))
            .text(rec.cid.text())
            .byte(static_cast<std::uint8_t>(rec.evidence_type))
            .field(view(rec.analyst))
            .integer(rec.registered_at)
            .byte(rec.verified ? 1 : 0);
        if (rec.verifier) {
            w.field(view(*rec.verifier));
        } else {
            w.field({});
        }
        if (rec.verified_at) {
            w.integer(*rec.verified_at);
        } else {
            w.field({});
        }
    }
    w.text("roles").integer(roles_.size());
    for (const auto& [addr, roles] : roles_) {
        Bytes role_bytes;
        for (Role r : roles) role_bytes.push_back(static_cast<std::uint8_t>(r));
        w.field(view(addr)).field(role_bytes);
    }
    return content::sha256(w.bytes());
}

std::vector<ChainEvent> EvidenceChain::events(const EventFilter& filter) const {
    std::shared_lock lock(mutex_);
    std::vector<ChainEvent> out;
    for (const auto& e : events_) {
        if (filter.name && e.name != *filter.name) continue;
        if (filter.content_hash && e.content_hash != filter.content_hash) continue;
        if (filter.from_block && e.block_number < *filter.from_block) continue;
        if (filter.to_block && e.block_number > *filter.to_block) continue;
        out.push_back(e);
    }
    return out;
}

std::vector<Block> EvidenceChain::blocks() const {
    std::shared_lock lock(mutex_);
    return blocks_;
}

Block EvidenceChain::head() const {
    std::shared_lock lock(mutex_);
    return blocks_.back();
}

std::vector<ChainTransaction> EvidenceChain::transactions() const {
    std::shared_lock lock(mutex_);
    return txs_;
}

std::size_t EvidenceChain::transaction_count() const {
    std::shared_lock lock(mutex_);
    return txs_.size();
}

void EvidenceChain::set_tx_sink(std::function<void(const ChainTransaction&)> sink) {
    std::unique_lock lock(mutex_);
    sink_ = std::move(sink);
}

std::unique_ptr<EvidenceChain> replay(const ChainConfig& config, std::span<const ChainTransaction> txs) {
    auto chain = std::make_unique<EvidenceChain>(config);
    for (const auto& tx : txs) chain->apply(tx);
    return chain;
}

std::vector<ChainTransaction> parse_tx_log(std::string_view text) {
    std::vector<ChainTransaction> out;
    std::size_t line_no = 0;
    while (!text.empty()) {
        std::size_t nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        try {
            out.push_back(ChainTransaction::decode(from_hex(line)));
        } catch (const Error& e) {
            fail(Errc::parse_error, "tx log line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<ChainTransaction> read_tx_log(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::not_found, "cannot open tx log " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_tx_log(ss.str());
}

std::string format_tx_log(std::span<const ChainTransaction> txs) {
    std::string out;
    for (const auto& tx : txs) {
        out += to_hex(tx.encode());
        out += '\n';
    }
    return out;
}

void write_tx_log(const std::filesystem::path& path, std::span<const ChainTransaction> txs) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::storage_failure, "cannot write tx log " + path.string());
    out << format_tx_log(txs);
    if (!out) fail(Errc::storage_failure, "write failed for tx log " + path.string());
}

TxLogWriter::TxLogWriter(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::app) {
    if (!out_) fail(Errc::storage_failure, "cannot open tx log " + path.string());
}

void TxLogWriter::append(const ChainTransaction& tx) {
    std::lock_guard lock(mutex_);
    out_ << to_hex(tx.encode()) << '\n';
    out_.flush();
    if (!out_) fail(Errc::storage_failure, "tx log append failed");
}

}  // namespace custody::chain
