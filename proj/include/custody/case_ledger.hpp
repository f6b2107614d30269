// Copyright 2026 The Custody Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// System of record for detection events, mirrored evidence, cases and the
// audit log.
//
// Storage is an append-only journal: one JSON object per line, "type" first
// ("detection" | "evidence" | "case" | "audit"). Opening a journal replays it
// into in-memory indexes; later lines for the same evidence hash or case id
// supersede earlier ones. The ledger is a cache of chain truth: when a
// mirror disagrees with the chain, the chain value is kept and
// Errc::consistency_error is raised.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "json.hpp"

#include "custody/common.hpp"
#include "custody/evidence_chain.hpp"

namespace custody::ledger {

using chain::ChainAddress;
using chain::EvidenceRecord;
using content::ContentHash;

enum class Verdict : std::uint8_t { real, fake };
std::string_view to_string(Verdict v);
Verdict parse_verdict(std::string_view s);

struct DetectionEvent {
    std::string id;  // assigned by record_detection when empty
    std::string principal_id;
    Modality modality = Modality::image;
    ContentHash media_hash;
    double score = 0.0;
    double threshold = 0.5;
    Verdict verdict = Verdict::real;
    std::string detector_id;
    std::int64_t created_at = 0;  // assigned from the ledger clock when 0
    bool casework = true;         // false for NORMAL_USER detections
};

struct EvidenceView {
    EvidenceRecord record;
    ContentHash register_tx;
    std::uint64_t register_block = 0;
    std::optional<ContentHash> verify_tx;
    std::optional<std::uint64_t> verify_block;

    bool operator==(const EvidenceView&) const = default;
};

enum class CaseStatus : std::uint8_t { open, submitted, verified, closed };
std::string_view to_string(CaseStatus s);
CaseStatus parse_case_status(std::string_view s);

struct CaseRecord {
    std::string id;
    std::string title;
    std::string owner;  // principal id of the owning analyst
    std::vector<ContentHash> evidence;
    CaseStatus status = CaseStatus::open;
    std::int64_t created_at = 0;
};

struct AuditEntry {
    std::uint64_t seq = 0;
    std::string actor;
    std::string action;
    std::string subject;
    std::int64_t timestamp = 0;
    std::optional<ContentHash> tx_hash;

    bool operator==(const AuditEntry&) const = default;
};

struct EvidenceFilter {
    std::optional<chain::EvidenceType> type;
    std::optional<bool> verified;
    std::optional<ChainAddress> analyst;
    std::optional<std::uint64_t> registered_from;  // inclusive
    std::optional<std::uint64_t> registered_to;    // inclusive
};

struct Page {
    std::size_t offset = 0;
    std::size_t limit = std::numeric_limits<std::size_t>::max();
};

class Ledger {
  public:
    // In-memory ledger (no journal file).
    explicit Ledger(Clock clock = system_clock());
    // Opens (creating if needed) and replays a journal.
    Ledger(const std::filesystem::path& journal, Clock clock = system_clock());
    ~Ledger();

    Ledger(const Ledger&) = delete;
    Ledger& operator=(const Ledger&) = delete;

    std::string record_detection(DetectionEvent event);
    std::optional<DetectionEvent> detection(const std::string& id) const;
    std::vector<DetectionEvent> detections_for(const ContentHash& media_hash) const;
    std::size_t detection_count() const;

    void mirror_chain(const chain::TxReceipt& receipt, const EvidenceRecord& record, const std::string& actor);
    // Compares every view with the chain, repairs divergences from chain
    // truth and returns the hashes that diverged.
    std::vector<ContentHash> reconcile(const chain::EvidenceChain& chain);

    std::optional<EvidenceView> evidence(const ContentHash& hash) const;
    // Sorted by (registered_at, content_hash).
    std::vector<EvidenceView> query_evidence(const EvidenceFilter& filter = {}, Page page = {}) const;

    std::string create_case(const std::string& owner, const std::string& title);
    CaseRecord attach_evidence(const std::string& case_id, const std::string& actor, const ContentHash& hash);
    CaseRecord set_case_status(const std::string& case_id, const std::string& actor, CaseStatus status);
    CaseRecord get_case(const std::string& case_id) const;
    std::vector<CaseRecord> cases() const;

    AuditEntry append_audit(const std::string& actor, const std::string& action, const std::string& subject,
                            std::optional<ContentHash> tx_hash = std::nullopt);
    // Accepts only the next sequence number: existing entries cannot be rewritten.
    void append_audit_entry(const AuditEntry& entry);
    std::vector<AuditEntry> audit_log() const;

  private:
    struct State;

    void write_line(const nlohmann::ordered_json& line);
    void apply_line(const nlohmann::json& line);
    AuditEntry append_audit_locked(const std::string& actor, const std::string& action, const std::string& subject,
                                   std::optional<ContentHash> tx_hash);
    void put_view_locked(const EvidenceView& view);

    Clock clock_;
    std::unique_ptr<State> state_;
    std::unique_ptr<std::ofstream> journal_;
    mutable std::shared_mutex mutex_;
};

nlohmann::ordered_json to_json(const EvidenceRecord& record);
EvidenceRecord evidence_record_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const EvidenceView& view);
EvidenceView evidence_view_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const DetectionEvent& event);
DetectionEvent detection_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const CaseRecord& c);
CaseRecord case_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const AuditEntry& a);
AuditEntry audit_from_json(const nlohmann::json& j);

// Court packet for one case: the case, its evidence views and detection
// events, the full chain transaction log and the chain configuration needed
// to replay it, and the state root it must reproduce.
nlohmann::ordered_json make_case_bundle(const Ledger& ledger, const chain::EvidenceChain& chain,
                                        const std::string& case_id);

struct BundleCheck {
    bool ok = false;
    ContentHash claimed_root;
    ContentHash replayed_root;
    std::vector<std::string> problems;
};

// Replays the bundle's transaction log on a fresh chain and checks the state
// root plus every evidence record and transaction hash it claims.
BundleCheck verify_case_bundle(const nlohmann::json& bundle);

nlohmann::ordered_json to_json(const chain::ChainConfig& config);
chain::ChainConfig chain_config_from_json(const nlohmann::json& j);

}  // namespace custody::ledger
