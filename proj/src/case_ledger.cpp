// Copyright 2026 The Custody Authors
// SPDX-License-Identifier: Apache-2.0

#include "custody/case_ledger.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>

#include "custody/encoding.hpp"
#include "custody/error.hpp"

namespace custody::ledger {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string sequence_id(std::string_view prefix, std::uint64_t n) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%06llu", static_cast<unsigned long long>(n));
    return std::string(prefix) + "-" + buf;
}

std::uint64_t sequence_number(const std::string& id) {
    auto dash = id.rfind('-');
    if (dash == std::string::npos) return 0;
    try {
        return std::stoull(id.substr(dash + 1));
    } catch (const std::exception&) {
        return 0;
    }
}

ordered_json tagged(std::string_view type, const ordered_json& body) {
    ordered_json line;
    line["type"] = type;
    for (const auto& [k, v] : body.items()) line[k] = v;
    return line;
}

void validate_detection(const DetectionEvent& e) {
    if (e.principal_id.empty()) fail(Errc::validation_failure, "detection event needs a principal");
    if (e.media_hash == ContentHash{}) fail(Errc::validation_failure, "detection event needs a media hash");
    if (!std::isfinite(e.score) || e.score < 0.0 || e.score > 1.0) {
        fail(Errc::validation_failure, "detection score must lie in [0, 1]");
    }
    if (!std::isfinite(e.threshold) || e.threshold < 0.0 || e.threshold > 1.0) {
        fail(Errc::validation_failure, "detector threshold must lie in [0, 1]");
    }
    if ((e.score >= e.threshold) != (e.verdict == Verdict::fake)) {
        fail(Errc::validation_failure, "verdict must be fake exactly when score >= threshold");
    }
}

bool same_registration(const EvidenceRecord& a, const EvidenceRecord& b) {
    return a.content_hash == b.content_hash && a.cid == b.cid && a.evidence_type == b.evidence_type &&
           a.analyst == b.analyst && a.registered_at == b.registered_at;
}

}  // namespace

std::string_view to_string(Verdict v) {
    return v == Verdict::fake ? "fake" : "real";
}

Verdict parse_verdict(std::string_view s) {
    if (s == "fake") return Verdict::fake;
    if (s == "real") return Verdict::real;
    fail(Errc::invalid_argument, "unknown verdict '" + std::string(s) + "'");
}

std::string_view to_string(CaseStatus s) {
    switch (s) {
        case CaseStatus::open: return "open";
        case CaseStatus::submitted: return "submitted";
        case CaseStatus::verified: return "verified";
        case CaseStatus::closed: return "closed";
    }
    return "unknown";
}

CaseStatus parse_case_status(std::string_view s) {
    for (auto st : {CaseStatus::open, CaseStatus::submitted, CaseStatus::verified, CaseStatus::closed}) {
        if (to_string(st) == s) return st;
    }
    fail(Errc::invalid_argument, "unknown case status '" + std::string(s) + "'");
}

ordered_json to_json(const EvidenceRecord& r) {
    ordered_json j;
    j["content_hash"] = r.content_hash.hex();
    j["cid"] = r.cid.text();
    j["evidence_type"] = chain::to_string(r.evidence_type);
    j["analyst"] = r.analyst.hex();
    j["registered_at"] = r.registered_at;
    j["verified"] = r.verified;
    j["verifier"] = r.verifier ? ordered_json(r.verifier->hex()) : ordered_json(nullptr);
    j["verified_at"] = r.verified_at ? ordered_json(*r.verified_at) : ordered_json(nullptr);
    return j;
}

EvidenceRecord evidence_record_from_json(const json& j) {
    EvidenceRecord r;
    r.content_hash = ContentHash::from_hex(j.at("content_hash").get<std::string>());
    r.cid = content::Cid::parse(j.at("cid").get<std::string>());
    r.evidence_type = chain::parse_evidence_type(j.at("evidence_type").get<std::string>());
    r.analyst = ChainAddress::from_hex(j.at("analyst").get<std::string>());
    r.registered_at = j.at("registered_at").get<std::uint64_t>();
    r.verified = j.at("verified").get<bool>();
    if (!j.at("verifier").is_null()) r.verifier = ChainAddress::from_hex(j.at("verifier").get<std::string>());
    if (!j.at("verified_at").is_null()) r.verified_at = j.at("verified_at").get<std::uint64_t>();
    return r;
}

ordered_json to_json(const EvidenceView& v) {
    ordered_json j = to_json(v.record);
    j["register_tx"] = v.register_tx.hex();
    j["register_block"] = v.register_block;
    j["verify_tx"] = v.verify_tx ? ordered_json(v.verify_tx->hex()) : ordered_json(nullptr);
    j["verify_block"] = v.verify_block ? ordered_json(*v.verify_block) : ordered_json(nullptr);
    return j;
}

EvidenceView evidence_view_from_json(const json& j) {
    EvidenceView v;
    v.record = evidence_record_from_json(j);
    v.register_tx = ContentHash::from_hex(j.at("register_tx").get<std::string>());
    v.register_block = j.at("register_block").get<std::uint64_t>();
    if (!j.at("verify_tx").is_null()) v.verify_tx = ContentHash::from_hex(j.at("verify_tx").get<std::string>());
    if (!j.at("verify_block").is_null()) v.verify_block = j.at("verify_block").get<std::uint64_t>();
    return v;
}

ordered_json to_json(const DetectionEvent& e) {
    ordered_json j;
    j["id"] = e.id;
    j["principal_id"] = e.principal_id;
    j["modality"] = to_string(e.modality);
    j["media_hash"] = e.media_hash.hex();
    j["score"] = e.score;
    j["threshold"] = e.threshold;
    j["verdict"] = to_string(e.verdict);
    j["detector_id"] = e.detector_id;
    j["created_at"] = e.created_at;
    j["casework"] = e.casework;
    return j;
}

DetectionEvent detection_from_json(const json& j) {
    DetectionEvent e;
    e.id = j.at("id").get<std::string>();
    e.principal_id = j.at("principal_id").get<std::string>();
    e.modality = parse_modality(j.at("modality").get<std::string>());
    e.media_hash = ContentHash::from_hex(j.at("media_hash").get<std::string>());
    e.score = j.at("score").get<double>();
    e.threshold = j.at("threshold").get<double>();
    e.verdict = parse_verdict(j.at("verdict").get<std::string>());
    e.detector_id = j.at("detector_id").get<std::string>();
    e.created_at = j.at("created_at").get<std::int64_t>();
    e.casework = j.at("casework").get<bool>();
    return e;
}

ordered_json to_json(const CaseRecord& c) {
    ordered_json j;
    j["id"] = c.id;
    j["title"] = c.title;
    j["owner"] = c.owner;
    j["evidence"] = ordered_json::array();
    for (const auto& h : c.evidence) j["evidence"].push_back(h.hex());
    j["status"] = to_string(c.status);
    j["created_at"] = c.created_at;
    return j;
}

CaseRecord case_from_json(const json& j) {
    CaseRecord c;
    c.id = j.at("id").get<std::string>();
    c.title = j.at("title").get<std::string>();
    c.owner = j.at("owner").get<std::string>();
    for (const auto& h : j.at("evidence")) c.evidence.push_back(ContentHash::from_hex(h.get<std::string>()));
    c.status = parse_case_status(j.at("status").get<std::string>());
    c.created_at = j.at("created_at").get<std::int64_t>();
    return c;
}

ordered_json to_json(const AuditEntry& a) {
    ordered_json j;
    j["seq"] = a.seq;
    j["actor"] = a.actor;
    j["action"] = a.action;
    j["subject"] = a.subject;
    j["timestamp"] = a.timestamp;
    j["tx_hash"] = a.tx_hash ? ordered_json(a.tx_hash->hex()) : ordered_json(nullptr);
    return j;
}

AuditEntry audit_from_json(const json& j) {
    AuditEntry a;
    a.seq = j.at("seq").get<std::uint64_t>();
    a.actor = j.at("actor").get<std::string>();
    a.action = j.at("action").get<std::string>();
    a.subject = j.at("subject").get<std::string>();
    a.timestamp = j.at("timestamp").get<std::int64_t>();
    if (!j.at("tx_hash").is_null()) a.tx_hash = ContentHash::from_hex(j.at("tx_hash").get<std::string>());
    return a;
}

ordered_json to_json(const chain::ChainConfig& c) {
    ordered_json j;
    j["genesis_admin"] = c.genesis_admin.hex();
    j["genesis_time"] = c.genesis_time;
    j["block_interval"] = c.block_interval;
    j["txs_per_block"] = c.txs_per_block;
    return j;
}

chain::ChainConfig chain_config_from_json(const json& j) {
    chain::ChainConfig c;
    c.genesis_admin = ChainAddress::from_hex(j.at("genesis_admin").get<std::string>());
    c.genesis_time = j.value("genesis_time", std::uint64_t{0});
    c.block_interval = j.value("block_interval", std::uint64_t{1});
    c.txs_per_block = j.value("txs_per_block", std::uint32_t{1});
    return c;
}

struct Ledger::State {
    std::map<std::string, DetectionEvent> detections;
    std::multimap<ContentHash, std::string> detections_by_hash;
    std::map<ContentHash, EvidenceView> evidence;
    std::map<std::string, CaseRecord> cases;
    std::vector<AuditEntry> audit;
    std::uint64_t next_detection = 1;
    std::uint64_t next_case = 1;
};

Ledger::Ledger(Clock clock) : clock_(std::move(clock)), state_(std::make_unique<State>()) {}

Ledger::Ledger(const std::filesystem::path& journal, Clock clock)
    : clock_(std::move(clock)), state_(std::make_unique<State>()) {
    if (std::filesystem::exists(journal)) {
        std::ifstream in(journal);
        if (!in) fail(Errc::storage_failure, "cannot open journal " + journal.string());
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            try {
                apply_line(json::parse(line));
            } catch (const json::exception& e) {
                fail(Errc::parse_error, "journal line " + std::to_string(line_no) + ": " + e.what());
            } catch (const Error& e) {
                fail(Errc::parse_error, "journal line " + std::to_string(line_no) + ": " + e.what());
            }
        }
    }
    journal_ = std::make_unique<std::ofstream>(journal, std::ios::app);
    if (!*journal_) fail(Errc::storage_failure, "cannot append to journal " + journal.string());
}

Ledger::~Ledger() = default;

void Ledger::apply_line(const json& line) {
    const std::string type = line.at("type").get<std::string>();
    State& s = *state_;
    if (type == "detection") {
        DetectionEvent e = detection_from_json(line);
        s.next_detection = std::max(s.next_detection, sequence_number(e.id) + 1);
        s.detections_by_hash.emplace(e.media_hash, e.id);
        s.detections[e.id] = std::move(e);
    } else if (type == "evidence") {
        EvidenceView v = evidence_view_from_json(line);
        s.evidence[v.record.content_hash] = std::move(v);
    } else if (type == "evidence_removed") {
        s.evidence.erase(ContentHash::from_hex(line.at("content_hash").get<std::string>()));
    } else if (type == "case") {
        CaseRecord c = case_from_json(line);
        s.next_case = std::max(s.next_case, sequence_number(c.id) + 1);
        s.cases[c.id] = std::move(c);
    } else if (type == "audit") {
        AuditEntry a = audit_from_json(line);
        if (a.seq != s.audit.size() + 1) fail(Errc::validation_failure, "audit sequence gap in journal");
        s.audit.push_back(std::move(a));
    } else {
        fail(Errc::parse_error, "unknown journal record type '" + type + "'");
    }
}

void Ledger::write_line(const ordered_json& line) {
    if (!journal_) return;
    *journal_ << line.dump() << '\n';
    journal_->flush();
    if (!*journal_) fail(Errc::storage_failure, "journal append failed");
}

std::string Ledger::record_detection(DetectionEvent event) {
    validate_detection(event);
    std::unique_lock lock(mutex_);
    State& s = *state_;
    if (event.id.empty()) event.id = sequence_id("det", s.next_detection);
    if (s.detections.contains(event.id)) fail(Errc::validation_failure, "detection id already used: " + event.id);
    if (event.created_at == 0) event.created_at = clock_();
    s.next_detection = std::max(s.next_detection, sequence_number(event.id) + 1);
    write_line(tagged("detection", to_json(event)));
    s.detections_by_hash.emplace(event.media_hash, event.id);
    s.detections[event.id] = event;
    append_audit_locked(event.principal_id, "detect." + std::string(to_string(event.modality)), event.id, std::nullopt);
    return event.id;
}

std::optional<DetectionEvent> Ledger::detection(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = state_->detections.find(id);
    if (it == state_->detections.end()) return std::nullopt;
    return it->second;
}

std::vector<DetectionEvent> Ledger::detections_for(const ContentHash& media_hash) const {
    std::shared_lock lock(mutex_);
    std::vector<DetectionEvent> out;
    auto [lo, hi] = state_->detections_by_hash.equal_range(media_hash);
    for (auto it = lo; it != hi; ++it) out.push_back(state_->detections.at(it->second));
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return out;
}

std::size_t Ledger::detection_count() const {
    std::shared_lock lock(mutex_);
    return state_->detections.size();
}

void Ledger::put_view_locked(const EvidenceView& view) {
    write_line(tagged("evidence", to_json(view)));
    state_->evidence[view.record.content_hash] = view;
}

void Ledger::mirror_chain(const chain::TxReceipt& receipt, const EvidenceRecord& record, const std::string& actor) {
    std::unique_lock lock(mutex_);
    const auto& tx = receipt.tx;
    State& s = *state_;
    auto diverged = [&](const std::string& why) {
        append_audit_locked(actor, "consistency_error", record.content_hash.hex(), tx.tx_hash);
        fail(Errc::consistency_error, "ledger mirror diverges from chain: " + why);
    };

    switch (tx.method) {
        case chain::Method::register_evidence: {
            if (record.verified || record.registered_at != receipt.block_timestamp || record.analyst != tx.sender) {
                diverged("registration record does not match its receipt");
            }
            auto it = s.evidence.find(record.content_hash);
            EvidenceView view{record, tx.tx_hash, receipt.block_number, std::nullopt, std::nullopt};
            if (it != s.evidence.end()) {
                if (it->second.register_tx == tx.tx_hash && same_registration(it->second.record, record)) return;
                put_view_locked(view);
                diverged("a different registration is already mirrored for " + record.content_hash.hex());
            }
            put_view_locked(view);
            append_audit_locked(actor, "evidence.register", record.content_hash.hex(), tx.tx_hash);
            return;
        }
        case chain::Method::verify_evidence: {
            if (!record.verified || record.verifier != tx.sender || record.verified_at != receipt.block_timestamp) {
                diverged("verification record does not match its receipt");
            }
            auto it = s.evidence.find(record.content_hash);
            if (it == s.evidence.end()) diverged("verification of unmirrored evidence " + record.content_hash.hex());
            if (it->second.verify_tx == tx.tx_hash) return;
            EvidenceView view = it->second;
            const bool conflict = !same_registration(view.record, record) || view.record.verified;
            view.record = record;
            view.verify_tx = tx.tx_hash;
            view.verify_block = receipt.block_number;
            put_view_locked(view);
            if (conflict) diverged("mirrored registration disagrees with verified record");
            append_audit_locked(actor, "evidence.verify", record.content_hash.hex(), tx.tx_hash);
            return;
        }
        case chain::Method::grant_role:
            append_audit_locked(actor, "role.grant", tx.sender.hex(), tx.tx_hash);
            return;
    }
}

std::vector<ContentHash> Ledger::reconcile(const chain::EvidenceChain& chain) {
    std::map<ContentHash, EvidenceView> truth;
    for (const EvidenceRecord& rec : chain.all_evidence()) {
        EvidenceView v;
        v.record = rec;
        truth.emplace(rec.content_hash, v);
    }
    for (const chain::ChainEvent& e : chain.events()) {
        if (!e.content_hash) continue;
        auto it = truth.find(*e.content_hash);
        if (it == truth.end()) continue;
        if (e.name == chain::EventName::evidence_registered) {
            it->second.register_tx = e.tx_hash;
            it->second.register_block = e.block_number;
        } else if (e.name == chain::EventName::evidence_verified) {
            it->second.verify_tx = e.tx_hash;
            it->second.verify_block = e.block_number;
        }
    }

    std::unique_lock lock(mutex_);
    State& s = *state_;
    std::vector<ContentHash> diverged;
    for (const auto& [hash, view] : truth) {
        auto it = s.evidence.find(hash);
        if (it == s.evidence.end() || !(it->second == view)) {
            diverged.push_back(hash);
            put_view_locked(view);
            append_audit_locked("reconciler", "consistency_error", hash.hex(), view.register_tx);
        }
    }
    std::vector<ContentHash> stale;
    for (const auto& [hash, _] : s.evidence) {
        if (!truth.contains(hash)) stale.push_back(hash);
    }
    for (const auto& hash : stale) {
        ordered_json line;
        line["type"] = "evidence_removed";
        line["content_hash"] = hash.hex();
        write_line(line);
        s.evidence.erase(hash);
        diverged.push_back(hash);
        append_audit_locked("reconciler", "consistency_error", hash.hex(), std::nullopt);
    }
    return diverged;
}

std::optional<EvidenceView> Ledger::evidence(const ContentHash& hash) const {
    std::shared_lock lock(mutex_);
    auto it = state_->evidence.find(hash);
    if (it == state_->evidence.end()) return std::nullopt;
    return it->second;
}

std::vector<EvidenceView> Ledger::query_evidence(const EvidenceFilter& f, Page page) const {
    std::vector<EvidenceView> out;
    {
        std::shared_lock lock(mutex_);
        for (const auto& [_, v] : state_->evidence) {
            const EvidenceRecord& r = v.record;
            if (f.type && r.evidence_type != *f.type) continue;
            if (f.verified && r.verified != *f.verified) continue;
            if (f.analyst && r.analyst != *f.analyst) continue;
            if (f.registered_from && r.registered_at < *f.registered_from) continue;
            if (f.registered_to && r.registered_at > *f.registered_to) continue;
            out.push_back(v);
        }
    }
    std::sort(out.begin(), out.end(), [](const EvidenceView& a, const EvidenceView& b) {
        if (a.record.registered_at != b.record.registered_at) return a.record.registered_at < b.record.registered_at;
        return a.record.content_hash < b.record.content_hash;
    });
    if (page.offset >= out.size()) return {};
    auto first = out.begin() + static_cast<std::ptrdiff_t>(page.offset);
    auto remaining = static_cast<std::size_t>(out.end() - first);
    auto last = first + static_cast<std::ptrdiff_t>(std::min(page.limit, remaining));
    return {first, last};
}

std::string Ledger::create_case(const std::string& owner, const std::string& title) {
    if (owner.empty()) fail(Errc::validation_failure, "case needs an owner");
    if (title.empty()) fail(Errc::validation_failure, "case needs a title");
    std::unique_lock lock(mutex_);
    State& s = *state_;
    CaseRecord c;
    c.id = sequence_id("case", s.next_case++);
    c.title = title;
    c.owner = owner;
    c.created_at = clock_();
    write_line(tagged("case", to_json(c)));
    s.cases[c.id] = c;
    append_audit_locked(owner, "case.create", c.id, std::nullopt);
    return c.id;
}

CaseRecord Ledger::attach_evidence(const std::string& case_id, const std::string& actor, const ContentHash& hash) {
    std::unique_lock lock(mutex_);
    State& s = *state_;
    auto it = s.cases.find(case_id);
    if (it == s.cases.end()) fail(Errc::not_found, "no case " + case_id);
    CaseRecord c = it->second;
    if (c.status != CaseStatus::open) fail(Errc::validation_failure, "evidence can only be attached to open cases");
    if (!s.evidence.contains(hash)) fail(Errc::validation_failure, "evidence " + hash.hex() + " is not registered");
    if (std::find(c.evidence.begin(), c.evidence.end(), hash) != c.evidence.end()) return c;
    c.evidence.push_back(hash);
    write_line(tagged("case", to_json(c)));
    it->second = c;
    append_audit_locked(actor, "case.attach", case_id + ":" + hash.hex(), std::nullopt);
    return c;
}

CaseRecord Ledger::set_case_status(const std::string& case_id, const std::string& actor, CaseStatus status) {
    std::unique_lock lock(mutex_);
    State& s = *state_;
    auto it = s.cases.find(case_id);
    if (it == s.cases.end()) fail(Errc::not_found, "no case " + case_id);
    CaseRecord c = it->second;
    auto all_registered = [&] {
        return std::all_of(c.evidence.begin(), c.evidence.end(),
                           [&](const ContentHash& h) { return s.evidence.contains(h); });
    };
    auto all_verified = [&] {
        return std::all_of(c.evidence.begin(), c.evidence.end(), [&](const ContentHash& h) {
            auto e = s.evidence.find(h);
            return e != s.evidence.end() && e->second.record.verified;
        });
    };
    bool allowed = false;
    switch (status) {
        case CaseStatus::open: allowed = false; break;
        case CaseStatus::submitted:
            allowed = c.status == CaseStatus::open && !c.evidence.empty() && all_registered();
            break;
        case CaseStatus::verified: allowed = c.status == CaseStatus::submitted && all_verified(); break;
        case CaseStatus::closed: allowed = c.status != CaseStatus::closed; break;
    }
    if (!allowed) {
        fail(Errc::validation_failure, "case " + case_id + " cannot move from " + std::string(to_string(c.status)) +
                                           " to " + std::string(to_string(status)));
    }
    c.status = status;
    write_line(tagged("case", to_json(c)));
    it->second = c;
    append_audit_locked(actor, "case.status." + std::string(to_string(status)), case_id, std::nullopt);
    return c;
}

CaseRecord Ledger::get_case(const std::string& case_id) const {
    std::shared_lock lock(mutex_);
    auto it = state_->cases.find(case_id);
    if (it == state_->cases.end()) fail(Errc::not_found, "no case " + case_id);
    return it->second;
}

std::vector<CaseRecord> Ledger::cases() const {
    std::shared_lock lock(mutex_);
    std::vector<CaseRecord> out;
    for (const auto& [_, c] : state_->cases) out.push_back(c);
    return out;
}

AuditEntry Ledger::append_audit_locked(const std::string& actor, const std::string& action,
                                       const std::string& subject, std::optional<ContentHash> tx_hash) {
    AuditEntry a;
    a.seq = state_->audit.size() + 1;
    a.actor = actor;
    a.action = action;
    a.subject = subject;
    a.timestamp = clock_();
    a.tx_hash = tx_hash;
    write_line(tagged("audit", to_json(a)));
    state_->audit.push_back(a);
    return a;
}

AuditEntry Ledger::append_audit(const std::string& actor, const std::string& action, const std::string& subject,
                                std::optional<ContentHash> tx_hash) {
    std::unique_lock lock(mutex_);
    return append_audit_locked(actor, action, subject, tx_hash);
}

void Ledger::append_audit_entry(const AuditEntry& entry) {
    std::unique_lock lock(mutex_);
    if (entry.seq != state_->audit.size() + 1) {
        fail(Errc::validation_failure, "audit entry " + std::to_string(entry.seq) +
                                           " rejected: entries are immutable and seq must be " +
                                           std::to_string(state_->audit.size() + 1));
    }
    write_line(tagged("audit", to_json(entry)));
    state_->audit.push_back(entry);
}

std::vector<AuditEntry> Ledger::audit_log() const {
    std::shared_lock lock(mutex_);
    return state_->audit;
}

ordered_json make_case_bundle(const Ledger& ledger, const chain::EvidenceChain& chain, const std::string& case_id) {
    CaseRecord c = ledger.get_case(case_id);
    ordered_json bundle;
    bundle["format"] = "custody-case-bundle/1";
    bundle["case"] = to_json(c);
    bundle["evidence"] = ordered_json::array();
    bundle["detections"] = ordered_json::array();
    for (const ContentHash& h : c.evidence) {
        auto view = ledger.evidence(h);
        if (!view) fail(Errc::consistency_error, "case evidence " + h.hex() + " missing from ledger");
        auto on_chain = chain.find_evidence(h);
        if (!on_chain || !(*on_chain == view->record)) {
            fail(Errc::consistency_error, "ledger view of " + h.hex() + " disagrees with chain");
        }
        bundle["evidence"].push_back(to_json(*view));
        for (const auto& d : ledger.detections_for(h)) bundle["detections"].push_back(to_json(d));
    }
    const auto txs = chain.transactions();
    ordered_json log = ordered_json::array();
    for (const auto& tx : txs) log.push_back(to_hex(tx.encode()));
    const chain::Block head = chain.head();
    ordered_json chain_part;
    chain_part["config"] = to_json(chain.config());
    chain_part["tx_log"] = std::move(log);
    chain_part["tx_count"] = txs.size();
    chain_part["state_root"] = chain.state_root().hex();
    chain_part["head_number"] = head.number;
    chain_part["head_hash"] = head.block_hash.hex();
    bundle["chain"] = std::move(chain_part);
    return bundle;
}

BundleCheck verify_case_bundle(const json& bundle) {
    BundleCheck check;
    const json& cp = bundle.at("chain");
    check.claimed_root = ContentHash::from_hex(cp.at("state_root").get<std::string>());
    std::vector<chain::ChainTransaction> txs;
    for (const auto& line : cp.at("tx_log")) txs.push_back(chain::ChainTransaction::decode(from_hex(line.get<std::string>())));

    std::unique_ptr<chain::EvidenceChain> replayed;
    try {
        replayed = chain::replay(chain_config_from_json(cp.at("config")), txs);
    } catch (const Error& e) {
        check.problems.push_back(std::string("replay failed: ") + e.what());
        return check;
    }
    check.replayed_root = replayed->state_root();
    if (check.replayed_root != check.claimed_root) check.problems.push_back("state root mismatch");
    const chain::Block head = replayed->head();
    if (head.number != cp.at("head_number").get<std::uint64_t>() ||
        head.block_hash.hex() != cp.at("head_hash").get<std::string>()) {
        check.problems.push_back("head block mismatch");
    }

    for (const auto& ej : bundle.at("evidence")) {
        EvidenceView v = evidence_view_from_json(ej);
        const std::string h = v.record.content_hash.hex();
        auto rec = replayed->find_evidence(v.record.content_hash);
        if (!rec) {
            check.problems.push_back("evidence " + h + " not on replayed chain");
            continue;
        }
        if (!(*rec == v.record)) check.problems.push_back("evidence " + h + " differs from replayed chain");
        auto reg = replayed->events({chain::EventName::evidence_registered, v.record.content_hash, {}, {}});
        if (reg.size() != 1 || reg[0].tx_hash != v.register_tx || reg[0].block_number != v.register_block) {
            check.problems.push_back("registration tx of " + h + " not reproduced");
        }
        auto ver = replayed->events({chain::EventName::evidence_verified, v.record.content_hash, {}, {}});
        if (v.verify_tx) {
            if (ver.size() != 1 || ver[0].tx_hash != *v.verify_tx || ver[0].block_number != v.verify_block) {
                check.problems.push_back("verification tx of " + h + " not reproduced");
            }
        } else if (!ver.empty()) {
            check.problems.push_back("bundle omits verification of " + h);
        }
    }
    check.ok = check.problems.empty();
    return check;
}

}  // namespace custody::ledger
