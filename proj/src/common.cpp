// Copyright 2026 The Custody Authors
// SPDX-License-Identifier: Apache-2.0

#include "custody/common.hpp"

#include <chrono>

#include "custody/error.hpp"

namespace custody {

Clock system_clock() {
    return [] {
        return std::chrono::duration_cast<std::chrono::seconds>(
                   std::chrono::system_clock::now().time_since_epoch())
            .count();
    };
}

std::string_view to_string(Modality m) {
    switch (m) {
        case Modality::image: return "image";
        case Modality::video: return "video";
        case Modality::audio: return "audio";
        case Modality::fingerprint: return "fingerprint";
    }
    return "unknown";
}

Modality parse_modality(std::string_view s) {
    if (s == "image") return Modality::image;
    if (s == "video") return Modality::video;
    if (s == "audio") return Modality::audio;
    if (s == "fingerprint") return Modality::fingerprint;
    fail(Errc::invalid_argument, "unknown modality '" + std::string(s) + "'");
}

std::string_view to_string(Errc code) {
    switch (code) {
        case Errc::invalid_argument: return "InvalidArgument";
        case Errc::parse_error: return "ParseError";
        case Errc::not_found: return "NotFound";
        case Errc::storage_failure: return "StorageFailure";
        case Errc::integrity_violation: return "IntegrityViolation";
        case Errc::unauthorized: return "Unauthorized";
        case Errc::duplicate_evidence: return "DuplicateEvidence";
        case Errc::already_verified: return "AlreadyVerified";
        case Errc::replay_mismatch: return "ReplayMismatch";
        case Errc::invalid_credentials: return "InvalidCredentials";
        case Errc::account_disabled: return "AccountDisabled";
        case Errc::invalid_signature: return "InvalidSignature";
        case Errc::expired: return "Expired";
        case Errc::forbidden: return "Forbidden";
        case Errc::duplicate_name: return "DuplicateName";
        case Errc::validation_failure: return "ValidationFailure";
        case Errc::consistency_error: return "ConsistencyError";
        case Errc::too_short: return "TooShort";
        case Errc::non_finite_input: return "NonFiniteInput";
        case Errc::bad_channel_count: return "BadChannelCount";
        case Errc::bad_shape: return "BadShape";
        case Errc::empty_video: return "EmptyVideo";
        case Errc::uncalibrated_classifier: return "UncalibratedClassifier";
        case Errc::insufficient_data: return "InsufficientData";
        case Errc::empty_matrix: return "EmptyMatrix";
        case Errc::single_class: return "SingleClass";
        case Errc::unsupported_media: return "UnsupportedMedia";
        case Errc::payload_too_large: return "PayloadTooLarge";
    }
    return "Unknown";
}

}  // namespace custody
