// Copyright 2026 The Custody Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace custody {

enum class Errc {
    invalid_argument,
    parse_error,
    not_found,
    storage_failure,
    integrity_violation,
    unauthorized,
    duplicate_evidence,
    already_verified,
    replay_mismatch,
    invalid_credentials,
    account_disabled,
    invalid_signature,
    expired,
    forbidden,
    duplicate_name,
    validation_failure,
    consistency_error,
    too_short,
    non_finite_input,
    bad_channel_count,
    bad_shape,
    empty_video,
    uncalibrated_classifier,
    insufficient_data,
    empty_matrix,
    single_class,
    unsupported_media,
    payload_too_large,
};

std::string_view to_string(Errc code);

// The single exception type thrown by the library; `code()` carries the
// contract-level error kind that callers (and the HTTP layer) dispatch on.
class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string& message) : std::runtime_error(message), code_(code) {}

    Errc code() const noexcept { return code_; }

  private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace custody
