// Copyright 2026 The Custody Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace custody {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

// Seconds since the Unix epoch (or a logical clock in tests).
using Clock = std::function<std::int64_t()>;

Clock system_clock();

inline ByteView as_bytes(std::string_view s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

inline Bytes to_bytes(std::string_view s) {
    return {s.begin(), s.end()};
}

inline std::string as_string(ByteView b) {
    return {b.begin(), b.end()};
}

enum class Modality : std::uint8_t { image, video, audio, fingerprint };

std::string_view to_string(Modality m);
Modality parse_modality(std::string_view s);

}  // namespace custody
