// Copyright 2026 The Custody Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>

#include "custody/common.hpp"

namespace custody {

std::string to_hex(ByteView data);
// Accepts upper or lower case; throws Errc::parse_error on odd length or bad digits.
Bytes from_hex(std::string_view text);

// RFC 4648 base32, lowercase alphabet, no padding.
std::string base32_lower_encode(ByteView data);
Bytes base32_lower_decode(std::string_view text);

// RFC 4648 base64url, no padding.
std::string base64url_encode(ByteView data);
Bytes base64url_decode(std::string_view text);

}  // namespace custody
