// Copyright 2026 The Custody Authors
// SPDX-License-Identifier: Apache-2.0

#include "custody/canonical.hpp"

#include <limits>

#include "custody/error.hpp"

namespace custody {

void put_u32be(Bytes& out, std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_u64be(Bytes& out, std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

CanonicalWriter& CanonicalWriter::field(ByteView payload) {
    if (payload.size() > std::numeric_limits<std::uint32_t>::max()) {
        fail(Errc::invalid_argument, "canonical field exceeds 4 GiB");
    }
    put_u32be(buf_, static_cast<std::uint32_t>(payload.size()));
    buf_.insert(buf_.end(), payload.begin(), payload.end());
    return *this;
}

CanonicalWriter& CanonicalWriter::integer(std::uint64_t v) {
    Bytes tmp;
    put_u64be(tmp, v);
    return field(tmp);
}

CanonicalWriter& CanonicalWriter::text(std::string_view s) {
    return field(as_bytes(s));
}

CanonicalWriter& CanonicalWriter::byte(std::uint8_t v) {
    return field(ByteView(&v, 1));
}

ByteView CanonicalReader::field() {
    if (data_.size() - pos_ < 4) fail(Errc::parse_error, "truncated canonical length");
    std::uint32_t len = 0;
    for (int i = 0; i < 4; ++i) len = (len << 8) | data_[pos_ + i];
    pos_ += 4;
    if (data_.size() - pos_ < len) fail(Errc::parse_error, "truncated canonical field");
    ByteView out = data_.subspan(pos_, len);
    pos_ += len;
    return out;
}

std::uint64_t CanonicalReader::integer() {
    ByteView f = field();
    if (f.size() != 8) fail(Errc::parse_error, "canonical integer must be 8 bytes");
    std::uint64_t v = 0;
    for (std::uint8_t b : f) v = (v << 8) | b;
    return v;
}

std::string CanonicalReader::text() {
    return as_string(field());
}

std::uint8_t CanonicalReader::byte() {
    ByteView f = field();
    if (f.size() != 1) fail(Errc::parse_error, "canonical byte must be 1 byte");
    return f[0];
}

}  // namespace custody
