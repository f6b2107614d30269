// Copyright 2026 The Custody Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Canonical byte layout used for everything that gets hashed on the chain.
//
//   field   := u32be(length) || payload
//   integer := field carrying the 8-byte big-endian value
//   string  := field carrying the raw UTF-8 bytes
//
// Fields are concatenated in a fixed, documented order, so the encoding is
// unambiguous and identical on every platform.

#include <cstdint>
#include <string>
#include <string_view>

#include "custody/common.hpp"

namespace custody {

void put_u32be(Bytes& out, std::uint32_t v);
void put_u64be(Bytes& out, std::uint64_t v);

class CanonicalWriter {
  public:
    CanonicalWriter& field(ByteView payload);
    CanonicalWriter& integer(std::uint64_t v);
    CanonicalWriter& text(std::string_view s);
    CanonicalWriter& byte(std::uint8_t v);

    const Bytes& bytes() const& { return buf_; }
    Bytes bytes() && { return std::move(buf_); }

  private:
    Bytes buf_;
};

class CanonicalReader {
  public:
    explicit CanonicalReader(ByteView data) : data_(data) {}

    ByteView field();
    std::uint64_t integer();
    std::string text();
    std::uint8_t byte();

    bool done() const { return pos_ == data_.size(); }

  private:
    ByteView data_;
    std::size_t pos_ = 0;
};

}  // namespace custody
