// Copyright 2026 The Custody Authors
// SPDX-License-Identifier: Apache-2.0

#include "custody/encoding.hpp"

#include <array>

#include "custody/error.hpp"

namespace custody {

namespace {

constexpr std::string_view kHexDigits = "0123456789abcdef";
constexpr std::string_view kBase32 = "abcdefghijklmnopqrstuvwxyz234567";
constexpr std::string_view kBase64Url =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

std::array<int, 256> reverse_table(std::string_view alphabet) {
    std::array<int, 256> table{};
    table.fill(-1);
    for (std::size_t i = 0; i < alphabet.size(); ++i) {
        table[static_cast<unsigned char>(alphabet[i])] = static_cast<int>(i);
    }
    return table;
}

// Generic MSB-first bit packer shared by base32 and base64url.
std::string encode_bits(ByteView data, std::string_view alphabet, unsigned bits_per_char) {
    std::string out;
    out.reserve((data.size() * 8 + bits_per_char - 1) / bits_per_char);
    std::uint32_t buffer = 0;
    unsigned bits = 0;
    const std::uint32_t mask = (1u << bits_per_char) - 1;
    for (std::uint8_t b : data) {
        buffer = (buffer << 8) | b;
        bits += 8;
        while (bits >= bits_per_char) {
            bits -= bits_per_char;
            out.push_back(alphabet[(buffer >> bits) & mask]);
        }
    }
    if (bits > 0) {
        out.push_back(alphabet[(buffer << (bits_per_char - bits)) & mask]);
    }
    return out;
}

Bytes decode_bits(std::string_view text, const std::array<int, 256>& table, unsigned bits_per_char,
                  std::string_view name) {
    Bytes out;
    out.reserve(text.size() * bits_per_char / 8);
    std::uint32_t buffer = 0;
    unsigned bits = 0;
    for (char c : text) {
        int v = table[static_cast<unsigned char>(c)];
        if (v < 0) fail(Errc::parse_error, "invalid " + std::string(name) + " character");
        buffer = (buffer << bits_per_char) | static_cast<std::uint32_t>(v);
        bits += bits_per_char;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<std::uint8_t>(buffer >> bits));
        }
    }
    // Leftover bits must be zero padding shorter than one character's worth.
    if (bits >= bits_per_char || (buffer & ((1u << bits) - 1)) != 0) {
        fail(Errc::parse_error, "non-canonical " + std::string(name) + " tail");
    }
    return out;
}

}  // namespace

std::string to_hex(ByteView data) {
    std::string out;
    out.reserve(data.size() * 2);
    for (std::uint8_t b : data) {
        out.push_back(kHexDigits[b >> 4]);
        out.push_back(kHexDigits[b & 0x0f]);
    }
    return out;
}

Bytes from_hex(std::string_view text) {
    if (text.size() % 2 != 0) fail(Errc::parse_error, "hex string has odd length");
    Bytes out(text.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        int hi = hex_value(text[2 * i]);
        int lo = hex_value(text[2 * i + 1]);
        if (hi < 0 || lo < 0) fail(Errc::parse_error, "invalid hex digit");
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
}

std::string base32_lower_encode(ByteView data) {
    return encode_bits(data, kBase32, 5);
}

Bytes base32_lower_decode(std::string_view text) {
    static const auto table = reverse_table(kBase32);
    return decode_bits(text, table, 5, "base32");
}

std::string base64url_encode(ByteView data) {
    return encode_bits(data, kBase64Url, 6);
}

Bytes base64url_decode(std::string_view text) {
    static const auto table = reverse_table(kBase64Url);
    return decode_bits(text, table, 6, "base64url");
}

}  // namespace custody
