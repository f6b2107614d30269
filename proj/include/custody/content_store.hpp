// Copyright 2026 The Custody Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>

#include "custody/common.hpp"

namespace custody::content {

// Raw blocks above this size are stored in the sidecar area keyed by their
// SHA-256 instead of by CID. Their CID is still the raw-codec CID of the
// whole byte string.
inline constexpr std::size_t kMaxRawBlockSize = std::size_t{1} << 20;

class ContentHash {
  public:
    static constexpr std::size_t kSize = 32;

    ContentHash() = default;
    explicit ContentHash(const std::array<std::uint8_t, kSize>& bytes) : bytes_(bytes) {}

    static ContentHash from_bytes(ByteView bytes);
    static ContentHash from_hex(std::string_view hex);

    const std::array<std::uint8_t, kSize>& bytes() const { return bytes_; }
    std::string hex() const;

    auto operator<=>(const ContentHash&) const = default;

  private:
    std::array<std::uint8_t, kSize> bytes_{};
};

ContentHash sha256(ByteView data);
ContentHash sha256(std::string_view data);

enum class Codec : std::uint8_t { raw = 0x55 };

// CIDv1 / raw / sha2-256 / multibase base32-lower ("b" prefix).
class Cid {
  public:
    static constexpr std::uint8_t kVersion = 0x01;
    static constexpr std::uint8_t kSha256Code = 0x12;
    static constexpr std::uint8_t kSha256Length = 0x20;

    static Cid for_digest(const ContentHash& digest);
    // Throws Errc::invalid_argument unless `text` is a CID in exactly this profile.
    static Cid parse(std::string_view text);

    const std::string& text() const { return text_; }
    const ContentHash& digest() const { return digest_; }
    Codec codec() const { return Codec::raw; }

    // 0x01 0x55 0x12 0x20 || digest
    Bytes binary() const;

    bool operator==(const Cid& other) const { return text_ == other.text_; }
    auto operator<=>(const Cid& other) const { return text_ <=> other.text_; }

  private:
    Cid(std::string text, ContentHash digest) : text_(std::move(text)), digest_(digest) {}

    std::string text_;
    ContentHash digest_;
};

Cid derive_cid(ByteView data);

// Local content-addressed blob store.
//
// Layout: <root>/<first-4-chars-of-cid>/<cid>, plus
// <root>/sidecar/<first-4-hex>/<sha256-hex> for blobs over kMaxRawBlockSize.
// Every read recomputes the CID of the stored bytes.
class BlobStore {
  public:
    explicit BlobStore(std::filesystem::path root);

    BlobStore(const BlobStore&) = delete;
    BlobStore& operator=(const BlobStore&) = delete;

    Cid put(ByteView data);
    Bytes get(const Cid& cid) const;

    bool contains(const Cid& cid) const;
    std::optional<std::uint64_t> size_of(const Cid& cid) const;
    std::size_t count() const;

    std::filesystem::path path_for(const Cid& cid, std::uint64_t size) const;
    // Location of an existing blob, whichever area it lives in.
    std::optional<std::filesystem::path> locate(const Cid& cid) const;

    const std::filesystem::path& root() const { return root_; }

  private:
    void rebuild_index();

    std::filesystem::path root_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, std::uint64_t> index_;
};

struct PinReceipt {
    Cid cid;
    std::uint64_t size = 0;
    std::string provider;
};

// Remote pinning seam. Only the local implementation ships; a Pinata-style
// client would implement the same call against the remote API.
class PinningClient {
  public:
    virtual ~PinningClient() = default;
    virtual PinReceipt pin(const Cid& cid, ByteView data) = 0;
};

class LocalPinningClient final : public PinningClient {
  public:
    explicit LocalPinningClient(BlobStore& store) : store_(store) {}

    PinReceipt pin(const Cid& cid, ByteView data) override;

  private:
    BlobStore& store_;
};

}  // namespace custody::content
