// Copyright 2026 The Custody Authors
// SPDX-License-Identifier: Apache-2.0

#include "custody/content_store.hpp"

#include <algorithm>

#include <openssl/evp.h>

#include <atomic>
#include <fstream>
#include <mutex>
#include <system_error>

#include "custody/encoding.hpp"
#include "custody/error.hpp"

namespace custody::content {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kSidecarDir = "sidecar";

Bytes read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::storage_failure, "cannot open " + path.string());
    Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) fail(Errc::storage_failure, "read failed for " + path.string());
    return data;
}

// Write to a temp file in the target directory, then rename into place so
// readers never observe a partially written blob.
void write_file_atomic(const fs::path& path, ByteView data) {
    static std::atomic<std::uint64_t> counter{0};
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) fail(Errc::storage_failure, "cannot create " + path.parent_path().string() + ": " + ec.message());
    fs::path tmp = path;
    tmp += ".tmp" + std::to_string(counter.fetch_add(1));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(Errc::storage_failure, "cannot write " + tmp.string());
        out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
        out.flush();
        if (!out) fail(Errc::storage_failure, "write failed for " + tmp.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        fail(Errc::storage_failure, "cannot rename into " + path.string());
    }
}

}  // namespace

ContentHash ContentHash::from_bytes(ByteView bytes) {
    if (bytes.size() != kSize) fail(Errc::invalid_argument, "content hash must be 32 bytes");
    std::array<std::uint8_t, kSize> out{};
    std::copy(bytes.begin(), bytes.end(), out.begin());
    return ContentHash(out);
}

ContentHash ContentHash::from_hex(std::string_view hex) {
    if (hex.size() != 2 * kSize) fail(Errc::invalid_argument, "content hash hex must be 64 characters");
    for (char c : hex) {
        bool ok = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
        if (!ok) fail(Errc::invalid_argument, "content hash hex must be lowercase hex");
    }
    return from_bytes(custody::from_hex(hex));
}

std::string ContentHash::hex() const {
    return to_hex(bytes_);
}

ContentHash sha256(ByteView data) {
    std::array<std::uint8_t, ContentHash::kSize> out{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != out.size()) {
        fail(Errc::invalid_argument, "SHA-256 computation failed");
    }
    return ContentHash(out);
}

ContentHash sha256(std::string_view data) {
    return sha256(as_bytes(data));
}

Bytes Cid::binary() const {
    Bytes out(4 + ContentHash::kSize);
    out[0] = kVersion;
    out[1] = static_cast<std::uint8_t>(Codec::raw);
    out[2] = kSha256Code;
    out[3] = kSha256Length;
    std::copy(digest_.bytes().begin(), digest_.bytes().end(), out.begin() + 4);
    return out;
}

Cid Cid::for_digest(const ContentHash& digest) {
    Cid out("", digest);
    const Bytes bin = out.binary();
    return Cid("b" + base32_lower_encode(bin), digest);
}

Cid Cid::parse(std::string_view text) {
    if (text.empty() || text.front() != 'b') {
        fail(Errc::invalid_argument, "CID must use the base32-lower multibase prefix 'b'");
    }
    Bytes bin;
    try {
        bin = base32_lower_decode(text.substr(1));
    } catch (const Error&) {
        fail(Errc::invalid_argument, "CID is not valid base32");
    }
    if (bin.size() != 4 + ContentHash::kSize || bin[0] != kVersion ||
        bin[1] != static_cast<std::uint8_t>(Codec::raw) || bin[2] != kSha256Code || bin[3] != kSha256Length) {
        fail(Errc::invalid_argument, "CID is not CIDv1/raw/sha2-256");
    }
    return Cid(std::string(text), ContentHash::from_bytes(ByteView(bin).subspan(4)));
}

Cid derive_cid(ByteView data) {
    return Cid::for_digest(sha256(data));
}

BlobStore::BlobStore(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec) fail(Errc::storage_failure, "cannot create blob root " + root_.string() + ": " + ec.message());
    rebuild_index();
}

void BlobStore::rebuild_index() {
    std::unique_lock lock(mutex_);
    index_.clear();
    std::error_code ec;
    for (const auto& entry : fs::recursive_directory_iterator(root_, ec)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        const bool sidecar = entry.path().parent_path().parent_path().filename() == kSidecarDir;
        try {
            Cid cid = sidecar ? Cid::for_digest(ContentHash::from_hex(name)) : Cid::parse(name);
            index_[cid.text()] = entry.file_size();
        } catch (const Error&) {
            // Stray temp files and foreign files are not part of the store.
        }
    }
}

fs::path BlobStore::path_for(const Cid& cid, std::uint64_t size) const {
    if (size > kMaxRawBlockSize) {
        const std::string hex = cid.digest().hex();
        return root_ / kSidecarDir / hex.substr(0, 4) / hex;
    }
    return root_ / cid.text().substr(0, 4) / cid.text();
}

std::optional<fs::path> BlobStore::locate(const Cid& cid) const {
    std::error_code ec;
    fs::path raw = root_ / cid.text().substr(0, 4) / cid.text();
    if (fs::is_regular_file(raw, ec)) return raw;
    const std::string hex = cid.digest().hex();
    fs::path side = root_ / kSidecarDir / hex.substr(0, 4) / hex;
    if (fs::is_regular_file(side, ec)) return side;
    return std::nullopt;
}

Cid BlobStore::put(ByteView data) {
    Cid cid = derive_cid(data);
    std::unique_lock lock(mutex_);
    const fs::path path = path_for(cid, data.size());
    std::error_code ec;
    if (index_.contains(cid.text()) && fs::is_regular_file(path, ec) && fs::file_size(path, ec) == data.size()) {
        // Idempotent: only rewrite when the existing copy fails verification.
        try {
            if (derive_cid(read_file(path)) == cid) return cid;
        } catch (const Error&) {
        }
    }
    write_file_atomic(path, data);
    index_[cid.text()] = data.size();
    return cid;
}

Bytes BlobStore::get(const Cid& cid) const {
    std::optional<fs::path> path;
    {
        std::shared_lock lock(mutex_);
        path = locate(cid);
    }
    if (!path) fail(Errc::not_found, "no blob stored for " + cid.text());
    Bytes data = read_file(*path);
    if (derive_cid(data) != cid) {
        fail(Errc::integrity_violation, "stored bytes for " + cid.text() + " no longer match their CID");
    }
    return data;
}

bool BlobStore::contains(const Cid& cid) const {
    std::shared_lock lock(mutex_);
    return index_.contains(cid.text()) || locate(cid).has_value();
}

std::optional<std::uint64_t> BlobStore::size_of(const Cid& cid) const {
    std::shared_lock lock(mutex_);
    auto it = index_.find(cid.text());
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t BlobStore::count() const {
    std::shared_lock lock(mutex_);
    return index_.size();
}

PinReceipt LocalPinningClient::pin(const Cid& cid, ByteView data) {
    if (derive_cid(data) != cid) fail(Errc::integrity_violation, "pinned bytes do not match " + cid.text());
    Cid stored = store_.put(data);
    return PinReceipt{stored, data.size(), "local"};
}

}  // namespace custody::content
