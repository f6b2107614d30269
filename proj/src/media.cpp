// Copyright 2026 The Custody Authors
// SPDX-License-Identifier: Apache-2.0

#include "custody/media.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "custody/error.hpp"

namespace custody::media {

using features::ImageGrid;
using features::Waveform;

namespace {

std::uint32_t le32(ByteView d, std::size_t at) {
    return static_cast<std::uint32_t>(d[at]) | static_cast<std::uint32_t>(d[at + 1]) << 8 |
           static_cast<std::uint32_t>(d[at + 2]) << 16 | static_cast<std::uint32_t>(d[at + 3]) << 24;
}

std::uint16_t le16(ByteView d, std::size_t at) {
    return static_cast<std::uint16_t>(d[at] | d[at + 1] << 8);
}

void put_le32(Bytes& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_le16(Bytes& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

bool starts_with(ByteView d, std::string_view magic) {
    return d.size() >= magic.size() && std::equal(magic.begin(), magic.end(), d.begin(),
                                                  [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; });
}

}  // namespace

MediaKind sniff(ByteView d) {
    if (d.size() >= 12 && starts_with(d, "RIFF") && std::memcmp(d.data() + 8, "WAVE", 4) == 0) return MediaKind::wav;
    if (d.size() >= 3 && d[0] == 'P' && (d[1] == '5' || d[1] == '6') && std::isspace(d[2])) return MediaKind::pnm;
    if (starts_with(d, "CGRD")) return MediaKind::grid;
    return MediaKind::unknown;
}

Waveform decode_wav(ByteView d) {
    if (sniff(d) != MediaKind::wav) fail(Errc::unsupported_media, "not a RIFF/WAVE file");
    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    ByteView data;
    bool have_fmt = false, have_data = false;
    std::size_t pos = 12;
    while (pos + 8 <= d.size()) {
        const std::uint32_t size = le32(d, pos + 4);
        const std::size_t body = pos + 8;
        if (size > d.size() - body) fail(Errc::parse_error, "truncated WAV chunk");
        if (std::memcmp(d.data() + pos, "fmt ", 4) == 0) {
            if (size < 16) fail(Errc::parse_error, "short fmt chunk");
            format = le16(d, body);
            channels = le16(d, body + 2);
            rate = le32(d, body + 4);
            bits = le16(d, body + 14);
            if (format == 0xFFFE && size >= 26) format = le16(d, body + 24);
            have_fmt = true;
        } else if (std::memcmp(d.data() + pos, "data", 4) == 0) {
            data = d.subspan(body, size);
            have_data = true;
        }
        pos = body + size + (size & 1);
    }
    if (!have_fmt || !have_data) fail(Errc::parse_error, "WAV needs fmt and data chunks");
    if (channels == 0) fail(Errc::parse_error, "WAV has zero channels");
    if (rate == 0) fail(Errc::parse_error, "WAV has zero sample rate");

    const bool pcm = format == 1 && (bits == 16 || bits == 24 || bits == 32);
    const bool ieee = format == 3 && bits == 32;
    if (!pcm && !ieee) fail(Errc::unsupported_media, "WAV encoding must be PCM16/24/32 or float32");

    const std::size_t width = bits / 8;
    const std::size_t frames = data.size() / (width * channels);
    Waveform w;
    w.sample_rate = static_cast<int>(rate);
    w.samples.resize(frames);
    for (std::size_t f = 0; f < frames; ++f) {
        double acc = 0.0;
        for (std::size_t c = 0; c < channels; ++c) {
            const std::size_t at = (f * channels + c) * width;
            double v = 0.0;
            if (ieee) {
                v = std::bit_cast<float>(le32(data, at));
            } else if (bits == 16) {
                v = static_cast<std::int16_t>(le16(data, at)) / 32768.0;
            } else if (bits == 24) {
                std::int32_t s = data[at] | data[at + 1] << 8 | data[at + 2] << 16;
                if (s & 0x800000) s -= 0x1000000;
                v = s / 8388608.0;
            } else {
                v = static_cast<std::int32_t>(le32(data, at)) / 2147483648.0;
            }
            acc += v;
        }
        w.samples[f] = acc / channels;
    }
    features::require_finite(w.samples, "WAV samples");
    return w;
}

Bytes encode_wav_pcm16(const Waveform& w) {
    const auto n = static_cast<std::uint32_t>(w.samples.size());
    Bytes out;
    out.reserve(44 + 2 * n);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    put_le32(out, 36 + 2 * n);
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    put_le32(out, 16);
    put_le16(out, 1);
    put_le16(out, 1);
    put_le32(out, static_cast<std::uint32_t>(w.sample_rate));
    put_le32(out, static_cast<std::uint32_t>(w.sample_rate) * 2);
    put_le16(out, 2);
    put_le16(out, 16);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    put_le32(out, 2 * n);
    for (double s : w.samples) {
        const double c = std::clamp(s, -1.0, 32767.0 / 32768.0);
        put_le16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(c * 32768.0))));
    }
    return out;
}

ImageGrid decode_pnm(ByteView d) {
    if (sniff(d) != MediaKind::pnm) fail(Errc::unsupported_media, "not a binary PNM (P5/P6)");
    const std::size_t channels = d[1] == '6' ? 3 : 1;
    std::size_t pos = 2;
    auto next_int = [&]() -> std::uint64_t {
        while (pos < d.size()) {
            if (d[pos] == '#') {
                while (pos < d.size() && d[pos] != '\n') ++pos;
            } else if (std::isspace(d[pos])) {
                ++pos;
            } else {
                break;
            }
        }
        if (pos >= d.size() || !std::isdigit(d[pos])) fail(Errc::parse_error, "malformed PNM header");
        std::uint64_t v = 0;
        while (pos < d.size() && std::isdigit(d[pos])) {
            v = v * 10 + (d[pos++] - '0');
            if (v > 1'000'000) fail(Errc::parse_error, "PNM header value too large");
        }
        return v;
    };
    const std::uint64_t width = next_int();
    const std::uint64_t height = next_int();
    const std::uint64_t maxval = next_int();
    if (pos >= d.size() || !std::isspace(d[pos])) fail(Errc::parse_error, "malformed PNM header");
    ++pos;
    if (width == 0 || height == 0) fail(Errc::parse_error, "PNM has zero size");
    if (maxval == 0 || maxval > 65535) fail(Errc::parse_error, "PNM maxval out of range");
    const std::size_t bps = maxval > 255 ? 2 : 1;
    const std::size_t count = width * height * channels;
    if (d.size() - pos < count * bps) fail(Errc::parse_error, "truncated PNM raster");
    ImageGrid img(height, width, channels);
    for (std::size_t i = 0; i < count; ++i) {
        const unsigned v = bps == 1 ? d[pos + i] : (d[pos + 2 * i] << 8 | d[pos + 2 * i + 1]);
        img.pixels[i] = std::min(1.0, static_cast<double>(v) / static_cast<double>(maxval));
    }
    return img;
}

Bytes encode_pnm(const ImageGrid& img) {
    if (img.channels != 1 && img.channels != 3) fail(Errc::bad_channel_count, "PNM needs 1 or 3 channels");
    const std::string header = std::string(img.channels == 3 ? "P6" : "P5") + "\n" + std::to_string(img.width) + " " +
                               std::to_string(img.height) + "\n255\n";
    Bytes out(header.begin(), header.end());
    for (double v : img.pixels) out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
    return out;
}

GridFile decode_grid(ByteView d) {
    if (sniff(d) != MediaKind::grid) fail(Errc::unsupported_media, "not a grid file");
    if (d.size() < 20) fail(Errc::parse_error, "truncated grid header");
    GridFile g;
    g.frames = le32(d, 4);
    g.channels = le32(d, 8);
    g.height = le32(d, 12);
    g.width = le32(d, 16);
    const std::uint64_t count = std::uint64_t{g.frames} * g.channels * g.height * g.width;
    if (count == 0) fail(Errc::parse_error, "grid file has a zero dimension");
    if (count > (d.size() - 20) / 4 || d.size() - 20 != count * 4) fail(Errc::parse_error, "grid payload size mismatch");
    g.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) g.values[i] = std::bit_cast<float>(le32(d, 20 + 4 * i));
    return g;
}

Bytes encode_grid(const GridFile& g) {
    Bytes out{'C', 'G', 'R', 'D'};
    put_le32(out, g.frames);
    put_le32(out, g.channels);
    put_le32(out, g.height);
    put_le32(out, g.width);
    out.reserve(out.size() + 4 * g.values.size());
    for (float v : g.values) put_le32(out, std::bit_cast<std::uint32_t>(v));
    return out;
}

GridFile grid_from_frames(const std::vector<ImageGrid>& frames) {
    if (frames.empty()) fail(Errc::empty_video, "no frames");
    GridFile g;
    g.frames = static_cast<std::uint32_t>(frames.size());
    g.channels = static_cast<std::uint32_t>(frames[0].channels);
    g.height = static_cast<std::uint32_t>(frames[0].height);
    g.width = static_cast<std::uint32_t>(frames[0].width);
    for (const auto& f : frames) {
        if (f.channels != g.channels || f.height != g.height || f.width != g.width) {
            fail(Errc::bad_shape, "frames differ in shape");
        }
        for (double v : f.pixels) g.values.push_back(static_cast<float>(v));
    }
    return g;
}

GridFile grid_from_image(const ImageGrid& img) {
    return grid_from_frames({img});
}

GridFile grid_from_matrix(const features::Grid& m) {
    GridFile g;
    g.height = static_cast<std::uint32_t>(m.rows);
    g.width = static_cast<std::uint32_t>(m.cols);
    g.values.assign(m.values.begin(), m.values.end());
    return g;
}

std::vector<ImageGrid> frames_of(const GridFile& g) {
    if (g.channels != 1 && g.channels != 3) fail(Errc::bad_channel_count, "grid frames need 1 or 3 channels");
    const std::size_t per = std::size_t{g.channels} * g.height * g.width;
    std::vector<ImageGrid> out;
    out.reserve(g.frames);
    for (std::size_t f = 0; f < g.frames; ++f) {
        ImageGrid img(g.height, g.width, g.channels);
        for (std::size_t i = 0; i < per; ++i) img.pixels[i] = g.values[f * per + i];
        features::require_finite(img.pixels, "grid frame");
        out.push_back(std::move(img));
    }
    return out;
}

ImageGrid decode_image(ByteView d) {
    switch (sniff(d)) {
        case MediaKind::pnm: return decode_pnm(d);
        case MediaKind::grid: {
            auto frames = frames_of(decode_grid(d));
            if (frames.size() != 1) fail(Errc::bad_shape, "image grid must hold exactly one frame");
            return std::move(frames[0]);
        }
        default: fail(Errc::unsupported_media, "image must be PNM (P5/P6) or a grid file");
    }
}

std::vector<ImageGrid> decode_video(ByteView d) {
    switch (sniff(d)) {
        case MediaKind::grid: {
            auto frames = frames_of(decode_grid(d));
            if (frames.empty()) fail(Errc::empty_video, "video has no frames");
            return frames;
        }
        case MediaKind::pnm: return {decode_pnm(d)};
        default: fail(Errc::unsupported_media, "video must be a grid frame stack");
    }
}

Waveform decode_audio(ByteView d) {
    if (sniff(d) != MediaKind::wav) fail(Errc::unsupported_media, "audio must be WAV");
    return decode_wav(d);
}

Bytes read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::not_found, "cannot open " + path.string());
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, ByteView data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::storage_failure, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) fail(Errc::storage_failure, "short write to " + path.string());
}

}  // namespace custody::media
