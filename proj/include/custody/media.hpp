// Copyright 2026 The Custody Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Media ingestion: WAV audio, binary PNM images and the raw grid format
// used for video frame stacks and feature dumps. Type is decided by magic
// bytes, never by file name.
//
// Grid file layout (little endian):
//   "CGRD" u32 frames u32 channels u32 height u32 width
//   f32 values[frames][height][width][channels]

#include <cstdint>
#include <filesystem>
#include <vector>

#include "custody/common.hpp"
#include "custody/features.hpp"

namespace custody::media {

enum class MediaKind : std::uint8_t { unknown, wav, pnm, grid };

MediaKind sniff(ByteView data);

// PCM16, PCM24, PCM32, or IEEE float32; channels are averaged to mono.
features::Waveform decode_wav(ByteView data);
Bytes encode_wav_pcm16(const features::Waveform& w);

// P5 (gray) or P6 (RGB), maxval up to 65535.
features::ImageGrid decode_pnm(ByteView data);
// P5 for 1 channel, P6 for 3; 8-bit.
Bytes encode_pnm(const features::ImageGrid& img);

struct GridFile {
    std::uint32_t frames = 1;
    std::uint32_t channels = 1;
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::vector<float> values;
};

GridFile decode_grid(ByteView data);
Bytes encode_grid(const GridFile& g);

GridFile grid_from_image(const features::ImageGrid& img);
GridFile grid_from_frames(const std::vector<features::ImageGrid>& frames);
GridFile grid_from_matrix(const features::Grid& g);
std::vector<features::ImageGrid> frames_of(const GridFile& g);

// Single image from PNM or a one-frame grid file.
features::ImageGrid decode_image(ByteView data);
// Frame stack from a grid file (a single image counts as one frame).
std::vector<features::ImageGrid> decode_video(ByteView data);
features::Waveform decode_audio(ByteView data);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, ByteView data);

}  // namespace custody::media
