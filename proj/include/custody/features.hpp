// Copyright 2026 The Custody Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Deterministic signal front ends: log-mel spectrograms for audio, and
// grayscale / resize / Laplacian high-pass for images. All functions are
// pure and reentrant.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "custody/common.hpp"

namespace custody::features {

// Dense row-major real matrix.
struct Grid {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    Grid() = default;
    Grid(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

struct Waveform {
    std::vector<double> samples;
    int sample_rate = 16000;
};

// Interleaved HWC pixels in [0,1]; 1 or 3 channels.
struct ImageGrid {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 1;
    std::vector<double> pixels;

    ImageGrid() = default;
    ImageGrid(std::size_t h, std::size_t w, std::size_t c = 1, double fill = 0.0)
        : height(h), width(w), channels(c), pixels(h * w * c, fill) {}

    double& at(std::size_t y, std::size_t x, std::size_t ch = 0) { return pixels[(y * width + x) * channels + ch]; }
    double at(std::size_t y, std::size_t x, std::size_t ch = 0) const {
        return pixels[(y * width + x) * channels + ch];
    }
};

struct MelParams {
    int sample_rate = 16000;
    std::size_t n_mels = 80;
    std::size_t win = 400;
    std::size_t hop = 160;
    std::size_t n_fft = 512;
    double f_min = 20.0;
    double f_max = 7600.0;
    double log_floor = 1e-10;
    double var_floor = 1e-10;
};

struct MelSpectrogram {
    Grid values;  // n_mels x T
    MelParams params;
};

// 1 + floor((n - win) / hop) for n >= win, else 0.
std::size_t mel_frame_count(std::size_t n_samples, const MelParams& p = {});

double hz_to_mel(double hz);
double mel_to_hz(double mel);
// Periodic Hann window of length n.
std::vector<double> hann_window(std::size_t n);
// Filter edge frequencies in Hz: n_mels + 2 points, equally spaced in HTK mel.
std::vector<double> mel_band_edges(const MelParams& p = {});
// n_mels x (n_fft/2 + 1) triangular weights, linear in Hz.
Grid mel_filterbank(const MelParams& p = {});

// Log-mel energies before normalization.
Grid log_mel_energies(const Waveform& w, const MelParams& p = {});
// Global per-utterance mean/variance normalization in place.
void normalize_utterance(Grid& g, double var_floor = 1e-10);
MelSpectrogram log_mel(const Waveform& w, const MelParams& p = {});

ImageGrid grayscale(const ImageGrid& img);
// 4-neighbour Laplacian with replicate padding; requires one channel, H,W >= 3.
Grid hpf_laplacian(const ImageGrid& img);
// Bilinear resize with pixel-center alignment, output clamped to [0,1].
ImageGrid resize_image(const ImageGrid& img, std::size_t height, std::size_t width);
inline ImageGrid resize_image(const ImageGrid& img, std::size_t side) { return resize_image(img, side, side); }

// Throws NonFiniteInput if any value is NaN or infinite.
void require_finite(const std::vector<double>& values, const char* what);

// Real-input FFTs backed by FFTW. Plans are cached per size.
std::vector<std::complex<double>> rfft(const std::vector<double>& x);
// H x (W/2 + 1) half spectrum of a real grid.
std::vector<std::complex<double>> rfft2(const Grid& g);

}  // namespace custody::features
