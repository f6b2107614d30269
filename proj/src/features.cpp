// Copyright 2026 The Custody Authors
// SPDX-License-Identifier: Apache-2.0

#include "custody/features.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>

#include "custody/error.hpp"

namespace custody::features {

namespace {

// FFTW planning is not thread-safe; execution with new-array interface is.
// Buffers always come from fftw_malloc so cached plans stay valid for them.
std::mutex plan_mutex;

struct PlanKey {
    std::size_t rows;
    std::size_t cols;
    auto operator<=>(const PlanKey&) const = default;
};

fftw_plan plan_for(std::size_t rows, std::size_t cols) {
    static std::map<PlanKey, fftw_plan> cache;
    std::lock_guard lock(plan_mutex);
    auto it = cache.find({rows, cols});
    if (it != cache.end()) return it->second;
    const std::size_t out_cols = cols / 2 + 1;
    double* in = fftw_alloc_real(rows * cols);
    fftw_complex* out = fftw_alloc_complex(rows * out_cols);
    fftw_plan plan = rows == 1 ? fftw_plan_dft_r2c_1d(static_cast<int>(cols), in, out, FFTW_ESTIMATE)
                               : fftw_plan_dft_r2c_2d(static_cast<int>(rows), static_cast<int>(cols), in, out,
                                                      FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
    if (!plan) fail(Errc::invalid_argument, "fftw could not plan transform");
    cache.emplace(PlanKey{rows, cols}, plan);
    return plan;
}

std::vector<std::complex<double>> execute(const double* data, std::size_t rows, std::size_t cols) {
    fftw_plan plan = plan_for(rows, cols);
    const std::size_t out_cols = cols / 2 + 1;
    double* in = fftw_alloc_real(rows * cols);
    fftw_complex* out = fftw_alloc_complex(rows * out_cols);
    std::memcpy(in, data, rows * cols * sizeof(double));
    fftw_execute_dft_r2c(plan, in, out);
    std::vector<std::complex<double>> result(rows * out_cols);
    for (std::size_t i = 0; i < result.size(); ++i) result[i] = {out[i][0], out[i][1]};
    fftw_free(in);
    fftw_free(out);
    return result;
}

}  // namespace

std::vector<std::complex<double>> rfft(const std::vector<double>& x) {
    if (x.empty()) fail(Errc::bad_shape, "empty fft input");
    return execute(x.data(), 1, x.size());
}

std::vector<std::complex<double>> rfft2(const Grid& g) {
    if (g.rows == 0 || g.cols == 0) fail(Errc::bad_shape, "empty fft input");
    return execute(g.values.data(), g.rows, g.cols);
}

void require_finite(const std::vector<double>& values, const char* what) {
    for (double v : values) {
        if (!std::isfinite(v)) fail(Errc::non_finite_input, std::string(what) + " contains non-finite values");
    }
}

std::size_t mel_frame_count(std::size_t n, const MelParams& p) {
    if (n < p.win) return 0;
    return 1 + (n - p.win) / p.hop;
}

double hz_to_mel(double hz) {
    return 2595.0 * std::log10(1.0 + hz / 700.0);
}

double mel_to_hz(double mel) {
    return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

std::vector<double> hann_window(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    }
    return w;
}

std::vector<double> mel_band_edges(const MelParams& p) {
    const double lo = hz_to_mel(p.f_min);
    const double hi = hz_to_mel(p.f_max);
    std::vector<double> edges(p.n_mels + 2);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(p.n_mels + 1));
    }
    return edges;
}

Grid mel_filterbank(const MelParams& p) {
    const std::size_t bins = p.n_fft / 2 + 1;
    const auto edges = mel_band_edges(p);
    Grid fb(p.n_mels, bins);
    for (std::size_t m = 0; m < p.n_mels; ++m) {
        const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
        for (std::size_t k = 0; k < bins; ++k) {
            const double f = static_cast<double>(k) * p.sample_rate / static_cast<double>(p.n_fft);
            const double up = (f - left) / (center - left);
            const double down = (right - f) / (right - center);
            fb.at(m, k) = std::max(0.0, std::min(up, down));
        }
    }
    return fb;
}

Grid log_mel_energies(const Waveform& w, const MelParams& p) {
    if (w.sample_rate != p.sample_rate) {
        fail(Errc::invalid_argument, "waveform must be resampled to " + std::to_string(p.sample_rate) + " Hz");
    }
    require_finite(w.samples, "waveform");
    const std::size_t frames = mel_frame_count(w.samples.size(), p);
    if (frames == 0) fail(Errc::too_short, "waveform shorter than one analysis window");

    const auto window = hann_window(p.win);
    const Grid fb = mel_filterbank(p);
    const std::size_t bins = p.n_fft / 2 + 1;
    Grid out(p.n_mels, frames);
    std::vector<double> frame(p.n_fft, 0.0);
    std::vector<double> power(bins);
    for (std::size_t t = 0; t < frames; ++t) {
        const double* src = w.samples.data() + t * p.hop;
        std::fill(frame.begin(), frame.end(), 0.0);
        for (std::size_t i = 0; i < p.win; ++i) frame[i] = src[i] * window[i];
        const auto spec = rfft(frame);
        for (std::size_t k = 0; k < bins; ++k) power[k] = std::norm(spec[k]);
        for (std::size_t m = 0; m < p.n_mels; ++m) {
            double e = 0.0;
            for (std::size_t k = 0; k < bins; ++k) e += fb.at(m, k) * power[k];
            out.at(m, t) = std::log(std::max(e, p.log_floor));
        }
    }
    return out;
}

void normalize_utterance(Grid& g, double var_floor) {
    if (g.values.empty()) return;
    const double n = static_cast<double>(g.values.size());
    double mean = 0.0;
    for (double v : g.values) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : g.values) var += (v - mean) * (v - mean);
    var /= n;
    const double scale = 1.0 / std::sqrt(std::max(var, var_floor));
    for (double& v : g.values) v = (v - mean) * scale;
}

MelSpectrogram log_mel(const Waveform& w, const MelParams& p) {
    MelSpectrogram m{log_mel_energies(w, p), p};
    normalize_utterance(m.values, p.var_floor);
    return m;
}

ImageGrid grayscale(const ImageGrid& img) {
    if (img.channels == 1) return img;
    if (img.channels != 3) fail(Errc::bad_channel_count, "expected 1 or 3 channels");
    ImageGrid out(img.height, img.width, 1);
    for (std::size_t i = 0; i < img.height * img.width; ++i) {
        const double* px = &img.pixels[i * 3];
        out.pixels[i] = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
    }
    return out;
}

Grid hpf_laplacian(const ImageGrid& img) {
    if (img.channels != 1) fail(Errc::bad_channel_count, "high-pass filter needs a single channel");
    if (img.height < 3 || img.width < 3) fail(Errc::bad_shape, "high-pass filter needs at least 3x3 pixels");
    const std::size_t h = img.height, w = img.width;
    Grid out(h, w);
    for (std::size_t y = 0; y < h; ++y) {
        const std::size_t yu = y == 0 ? 0 : y - 1;
        const std::size_t yd = y + 1 == h ? y : y + 1;
        for (std::size_t x = 0; x < w; ++x) {
            const std::size_t xl = x == 0 ? 0 : x - 1;
            const std::size_t xr = x + 1 == w ? x : x + 1;
            // Sum of differences rather than 4c - neighbours: exactly 0 on flat regions.
            const double c = img.at(y, x);
            out.at(y, x) = (c - img.at(yu, x)) + (c - img.at(yd, x)) + (c - img.at(y, xl)) + (c - img.at(y, xr));
        }
    }
    return out;
}

ImageGrid resize_image(const ImageGrid& img, std::size_t height, std::size_t width) {
    if (height == 0 || width == 0) fail(Errc::bad_shape, "resize target must be at least 1x1");
    if (img.height == 0 || img.width == 0) fail(Errc::bad_shape, "cannot resize an empty image");

    struct Tap {
        std::size_t i0, i1;
        double f;
    };
    auto taps = [](std::size_t in, std::size_t out) {
        std::vector<Tap> t(out);
        const double scale = static_cast<double>(in) / static_cast<double>(out);
        for (std::size_t d = 0; d < out; ++d) {
            double s = (static_cast<double>(d) + 0.5) * scale - 0.5;
            s = std::clamp(s, 0.0, static_cast<double>(in - 1));
            const auto i0 = static_cast<std::size_t>(std::floor(s));
            const std::size_t i1 = std::min(i0 + 1, in - 1);
            t[d] = {i0, i1, s - static_cast<double>(i0)};
        }
        return t;
    };
    const auto ty = taps(img.height, height);
    const auto tx = taps(img.width, width);

    ImageGrid out(height, width, img.channels);
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            for (std::size_t c = 0; c < img.channels; ++c) {
                const double top = img.at(ty[y].i0, tx[x].i0, c) * (1 - tx[x].f) + img.at(ty[y].i0, tx[x].i1, c) * tx[x].f;
                const double bot = img.at(ty[y].i1, tx[x].i0, c) * (1 - tx[x].f) + img.at(ty[y].i1, tx[x].i1, c) * tx[x].f;
                out.at(y, x, c) = std::clamp(top * (1 - ty[y].f) + bot * ty[y].f, 0.0, 1.0);
            }
        }
    }
    return out;
}

}  // namespace custody::features
