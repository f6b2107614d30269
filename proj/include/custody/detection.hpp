// Copyright 2026 The Custody Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Detectors for the four modalities. The scorers are closed-form spectral
// baselines standing in for trained networks; each sits behind a Detector
// card so a learned model can replace it without changing callers.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "custody/common.hpp"
#include "custody/features.hpp"

namespace custody::detect {

using features::Grid;
using features::ImageGrid;
using features::Waveform;

double logistic(double x);

// Fraction of Hermitian-weighted |FFT| mass at normalized radius > cutoff,
// where radius 1 is the Nyquist frequency along an axis. 0 when the residual
// is flat (every |value| below 1e-9).
double high_band_ratio(const Grid& residual, double cutoff = 0.75);

struct ImageCalibration {
    double midpoint = 0.0;
    double slope = 1.0;
    std::size_t side = 380;
};

struct VideoCalibration {
    double alpha = 8.0;
    double beta = 4.0;
    double gamma = -4.0;
    std::size_t frames = 32;
    // Width of per-frame embeddings in the learned pipeline; informational.
    std::size_t embedding_dim = 1792;
};

struct AudioCalibration {
    double midpoint = 0.0;
    double slope = 1.0;
    std::size_t band_count = 20;
};

struct DetectorCard {
    std::string id;
    Modality modality = Modality::image;
    std::string version;
    std::string provenance;
    double threshold = 0.5;
};

struct DetectionResult {
    std::string detector_id;
    Modality modality = Modality::image;
    double score = 0.0;
    double threshold = 0.5;
    bool fake = false;
};

// Image baseline: grayscale, resize to side x side, Laplacian residual,
// logistic(slope * (high_band_ratio - midpoint)).
double image_feature(const ImageGrid& img, std::size_t side = 380);
double score_image(const ImageCalibration& cal, const ImageGrid& img);

struct FrameSequence {
    std::vector<ImageGrid> frames;
    std::vector<std::size_t> indices;
    std::size_t source_frame_count = 0;
};

// floor(i * n / count) for i in [0, count).
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count = 32);
FrameSequence sample_frames(const std::vector<ImageGrid>& video, std::size_t count = 32);

// logistic(alpha * mean + beta * stddev + gamma) over frame scores.
double aggregate_frame_scores(const VideoCalibration& cal, const std::vector<double>& frame_scores);
double score_video(const VideoCalibration& vcal, const ImageCalibration& ical, const FrameSequence& seq);

// Mean of the top band_count normalized mel rows minus the bottom band_count.
double audio_feature(const Waveform& w, std::size_t band_count = 20);
double score_audio(const AudioCalibration& cal, const Waveform& w);

class DetectorRegistry {
  public:
    DetectorRegistry();  // built-in defaults

    static DetectorRegistry from_json(const nlohmann::json& j);
    static DetectorRegistry load(const std::filesystem::path& path);
    nlohmann::ordered_json to_json() const;

    const DetectorCard& card(Modality m) const;
    DetectionResult detect_image(const ImageGrid& img) const;
    DetectionResult detect_video(const std::vector<ImageGrid>& frames) const;
    DetectionResult detect_audio(const Waveform& w) const;

    ImageCalibration image;
    VideoCalibration video;
    AudioCalibration audio;

  private:
    DetectionResult finish(Modality m, double score) const;
    std::map<Modality, DetectorCard> cards_;
};

// ---- fingerprinting ----

enum class Upsampler : std::uint8_t { none, nearest, bilinear, bicubic, zero_insertion };
inline constexpr std::array<Upsampler, 5> kAllUpsamplers = {Upsampler::none, Upsampler::nearest, Upsampler::bilinear,
                                                            Upsampler::bicubic, Upsampler::zero_insertion};
std::string_view to_string(Upsampler u);
Upsampler parse_upsampler(std::string_view s);

enum class Architecture : std::uint8_t { ADM, BigGAN, Glide, VQDM };
inline constexpr std::array<Architecture, 4> kAllArchitectures = {Architecture::ADM, Architecture::BigGAN,
                                                                  Architecture::Glide, Architecture::VQDM};
std::string_view to_string(Architecture a);
// Synthetic stand-ins: nearest, bilinear, bicubic, zero insertion.
Architecture architecture_for(Upsampler u);

inline constexpr std::size_t kRadialBins = 16;
inline constexpr std::size_t kSectorBins = 4;
inline constexpr std::size_t kSignatureSize = kRadialBins + kSectorBins;
using Signature = std::array<double, kSignatureSize>;

// Energy (|X|^2) statistics of the Laplacian residual spectrum.
struct SpectralProfile {
    double high_band_energy = 0.0;  // fraction above 0.75 Nyquist
    Signature signature{};          // log radial-band fractions, then sector fractions
};

// Profile of a single-channel image (no resizing).
SpectralProfile spectral_profile(const ImageGrid& gray);

struct Stage1Calibration {
    double center = 0.0;
    double spread = 1.0;
    double z_threshold = 1.0;
};

struct FingerprintCalibration {
    Stage1Calibration stage1;
    Signature mean{};
    Signature scale{};
    std::array<Signature, 4> centroids{};

    nlohmann::ordered_json to_json() const;
    static FingerprintCalibration from_json(const nlohmann::json& j);
    void save(const std::filesystem::path& path) const;
    static FingerprintCalibration load(const std::filesystem::path& path);
};

struct FingerprintVerdict {
    struct Stage1 {
        bool generated = false;
        double score = 0.0;  // >= 0.5 exactly when generated
    } stage1;
    struct Stage2 {
        Architecture architecture = Architecture::ADM;
        std::array<double, 4> class_scores{};
    };
    std::optional<Stage2> stage2;
};

FingerprintVerdict fingerprint(const FingerprintCalibration* cal, const ImageGrid& gray);
FingerprintVerdict fingerprint(const FingerprintCalibration* cal, const SpectralProfile& profile);

struct LabeledProfile {
    Upsampler label = Upsampler::none;
    SpectralProfile profile;
};

FingerprintCalibration fit_fingerprint(const std::vector<LabeledProfile>& samples);

// Predicted corpus label: none when stage 1 says real, else the stage-2 class.
Upsampler predicted_upsampler(const FingerprintVerdict& v);

// ---- synthetic corpus ----

struct CorpusSpec {
    std::size_t per_class_count = 500;
    std::uint64_t seed = 1;
    std::size_t base_side = 190;  // output side is 2 * base_side
};

std::uint64_t splitmix64(std::uint64_t x);
// Seed of item `index` of class `label`.
std::uint64_t item_seed(const CorpusSpec& spec, Upsampler label, std::size_t index);
ImageGrid generate_item(const CorpusSpec& spec, Upsampler label, std::size_t index);

// x2 upsampling kernels; `none` is not valid here.
ImageGrid upsample2(const ImageGrid& base, Upsampler kernel);

struct CorpusItem {
    Upsampler label = Upsampler::none;
    std::size_t index = 0;
    ImageGrid image;
};

// Visits items class by class in index order.
void for_each_item(const CorpusSpec& spec, const std::function<void(const CorpusItem&)>& visit);
std::vector<CorpusItem> generate_corpus(const CorpusSpec& spec);
std::vector<LabeledProfile> corpus_profiles(const CorpusSpec& spec);

struct SplitResult {
    std::vector<LabeledProfile> train;
    std::vector<LabeledProfile> test;
};
// Per-class split: the first train_fraction of every class (in index order) trains.
SplitResult split_profiles(const std::vector<LabeledProfile>& all, double train_fraction = 0.8);

struct FingerprintEvaluation {
    std::size_t total = 0;
    std::size_t correct = 0;         // 5-way corpus label
    std::size_t stage1_correct = 0;  // real vs generated
    std::array<std::array<std::size_t, 5>, 5> confusion{};
    double accuracy() const { return total ? static_cast<double>(correct) / total : 0.0; }
    double stage1_accuracy() const { return total ? static_cast<double>(stage1_correct) / total : 0.0; }
};

FingerprintEvaluation evaluate_fingerprint(const FingerprintCalibration& cal, const std::vector<LabeledProfile>& set);

}  // namespace custody::detect
