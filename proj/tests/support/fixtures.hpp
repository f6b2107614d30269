// Copyright 2026 The Custody Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Published evaluation counts, rebuilt as confusion matrices.

#include <cmath>
#include <cstdint>

#include "custody/metrics.hpp"

namespace fixture {

using custody::metrics::ConfusionMatrix;

// Rows real, fake.
inline ConfusionMatrix video() { return {{"real", "fake"}, {{678, 212}, {79, 5560}}}; }

inline ConfusionMatrix four_generators() {
    return {{"ADM", "BigGAN", "Glide", "VQDM"},
            {{1199, 0, 0, 1}, {0, 1200, 0, 0}, {0, 0, 1195, 5}, {0, 0, 0, 1200}}};
}

struct ImageCounts {
    std::uint64_t real = 3068;
    std::uint64_t fake = 18143;
    std::uint64_t real_errors = 81;
    double accuracy = 0.9257;
};

// The fake-side errors follow from the rounded accuracy.
inline ConfusionMatrix image(const ImageCounts& c = {}) {
    const auto total = c.real + c.fake;
    const auto correct = static_cast<std::uint64_t>(std::llround(c.accuracy * static_cast<double>(total)));
    const auto real_ok = c.real - c.real_errors;
    const auto fake_ok = correct - real_ok;
    return {{"real", "fake"}, {{real_ok, c.real_errors}, {c.fake - fake_ok, fake_ok}}};
}

}  // namespace fixture
