// Copyright 2026 The Custody Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Reference computations used as test oracles. Each one is written from the
// textbook definition with no shared code from the library under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace oracle {

struct Scores {
    std::vector<double> pos;
    std::vector<double> neg;
};

// P(pos > neg) + P(pos == neg) / 2 over all pairs.
inline double auc(const Scores& s) {
    double wins = 0.0;
    for (double p : s.pos) {
        for (double n : s.neg) wins += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
    }
    return wins / (static_cast<double>(s.pos.size()) * static_cast<double>(s.neg.size()));
}

struct Rates {
    double far, frr;
};

// Accept (call positive) when score >= t.
inline Rates rates_at(const Scores& s, double t) {
    double fa = 0, miss = 0;
    for (double n : s.neg) fa += n >= t;
    for (double p : s.pos) miss += p < t;
    return {fa / s.neg.size(), miss / s.pos.size()};
}

inline std::vector<double> candidate_thresholds(const Scores& s) {
    std::set<double> t(s.pos.begin(), s.pos.end());
    t.insert(s.neg.begin(), s.neg.end());
    std::vector<double> out(t.begin(), t.end());
    out.push_back(std::numeric_limits<double>::infinity());
    return out;
}

// Walk every candidate threshold upward; at the first one where FRR has
// caught up with FAR, intersect the two rate segments.
inline double eer(const Scores& s) {
    const auto th = candidate_thresholds(s);
    Rates prev{};
    for (std::size_t k = 0; k < th.size(); ++k) {
        const Rates r = rates_at(s, th[k]);
        if (r.frr >= r.far) {
            if (k == 0 || r.frr == r.far) return r.far;
            // FAR(a) = prev.far + a (r.far - prev.far), FRR(a) likewise; solve FAR = FRR.
            const double a = (prev.far - prev.frr) / ((prev.far - prev.frr) - (r.far - r.frr));
            return prev.far + a * (r.far - prev.far);
        }
        prev = r;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

inline double min_dcf(const Scores& s, double p_target, double c_miss, double c_fa) {
    const double norm = std::min(c_miss * p_target, c_fa * (1 - p_target));
    double best = std::numeric_limits<double>::infinity();
    for (double t : candidate_thresholds(s)) {
        const Rates r = rates_at(s, t);
        best = std::min(best, (c_miss * p_target * r.frr + c_fa * (1 - p_target) * r.far) / norm);
    }
    return best;
}

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

// Evaluates the 4-neighbour stencil [[0,-1,0],[-1,4,-1],[0,-1,0]] at every
// pixel by explicit kernel multiplication over an edge-replicated copy.
inline std::vector<double> laplacian(const std::vector<double>& img, std::size_t h, std::size_t w) {
    const double k[3][3] = {{0, -1, 0}, {-1, 4, -1}, {0, -1, 0}};
    std::vector<double> padded((h + 2) * (w + 2));
    for (std::size_t y = 0; y < h + 2; ++y) {
        for (std::size_t x = 0; x < w + 2; ++x) {
            const std::size_t sy = std::clamp<long>(static_cast<long>(y) - 1, 0, static_cast<long>(h) - 1);
            const std::size_t sx = std::clamp<long>(static_cast<long>(x) - 1, 0, static_cast<long>(w) - 1);
            padded[y * (w + 2) + x] = img[sy * w + sx];
        }
    }
    std::vector<double> out(h * w, 0.0);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            double acc = 0;
            for (int dy = 0; dy < 3; ++dy) {
                for (int dx = 0; dx < 3; ++dx) acc += k[dy][dx] * padded[(y + dy) * (w + 2) + x + dx];
            }
            out[y * w + x] = acc;
        }
    }
    return out;
}

inline double htk_mel(double hz) {
    return 2595.0 * std::log10(1.0 + hz / 700.0);
}

inline double htk_hz(double mel) {
    return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

class TempDir {
  public:
    explicit TempDir(const std::string& tag) {
        static std::mt19937_64 rng(std::random_device{}());
        path_ = std::filesystem::temp_directory_path() / ("custody-" + tag + "-" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

  private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace oracle
