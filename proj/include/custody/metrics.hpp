// Copyright 2026 The Custody Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Evaluation metrics. Positive means fake / spoof everywhere.

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace custody::metrics {

// Rows are the true class, columns the predicted class.
struct ConfusionMatrix {
    std::vector<std::string> class_names;
    std::vector<std::vector<std::uint64_t>> counts;
};

struct ClassMetrics {
    std::string name;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::uint64_t support = 0;
};

struct ConfusionReport {
    std::uint64_t total = 0;
    double accuracy = 0.0;
    std::vector<ClassMetrics> per_class;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
};

ConfusionReport confusion_metrics(const ConfusionMatrix& cm);

struct ScoreSet {
    std::vector<double> scores;
    std::vector<bool> positive;

    void add(double score, bool is_positive) {
        scores.push_back(score);
        positive.push_back(is_positive);
    }
    std::size_t size() const { return scores.size(); }
};

struct RocPoint {
    double threshold = 0.0;  // score >= threshold is called positive
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocResult {
    double auc = 0.0;
    std::vector<RocPoint> points;  // from (0,0) at +inf down to the lowest score
};

struct EerResult {
    double eer = 0.0;
    double threshold = 0.0;
};

struct DcfParams {
    double p_target = 0.01;
    double c_miss = 1.0;
    double c_fa = 1.0;
};

struct DcfResult {
    double min_dcf = 0.0;
    double threshold = 0.0;  // +inf when rejecting everything is optimal
};

// Mann-Whitney statistic with ties counted as one half.
RocResult roc_auc(const ScoreSet& s);
// FAR = negatives with score >= t, FRR = positives with score < t, swept over
// the distinct scores plus +inf; linear interpolation at the crossing.
EerResult eer(const ScoreSet& s);
// Normalized DCF at a single threshold.
double dcf_at(const ScoreSet& s, double threshold, const DcfParams& p = {});
DcfResult min_dcf(const ScoreSet& s, const DcfParams& p = {});

// Lines `id<TAB>label<TAB>score`; blank lines and '#' comments skipped.
// spoof/fake/positive/1 are positive, bonafide/real/negative/0 negative.
ScoreSet parse_score_file(std::string_view text);
ScoreSet read_score_file(const std::filesystem::path& path);

struct MetricBlock {
    std::string name;
    std::vector<std::pair<std::string, double>> values;
};

MetricBlock confusion_block(std::string name, const ConfusionReport& r);
MetricBlock score_block(std::string name, const ScoreSet& s, const DcfParams& p = {});

struct Report {
    std::vector<MetricBlock> blocks;

    // Fixed-width text, four decimals.
    std::string text() const;
    // `block,metric,value` rows, four decimals.
    std::string csv() const;
};

std::string format4(double v);

}  // namespace custody::metrics
