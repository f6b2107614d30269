// Copyright 2026 The Custody Authors
// SPDX-License-Identifier: Apache-2.0

#include "custody/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "custody/error.hpp"

namespace custody::metrics {

namespace {

double ratio(double num, double den) {
    return den > 0.0 ? num / den : 0.0;
}

struct Counts {
    std::size_t pos = 0;
    std::size_t neg = 0;
};

Counts validate(const ScoreSet& s) {
    if (s.scores.size() != s.positive.size()) fail(Errc::invalid_argument, "scores and labels differ in length");
    Counts c;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!std::isfinite(s.scores[i])) fail(Errc::non_finite_input, "score set contains a non-finite score");
        (s.positive[i] ? c.pos : c.neg) += 1;
    }
    if (c.pos == 0 || c.neg == 0) fail(Errc::single_class, "score set needs both positive and negative samples");
    return c;
}

// Operating points at each distinct score (ascending) and at +inf.
// miss[k] = positives below threshold k, fa[k] = negatives at or above it.
struct Sweep {
    std::vector<double> thresholds;
    std::vector<std::size_t> miss;
    std::vector<std::size_t> fa;
    Counts n;
};

Sweep sweep(const ScoreSet& s) {
    Sweep w;
    w.n = validate(s);
    std::vector<std::size_t> order(s.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.scores[a] < s.scores[b]; });
    std::size_t pos_below = 0, neg_below = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double t = s.scores[order[i]];
        w.thresholds.push_back(t);
        w.miss.push_back(pos_below);
        w.fa.push_back(w.n.neg - neg_below);
        for (; i < order.size() && s.scores[order[i]] == t; ++i) (s.positive[order[i]] ? pos_below : neg_below) += 1;
    }
    w.thresholds.push_back(std::numeric_limits<double>::infinity());
    w.miss.push_back(w.n.pos);
    w.fa.push_back(0);
    return w;
}

}  // namespace

ConfusionReport confusion_metrics(const ConfusionMatrix& cm) {
    const std::size_t k = cm.counts.size();
    if (k == 0) fail(Errc::empty_matrix, "confusion matrix has no classes");
    for (const auto& row : cm.counts) {
        if (row.size() != k) fail(Errc::invalid_argument, "confusion matrix must be square");
    }
    if (!cm.class_names.empty() && cm.class_names.size() != k) {
        fail(Errc::invalid_argument, "class name count does not match matrix");
    }
    ConfusionReport r;
    std::uint64_t trace = 0;
    std::vector<std::uint64_t> row_sum(k, 0), col_sum(k, 0);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            row_sum[i] += cm.counts[i][j];
            col_sum[j] += cm.counts[i][j];
            r.total += cm.counts[i][j];
        }
        trace += cm.counts[i][i];
    }
    if (r.total == 0) fail(Errc::empty_matrix, "confusion matrix is empty");
    r.accuracy = static_cast<double>(trace) / static_cast<double>(r.total);
    for (std::size_t i = 0; i < k; ++i) {
        ClassMetrics m;
        m.name = cm.class_names.empty() ? "class" + std::to_string(i) : cm.class_names[i];
        const auto tp = static_cast<double>(cm.counts[i][i]);
        m.precision = ratio(tp, static_cast<double>(col_sum[i]));
        m.recall = ratio(tp, static_cast<double>(row_sum[i]));
        m.f1 = ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
        m.support = row_sum[i];
        r.macro_precision += m.precision;
        r.macro_recall += m.recall;
        r.macro_f1 += m.f1;
        r.per_class.push_back(std::move(m));
    }
    r.macro_precision /= static_cast<double>(k);
    r.macro_recall /= static_cast<double>(k);
    r.macro_f1 /= static_cast<double>(k);
    return r;
}

RocResult roc_auc(const ScoreSet& s) {
    const Counts n = validate(s);
    std::vector<std::size_t> order(s.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.scores[a] < s.scores[b]; });

    // Average ranks over tie groups.
    double rank_sum_pos = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && s.scores[order[j]] == s.scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t q = i; q < j; ++q) {
            if (s.positive[order[q]]) rank_sum_pos += avg_rank;
        }
        i = j;
    }
    const double np = static_cast<double>(n.pos), nn = static_cast<double>(n.neg);
    RocResult r;
    r.auc = (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);

    const Sweep w = sweep(s);
    for (std::size_t k = w.thresholds.size(); k-- > 0;) {
        r.points.push_back({w.thresholds[k], static_cast<double>(w.fa[k]) / nn,
                            static_cast<double>(n.pos - w.miss[k]) / np});
    }
    return r;
}

EerResult eer(const ScoreSet& s) {
    const Sweep w = sweep(s);
    const double np = static_cast<double>(w.n.pos), nn = static_cast<double>(w.n.neg);
    for (std::size_t k = 0; k < w.thresholds.size(); ++k) {
        const double frr = static_cast<double>(w.miss[k]) / np;
        const double far = static_cast<double>(w.fa[k]) / nn;
        if (frr < far) continue;
        if (frr == far || k == 0) return {far, w.thresholds[k]};
        const double frr0 = static_cast<double>(w.miss[k - 1]) / np;
        const double far0 = static_cast<double>(w.fa[k - 1]) / nn;
        // d(t) = FRR - FAR moves from negative to positive across the step.
        const double d0 = frr0 - far0, d1 = frr - far;
        const double t = -d0 / (d1 - d0);
        const double rate = far0 + t * (far - far0);
        const double th = std::isinf(w.thresholds[k]) ? w.thresholds[k - 1]
                                                      : w.thresholds[k - 1] + t * (w.thresholds[k] - w.thresholds[k - 1]);
        return {rate, th};
    }
    fail(Errc::invalid_argument, "no equal-error crossing");
}

namespace {

void check_params(const DcfParams& p) {
    if (!(p.p_target > 0.0 && p.p_target < 1.0)) fail(Errc::invalid_argument, "p_target must lie in (0, 1)");
    if (!(p.c_miss > 0.0 && p.c_fa > 0.0)) fail(Errc::invalid_argument, "DCF costs must be positive");
}

double normalized_dcf(double p_miss, double p_fa, const DcfParams& p) {
    const double raw = p.c_miss * p.p_target * p_miss + p.c_fa * (1.0 - p.p_target) * p_fa;
    return raw / std::min(p.c_miss * p.p_target, p.c_fa * (1.0 - p.p_target));
}

}  // namespace

double dcf_at(const ScoreSet& s, double threshold, const DcfParams& p) {
    check_params(p);
    const Counts n = validate(s);
    std::size_t miss = 0, fa = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.positive[i] && s.scores[i] < threshold) ++miss;
        if (!s.positive[i] && s.scores[i] >= threshold) ++fa;
    }
    return normalized_dcf(static_cast<double>(miss) / n.pos, static_cast<double>(fa) / n.neg, p);
}

DcfResult min_dcf(const ScoreSet& s, const DcfParams& p) {
    check_params(p);
    const Sweep w = sweep(s);
    DcfResult best{std::numeric_limits<double>::infinity(), 0.0};
    for (std::size_t k = 0; k < w.thresholds.size(); ++k) {
        const double v = normalized_dcf(static_cast<double>(w.miss[k]) / w.n.pos,
                                        static_cast<double>(w.fa[k]) / w.n.neg, p);
        if (v < best.min_dcf) best = {v, w.thresholds[k]};
    }
    return best;
}

ScoreSet parse_score_file(std::string_view text) {
    ScoreSet s;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || line.front() == '#') {
            if (end == text.size()) break;
            continue;
        }
        std::vector<std::string_view> cols;
        for (std::size_t a = 0;;) {
            const std::size_t b = line.find('\t', a);
            cols.push_back(line.substr(a, b == std::string_view::npos ? std::string_view::npos : b - a));
            if (b == std::string_view::npos) break;
            a = b + 1;
        }
        const std::string where = "score file line " + std::to_string(line_no);
        if (cols.size() != 3) fail(Errc::parse_error, where + ": expected id<TAB>label<TAB>score");
        bool positive = false;
        const std::string_view label = cols[1];
        if (label == "spoof" || label == "fake" || label == "positive" || label == "1") {
            positive = true;
        } else if (label == "bonafide" || label == "real" || label == "negative" || label == "0") {
            positive = false;
        } else {
            fail(Errc::parse_error, where + ": unknown label '" + std::string(label) + "'");
        }
        double score = 0.0;
        try {
            std::size_t used = 0;
            score = std::stod(std::string(cols[2]), &used);
            if (used != cols[2].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            fail(Errc::parse_error, where + ": bad score '" + std::string(cols[2]) + "'");
        }
        if (!std::isfinite(score)) fail(Errc::non_finite_input, where + ": non-finite score");
        s.add(score, positive);
        if (end == text.size()) break;
    }
    return s;
}

ScoreSet read_score_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::not_found, "cannot open score file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_score_file(buf.str());
}

std::string format4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

MetricBlock confusion_block(std::string name, const ConfusionReport& r) {
    MetricBlock b{std::move(name), {}};
    b.values.emplace_back("accuracy", r.accuracy);
    for (const auto& c : r.per_class) {
        b.values.emplace_back(c.name + ".precision", c.precision);
        b.values.emplace_back(c.name + ".recall", c.recall);
        b.values.emplace_back(c.name + ".f1", c.f1);
    }
    b.values.emplace_back("macro.precision", r.macro_precision);
    b.values.emplace_back("macro.recall", r.macro_recall);
    b.values.emplace_back("macro.f1", r.macro_f1);
    return b;
}

MetricBlock score_block(std::string name, const ScoreSet& s, const DcfParams& p) {
    const auto roc = roc_auc(s);
    const auto e = eer(s);
    const auto d = min_dcf(s, p);
    MetricBlock b{std::move(name), {}};
    b.values.emplace_back("auc", roc.auc);
    b.values.emplace_back("eer", e.eer);
    b.values.emplace_back("eer_threshold", e.threshold);
    b.values.emplace_back("min_dcf", d.min_dcf);
    b.values.emplace_back("dcf.p_target", p.p_target);
    b.values.emplace_back("dcf.c_miss", p.c_miss);
    b.values.emplace_back("dcf.c_fa", p.c_fa);
    return b;
}

std::string Report::text() const {
    if (blocks.empty()) fail(Errc::invalid_argument, "report has no metric blocks");
    std::size_t width = 0;
    for (const auto& b : blocks) {
        for (const auto& [k, _] : b.values) width = std::max(width, k.size());
    }
    std::string out;
    for (const auto& b : blocks) {
        if (!out.empty()) out += '\n';
        out += "[" + b.name + "]\n";
        for (const auto& [k, v] : b.values) {
            out += "  " + k + std::string(width - k.size() + 2, ' ') + format4(v) + "\n";
        }
    }
    return out;
}

std::string Report::csv() const {
    if (blocks.empty()) fail(Errc::invalid_argument, "report has no metric blocks");
    std::string out = "block,metric,value\n";
    for (const auto& b : blocks) {
        for (const auto& [k, v] : b.values) out += b.name + "," + k + "," + format4(v) + "\n";
    }
    return out;
}

}  // namespace custody::metrics
