#pragma once

// Threshold-sweep detection metrics. Scores are min-max normalized, the
// prediction rule at threshold h is score >= h, and ground-truth labels
// may be dilated by a tolerance l (each anomaly run extended l timestamps
// per side) before counting. The volumetric metrics sweep a full
// (threshold x tolerance) surface; the headline volume is the mean over
// tolerance slices of the per-slice trapezoidal area, so a
// tolerance-constant surface reduces exactly to the corresponding AUC.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "arta/tensor.hpp"

namespace arta {

struct Confusion {
    std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct PrF1 {
    double precision = 0.0, recall = 0.0, f1 = 0.0;
};

// Constant scores normalize to all-zeros.
inline std::vector<double> minmax_normalize(const std::vector<double>& s) {
    if (s.empty()) throw ConfigError("minmax_normalize: empty scores");
    double lo = s[0], hi = s[0];
    for (double v : s) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::vector<double> out(s.size(), 0.0);
    if (hi > lo)
        for (std::size_t i = 0; i < s.size(); ++i) out[i] = (s[i] - lo) / (hi - lo);
    return out;
}

// dilated[i] = 1 iff some label 1 lies within distance l of i
inline std::vector<std::uint8_t> dilate_labels(const std::vector<std::uint8_t>& labels, int l) {
    if (l < 0) throw ConfigError("dilate_labels: tolerance must be >= 0");
    std::int64_t n = static_cast<std::int64_t>(labels.size());
    std::vector<std::int64_t> cum(static_cast<std::size_t>(n) + 1, 0);
    for (std::int64_t i = 0; i < n; ++i) cum[static_cast<std::size_t>(i) + 1] = cum[static_cast<std::size_t>(i)] + labels[static_cast<std::size_t>(i)];
    std::vector<std::uint8_t> out(labels.size(), 0);
    for (std::int64_t i = 0; i < n; ++i) {
        std::int64_t a = std::max<std::int64_t>(0, i - l);
        std::int64_t b = std::min<std::int64_t>(n, i + l + 1);
        out[static_cast<std::size_t>(i)] = (cum[static_cast<std::size_t>(b)] - cum[static_cast<std::size_t>(a)]) > 0 ? 1 : 0;
    }
    return out;
}

namespace detail {

inline Confusion confusion_dilated(const std::vector<double>& scores01,
                                   const std::vector<std::uint8_t>& dilated, double h) {
    Confusion c;
    for (std::size_t i = 0; i < scores01.size(); ++i) {
        bool pred = scores01[i] >= h;
        bool pos = dilated[i] != 0;
        if (pred && pos) ++c.tp;
        else if (pred && !pos) ++c.fp;
        else if (!pred && pos) ++c.fn;
        else ++c.tn;
    }
    return c;
}

}  // namespace detail

// Point-wise confusion counts against tolerance-dilated labels. Scores
// must already be min-max normalized.
inline Confusion confusion(const std::vector<double>& scores01,
                           const std::vector<std::uint8_t>& labels, double h, int l) {
    if (scores01.size() != labels.size()) throw ConfigError("confusion: length mismatch");
    return detail::confusion_dilated(scores01, dilate_labels(labels, l), h);
}

// precision := 1 when nothing is predicted; f1 := 0 when both rates vanish
inline PrF1 pr_f1(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
    if (tp + fn == 0) throw EvalError("pr_f1: no positives in ground truth");
    PrF1 r;
    r.precision = (tp + fp == 0) ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    r.f1 = (r.precision + r.recall == 0.0)
               ? 0.0
               : 2.0 * r.precision * r.recall / (r.precision + r.recall);
    return r;
}

enum class VusMode { pr, roc };

// (I+1) x (J+1) grids of precision/recall (or TPR/FPR) indexed by
// threshold h_i = i/I and tolerance l_j.
struct MetricSurface {
    int I = 0, J = 0;
    std::vector<double> thresholds;  // I+1 ascending, 0..1
    std::vector<int> tolerances;     // J+1 ascending, starting at 0
    std::vector<double> grid_a;      // precision or TPR, (I+1)*(J+1) row-major in i
    std::vector<double> grid_b;      // recall or FPR

    double a(int i, int j) const { return grid_a[static_cast<std::size_t>(i) * (J + 1) + j]; }
    double b(int i, int j) const { return grid_b[static_cast<std::size_t>(i) * (J + 1) + j]; }
};

namespace detail {

struct SlicePoints {
    std::vector<double> a;  // precision or TPR per threshold
    std::vector<double> b;  // recall or FPR per threshold
};

inline void require_both_classes(const std::vector<std::uint8_t>& labels) {
    bool pos = false, neg = false;
    for (auto v : labels) (v ? pos : neg) = true;
    if (!pos || !neg) throw EvalError("metric undefined: labels contain a single class");
}

// One tolerance slice over all I+1 thresholds. Hits are counted leniently
// against the dilated labels, but recall/TPR normalize by the original
// positive count (capped at 1): tolerance rewards near-misses without
// inflating the recall burden, and a detector that nails the exact
// anomaly keeps recall 1 at every tolerance.
inline SlicePoints slice_points(const std::vector<double>& scores01,
                                const std::vector<std::uint8_t>& dilated,
                                std::int64_t original_pos, int I, VusMode mode) {
    std::int64_t dilated_pos = 0;
    for (auto v : dilated) dilated_pos += v;
    std::int64_t total_neg = static_cast<std::int64_t>(dilated.size()) - dilated_pos;
    if (original_pos == 0) throw EvalError("metric undefined: no positives in ground truth");
    if (total_neg == 0) throw EvalError("metric undefined: tolerance dilation covers every point");
    SlicePoints sp;
    sp.a.resize(static_cast<std::size_t>(I) + 1);
    sp.b.resize(static_cast<std::size_t>(I) + 1);
    for (int i = 0; i <= I; ++i) {
        double h = static_cast<double>(i) / static_cast<double>(I);
        Confusion c = confusion_dilated(scores01, dilated, h);
        double lenient_recall =
            std::min(1.0, static_cast<double>(c.tp) / static_cast<double>(original_pos));
        if (mode == VusMode::pr) {
            sp.a[static_cast<std::size_t>(i)] =
                (c.tp + c.fp == 0) ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
            sp.b[static_cast<std::size_t>(i)] = lenient_recall;
        } else {
            sp.a[static_cast<std::size_t>(i)] = lenient_recall;
            sp.b[static_cast<std::size_t>(i)] = static_cast<double>(c.fp) / static_cast<double>(total_neg);
        }
    }
    return sp;
}

// Trapezoidal area under the sampled curve, closed at the all-negative
// end: PR curves close at (recall 0, precision 1), ROC curves at (0, 0).
inline double slice_area(const SlicePoints& sp, VusMode mode) {
    double area = 0.0;
    for (std::size_t i = 1; i < sp.a.size(); ++i)
        area += (sp.b[i - 1] - sp.b[i]) * (sp.a[i] + sp.a[i - 1]) * 0.5;
    double close_a = mode == VusMode::pr ? 1.0 : 0.0;
    area += (sp.b.back() - 0.0) * (sp.a.back() + close_a) * 0.5;
    return area;
}

}  // namespace detail

inline double auc_pr(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels,
                     int I = 50) {
    if (scores.size() != labels.size()) throw ConfigError("auc_pr: length mismatch");
    detail::require_both_classes(labels);
    auto norm = minmax_normalize(scores);
    std::int64_t pos = 0;
    for (auto v : labels) pos += v;
    return detail::slice_area(detail::slice_points(norm, labels, pos, I, VusMode::pr), VusMode::pr);
}

inline double auc_roc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels,
                      int I = 50) {
    if (scores.size() != labels.size()) throw ConfigError("auc_roc: length mismatch");
    detail::require_both_classes(labels);
    auto norm = minmax_normalize(scores);
    std::int64_t pos = 0;
    for (auto v : labels) pos += v;
    return detail::slice_area(detail::slice_points(norm, labels, pos, I, VusMode::roc), VusMode::roc);
}

// Rank statistic: probability a random positive outranks a random
// negative, ties counted half. Kept independent of the sweep machinery as
// a cross-check route.
inline double auc_roc_rank(const std::vector<double>& scores,
                           const std::vector<std::uint8_t>& labels) {
    if (scores.size() != labels.size()) throw ConfigError("auc_roc_rank: length mismatch");
    detail::require_both_classes(labels);
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    // midranks over tie groups
    std::vector<double> rank(scores.size(), 0.0);
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        double mid = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
        i = j + 1;
    }
    double pos_rank_sum = 0.0;
    std::int64_t p = 0;
    for (std::size_t k = 0; k < labels.size(); ++k)
        if (labels[k]) {
            pos_rank_sum += rank[k];
            ++p;
        }
    std::int64_t n = static_cast<std::int64_t>(labels.size()) - p;
    return (pos_rank_sum - static_cast<double>(p) * (static_cast<double>(p) + 1.0) / 2.0) /
           (static_cast<double>(p) * static_cast<double>(n));
}

struct VusResult {
    double volume = 0.0;    // mean over tolerance slices of trapezoidal areas
    double raw_sum = 0.0;   // the literal quarter double-sum over i>=1, j>=1
    MetricSurface surface;
};

// Builds the (I+1) x (J+1) surface with tolerances l_j = round(j*l_max/J)
// and returns both the normalized volume (headline) and the literal
// double-sum (exported for reference; it is not confined to [0,1]).
inline VusResult vus(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels,
                     VusMode mode, int I, int J, int l_max) {
    if (scores.size() != labels.size()) throw ConfigError("vus: length mismatch");
    if (I < 1 || J < 1) throw ConfigError("vus: I and J must be >= 1");
    if (l_max < 0) throw ConfigError("vus: l_max must be >= 0");
    detail::require_both_classes(labels);
    auto norm = minmax_normalize(scores);

    VusResult res;
    res.surface.I = I;
    res.surface.J = J;
    res.surface.thresholds.resize(static_cast<std::size_t>(I) + 1);
    for (int i = 0; i <= I; ++i)
        res.surface.thresholds[static_cast<std::size_t>(i)] = static_cast<double>(i) / I;
    res.surface.tolerances.resize(static_cast<std::size_t>(J) + 1);
    for (int j = 0; j <= J; ++j)
        res.surface.tolerances[static_cast<std::size_t>(j)] =
            static_cast<int>(std::lround(static_cast<double>(j) * l_max / J));
    res.surface.grid_a.assign((static_cast<std::size_t>(I) + 1) * (J + 1), 0.0);
    res.surface.grid_b.assign((static_cast<std::size_t>(I) + 1) * (J + 1), 0.0);

    std::int64_t original_pos = 0;
    for (auto v : labels) original_pos += v;

    double volume = 0.0;
    std::vector<detail::SlicePoints> slices;
    slices.reserve(static_cast<std::size_t>(J) + 1);
    for (int j = 0; j <= J; ++j) {
        auto dil = dilate_labels(labels, res.surface.tolerances[static_cast<std::size_t>(j)]);
        auto sp = detail::slice_points(norm, dil, original_pos, I, mode);
        for (int i = 0; i <= I; ++i) {
            res.surface.grid_a[static_cast<std::size_t>(i) * (J + 1) + j] = sp.a[static_cast<std::size_t>(i)];
            res.surface.grid_b[static_cast<std::size_t>(i) * (J + 1) + j] = sp.b[static_cast<std::size_t>(i)];
        }
        volume += detail::slice_area(sp, mode);
        slices.push_back(std::move(sp));
    }
    res.volume = volume / static_cast<double>(J + 1);

    double raw = 0.0;
    for (int i = 1; i <= I; ++i)
        for (int j = 1; j <= J; ++j) {
            // PR mode: (R_i - R_{i-1})(P_i + P_{i-1}); ROC mode analogous
            double db = slices[static_cast<std::size_t>(j)].b[static_cast<std::size_t>(i)] -
                        slices[static_cast<std::size_t>(j)].b[static_cast<std::size_t>(i) - 1];
            double sa = slices[static_cast<std::size_t>(j)].a[static_cast<std::size_t>(i)] +
                        slices[static_cast<std::size_t>(j)].a[static_cast<std::size_t>(i) - 1];
            raw += db * sa;
        }
    res.raw_sum = 0.25 * raw;
    return res;
}

}  // namespace arta
