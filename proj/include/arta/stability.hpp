#pragma once

// Empirical verification of the score-stability bounds. The Lipschitz
// constant of the aggregated score is not available in closed form for an
// LSTM, so a sampled estimate L_hat replaces it and every check reports
// violation rates and slack against that estimate rather than asserting a
// proof.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "arta/data.hpp"
#include "arta/generator.hpp"
#include "arta/model.hpp"
#include "arta/rng.hpp"

namespace arta {

using ScoreFn = std::function<double(const Tensor&)>;  // T x F values -> scalar score

inline ScoreFn detector_score_fn(const ModelParams& model) {
    return [&model](const Tensor& values) {
        Window w;
        w.values = values;
        return anomaly_score(model.detector, w, Aggregator::mean);
    };
}

struct LipschitzEstimate {
    double l_hat = 0.0;
    int pairs = 0;
    double eps_scale = 0.0;
};

namespace detail {

inline double l1_norm_diff(const Tensor& a, const Tensor& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        acc += std::abs(static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]));
    return acc;
}

inline double linf_norm_diff(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a.data[i]) - static_cast<double>(b.data[i])));
    return m;
}

}  // namespace detail

// max over sampled perturbation pairs of |score(x+d) - score(x)| / ||d||_1,
// with d uniform and ||d||_inf <= eps_scale.
inline LipschitzEstimate estimate_lipschitz(const ScoreFn& score, const std::vector<Window>& windows,
                                            int n_pairs, double eps_scale, Rng& rng) {
    if (windows.empty()) throw ConfigError("estimate_lipschitz: no windows");
    if (n_pairs < 1) throw ConfigError("estimate_lipschitz: n_pairs must be >= 1");
    LipschitzEstimate est;
    est.pairs = n_pairs;
    est.eps_scale = eps_scale;
    for (int k = 0; k < n_pairs; ++k) {
        const Window& w = windows[static_cast<std::size_t>(k) % windows.size()];
        Tensor perturbed = w.values;
        double l1 = 0.0;
        for (auto& v : perturbed.data) {
            double d = rng.uniform(-eps_scale, eps_scale);
            l1 += std::abs(d);
            v = static_cast<float>(static_cast<double>(v) + d);
        }
        if (l1 == 0.0) continue;
        double dev = std::abs(score(perturbed) - score(w.values));
        est.l_hat = std::max(est.l_hat, dev / l1);
    }
    return est;
}

inline LipschitzEstimate estimate_lipschitz(const ModelParams& model,
                                            const std::vector<Window>& windows, int n_pairs,
                                            double eps_scale, Rng& rng) {
    return estimate_lipschitz(detector_score_fn(model), windows, n_pairs, eps_scale, rng);
}

struct StabilityTrial {
    double deviation = 0.0;  // |A(x~_d) - A(x~)|
    double bound = 0.0;      // L_hat * eps * ||m||_1 * F
    double ratio = 0.0;      // deviation / bound (0 when bound is 0)
};

struct StabilityReport {
    std::vector<StabilityTrial> trials;
    double violation_rate = 0.0;  // fraction with deviation > bound
    double max_ratio = 0.0;
    double l_hat = 0.0;

    void finalize() {
        int viol = 0;
        for (const auto& t : trials) {
            if (t.deviation > t.bound) ++viol;
            max_ratio = std::max(max_ratio, t.ratio);
        }
        violation_rate = trials.empty() ? 0.0 : static_cast<double>(viol) / trials.size();
    }
};

// Bounded-perturbation stability: draw d with ||d||_inf <= eps, blend both
// x and x+d with the same fixed mask and baseline, and compare the score
// deviation against L_hat * eps * ||m||_1 * F. The sensor-count factor is
// explicit rather than folded into the constant.
inline StabilityReport check_masked_stability(const ModelParams& model, const std::vector<Window>& windows,
                                      double eps, int n_trials, double l_hat, Rng& rng) {
    if (eps <= 0.0) throw ConfigError("check_masked_stability: eps must be > 0");
    if (!model.has_generator()) throw ConfigError("check_masked_stability: model has no generator");
    StabilityReport rep;
    rep.l_hat = l_hat;
    ScoreFn score = detector_score_fn(model);
    for (int k = 0; k < n_trials; ++k) {
        const Window& w = windows[static_cast<std::size_t>(k) % windows.size()];
        TemporalMask m = generate_mask(*model.generator, w);
        Tensor base = model.baseline_for(w);
        Tensor blended = apply_mask_values(w.values, m, base);
        Window perturbed = w;
        for (auto& v : perturbed.values.data)
            v = static_cast<float>(static_cast<double>(v) + rng.uniform(-eps, eps));
        Tensor blended_pert = apply_mask_values(perturbed.values, m, base);
        StabilityTrial t;
        t.deviation = std::abs(score(blended_pert) - score(blended));
        t.bound = l_hat * eps * mask_l1(m) * static_cast<double>(w.values.cols());
        t.ratio = t.bound > 0.0 ? t.deviation / t.bound : 0.0;
        rep.trials.push_back(t);
    }
    rep.finalize();
    return rep;
}

struct CapacityReport {
    int pairs = 0;
    int capacity_violations = 0;   // ||x~1 - x~2||_1 > 2 k F ||x - b||_inf
    int score_violations = 0;      // |A(x~1) - A(x~2)| > L_hat ||x~1 - x~2||_1
    double max_capacity_ratio = 0.0;
    double max_score_ratio = 0.0;
    int holder_violations = 0;     // the per-sample Hoelder step
};

// Draw random masks with l1 budget k (rescaled when over budget) and check
// the perturbation-capacity bound with the explicit F factor, plus the
// composed score-variability bound against L_hat.
inline CapacityReport check_capacity(const Tensor& x, const Tensor& base, double k, int n_pairs,
                                     const ScoreFn& score, double l_hat, Rng& rng) {
    require_same_shape(x, base, "check_capacity");
    int t = x.rows(), f = x.cols();
    CapacityReport rep;
    rep.pairs = n_pairs;
    double xb_inf = detail::linf_norm_diff(x, base);

    auto sample_mask = [&]() {
        TemporalMask m;
        m.values = Tensor::zeros({t});
        double l1 = 0.0;
        for (auto& v : m.values.data) {
            v = static_cast<float>(rng.uniform());
            l1 += v;
        }
        if (l1 > k) {
            double scale = k / l1;
            for (auto& v : m.values.data) v = static_cast<float>(v * scale);
        }
        return m;
    };

    // float32 blending leaves ~ulp-scale residue even in algebraically
    // exact cases (x == b), so inequality checks carry a rounding allowance
    double fp_slack = 0.0;
    for (std::size_t i = 0; i < x.data.size(); ++i)
        fp_slack += std::abs(static_cast<double>(x.data[i])) + std::abs(static_cast<double>(base.data[i]));
    fp_slack = fp_slack * 1e-6 + 1e-9;

    for (int p = 0; p < n_pairs; ++p) {
        TemporalMask m1 = sample_mask();
        TemporalMask m2 = sample_mask();
        Tensor b1 = apply_mask_values(x, m1, base);
        Tensor b2 = apply_mask_values(x, m2, base);
        double diff = detail::l1_norm_diff(b1, b2);
        double cap_bound = 2.0 * k * static_cast<double>(f) * xb_inf;
        if (diff > cap_bound + fp_slack) ++rep.capacity_violations;
        if (cap_bound > 0.0) rep.max_capacity_ratio = std::max(rep.max_capacity_ratio, diff / cap_bound);

        // Hoelder step: ||(x-b) . (m1-m2)||_1 <= ||x-b||_inf ||m1-m2||_1 F
        double mdiff_l1 = 0.0;
        for (int s = 0; s < t; ++s)
            mdiff_l1 += std::abs(static_cast<double>(m1.values[static_cast<std::size_t>(s)]) -
                                 static_cast<double>(m2.values[static_cast<std::size_t>(s)]));
        if (diff > xb_inf * mdiff_l1 * static_cast<double>(f) + fp_slack)
            ++rep.holder_violations;

        double sdev = std::abs(score(b1) - score(b2));
        double sbound = l_hat * diff;
        if (sdev > sbound) ++rep.score_violations;
        if (sbound > 0.0) rep.max_score_ratio = std::max(rep.max_score_ratio, sdev / sbound);
    }
    return rep;
}

}  // namespace arta
