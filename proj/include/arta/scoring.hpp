#pragma once

// Inference-time scoring. Each stride-1 window is scored by one of three
// strategies and the scalar is assigned to the window's last timestamp;
// the first T-1 timestamps are padded with the first window's score so
// the output aligns with the input series.

#include <string>
#include <vector>

#include "arta/data.hpp"
#include "arta/detector.hpp"
#include "arta/generator.hpp"
#include "arta/model.hpp"

namespace arta {

enum class Strategy { detector, mask_weighted, sensitivity_gap };

inline Strategy strategy_from_string(const std::string& s) {
    if (s == "detector") return Strategy::detector;
    if (s == "mask_weighted") return Strategy::mask_weighted;
    if (s == "sensitivity_gap") return Strategy::sensitivity_gap;
    throw ConfigError("unknown strategy: " + s);
}

inline const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::detector: return "detector";
        case Strategy::mask_weighted: return "mask_weighted";
        default: return "sensitivity_gap";
    }
}

struct ScoreSeries {
    std::vector<double> s;  // length N, aligned to input timestamps
    Strategy strategy = Strategy::detector;
};

// Window must already be normalized with the model's statistics.
inline double score_window(const ModelParams& model, const Window& w, Strategy strategy) {
    if (strategy != Strategy::detector && !model.has_generator())
        throw ConfigError("strategy requires a generator but the model has none");
    int t = w.values.rows(), f = w.values.cols();
    double n = static_cast<double>(t) * f;
    Tensor rec = reconstruct(model.detector, w);
    switch (strategy) {
        case Strategy::detector:
            return loss_mse(w.values, rec);
        case Strategy::mask_weighted: {
            TemporalMask m = generate_mask(*model.generator, w);
            double acc = 0.0;
            for (int s = 0; s < t; ++s) {
                double mv = m.values[static_cast<std::size_t>(s)];
                for (int j = 0; j < f; ++j) {
                    double d = static_cast<double>(w.values.at(s, j)) - static_cast<double>(rec.at(s, j));
                    acc += mv * d * d;
                }
            }
            return acc / n;
        }
        default: {  // signed difference; may be negative
            TemporalMask m = generate_mask(*model.generator, w);
            Tensor base = model.baseline_for(w);
            Tensor blended = apply_mask_values(w.values, m, base);
            Tensor rec_masked = reconstruct_tensor(model.detector, blended);
            double acc = 0.0;
            for (int s = 0; s < t; ++s)
                for (int j = 0; j < f; ++j) {
                    double d1 = static_cast<double>(w.values.at(s, j)) - static_cast<double>(rec.at(s, j));
                    double d2 = static_cast<double>(blended.at(s, j)) -
                                static_cast<double>(rec_masked.at(s, j));
                    acc += d1 * d1 - d2 * d2;
                }
            return acc / n;
        }
    }
}

// Raw series in, normalized internally with the model's training-split
// statistics.
inline ScoreSeries score_series(const ModelParams& model, const TimeSeries& raw, Strategy strategy) {
    if (raw.f != model.features) throw ConfigError("score_series: sensor count mismatch");
    if (raw.n < model.window)
        throw ConfigError("score_series: series shorter than one window (" +
                          std::to_string(raw.n) + " < " + std::to_string(model.window) + ")");
    TimeSeries ts = raw;
    model.normalizer.apply(ts);
    std::vector<Window> windows = make_windows(ts, model.window, 1);
    ScoreSeries out;
    out.strategy = strategy;
    out.s.assign(static_cast<std::size_t>(ts.n), 0.0);
    double first = 0.0;
    for (std::size_t k = 0; k < windows.size(); ++k) {
        double v = score_window(model, windows[k], strategy);
        if (k == 0) first = v;
        out.s[static_cast<std::size_t>(windows[k].start_index + model.window - 1)] = v;
    }
    for (int i = 0; i < model.window - 1; ++i) out.s[static_cast<std::size_t>(i)] = first;
    return out;
}

}  // namespace arta
