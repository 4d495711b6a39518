#pragma once

// Trained-model container: detector and (optionally) generator weights,
// normalization statistics, spectral and optimizer state, and the handful
// of settings scoring needs to behave identically after a save/load.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "arta/data.hpp"
#include "arta/detector.hpp"
#include "arta/generator.hpp"
#include "arta/numerics.hpp"

namespace arta {

struct ModelParams {
    int window = 100;
    int hidden = 64;
    int features = 0;
    Aggregator aggregator = Aggregator::mean;
    bool baseline_zeros = false;  // ablation: blend against zeros instead of window means
    double lambda_sp = 0.01;
    double gamma_rob = 0.1;
    std::uint64_t seed = 0;

    DetectorParams detector;
    std::optional<GeneratorParams> generator;
    Normalizer normalizer;

    std::vector<SpectralState> spectral;  // aligned with detector.norm_matrices()
    AdamState opt_detector;
    AdamState opt_generator;

    bool has_generator() const { return generator.has_value(); }

    Tensor baseline_for(const Window& w) const {
        if (baseline_zeros) return Tensor::zeros(w.values.shape);
        return compute_baseline(w);
    }
};

inline ModelParams init_model(int features, int window, int hidden, std::uint64_t seed,
                              bool with_generator) {
    ModelParams m;
    m.features = features;
    m.window = window;
    m.hidden = hidden;
    m.seed = seed;
    Rng rng(seed);
    Rng init_rng = rng.split("init");
    m.detector = init_detector(features, hidden, init_rng);
    if (with_generator) m.generator = init_generator(features, hidden, window, init_rng);
    Rng sn_rng = rng.split("spectral");
    for (Tensor* w : m.detector.norm_matrices())
        m.spectral.push_back(SpectralState::init(w->rows(), sn_rng));
    {
        auto det = m.detector.tensors();
        std::vector<const Tensor*> cp(det.begin(), det.end());
        m.opt_detector = AdamState::init(cp);
    }
    if (with_generator) {
        auto gen = m.generator->tensors();
        std::vector<const Tensor*> cp(gen.begin(), gen.end());
        m.opt_generator = AdamState::init(cp);
    }
    return m;
}

// One power-iteration refresh and rescale of every detector weight matrix.
inline void apply_spectral_normalization(ModelParams& m, int iters) {
    auto mats = m.detector.norm_matrices();
    for (std::size_t i = 0; i < mats.size(); ++i) normalize_spectral(*mats[i], m.spectral[i], iters);
}

}  // namespace arta
