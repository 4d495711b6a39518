#pragma once

// Two-stage training: detector-only warm-up, then per-batch alternating
// generator/detector updates. The generator maximizes the detector's
// reconstruction error on mask-blended inputs under an l1 sparsity
// penalty; the detector minimizes clean reconstruction error plus a
// weighted error on the perturbed inputs.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "arta/data.hpp"
#include "arta/detector.hpp"
#include "arta/generator.hpp"
#include "arta/graph.hpp"
#include "arta/model.hpp"
#include "arta/numerics.hpp"
#include "arta/rng.hpp"

namespace arta {

struct TrainConfig {
    int window = 100;
    int hidden = 64;
    int warmup_epochs = 10;
    int joint_epochs = 100;
    double lambda_sp = 0.01;
    double gamma_rob = 0.1;
    double lr = 1e-4;
    int batch = 32;
    std::uint64_t seed = 0;
    Aggregator aggregator = Aggregator::mean;
    double split_fraction = 0.5;
    int stride = 1;

    // ablation switches
    bool no_generator = false;
    bool no_adversarial = false;
    bool no_sparsity = false;
    bool no_baseline = false;

    void validate() const {
        if (window < 1) throw ConfigError("window must be >= 1");
        if (hidden < 1) throw ConfigError("hidden must be >= 1");
        if (warmup_epochs < 0 || joint_epochs < 0) throw ConfigError("epochs must be >= 0");
        if (lambda_sp < 0.0) throw ConfigError("lambda_sp must be >= 0");
        if (gamma_rob < 0.0) throw ConfigError("gamma_rob must be >= 0");
        if (batch < 1) throw ConfigError("batch must be >= 1");
        if (lr <= 0.0) throw ConfigError("lr must be > 0");
        if (stride < 1) throw ConfigError("stride must be >= 1");
    }
};

struct EpochRecord {
    std::string phase;  // "warmup" or "joint"
    int epoch = 0;
    double mean_ld = 0.0;
    std::optional<double> mean_lg;
    std::optional<double> mean_mask_l1;
    std::optional<double> grad_check;  // spot-check max relative error
};

struct TrainReport {
    std::vector<EpochRecord> records;
};

namespace detail {

inline double effective_lambda(const TrainConfig& cfg) {
    return cfg.no_sparsity ? 0.0 : cfg.lambda_sp;
}

struct BatchGrads {
    std::vector<Tensor> acc;

    void init(const std::vector<Tensor*>& params) {
        acc.clear();
        for (Tensor* p : params) acc.push_back(Tensor::zeros(p->shape));
    }
    void add(const std::vector<Tensor>& g, double scale) {
        for (std::size_t i = 0; i < acc.size(); ++i)
            for (std::size_t j = 0; j < acc[i].data.size(); ++j)
                acc[i].data[j] += static_cast<float>(static_cast<double>(g[i].data[j]) * scale);
    }
};

}  // namespace detail

// One generator update on a batch; the detector is read-only here.
// Returns the batch-mean generator loss and mask l1.
struct GeneratorStepResult {
    double loss = 0.0;
    double mask_l1_mean = 0.0;
};

inline GeneratorStepResult generator_step(const TrainConfig& cfg, ModelParams& model,
                                          const std::vector<const Window*>& batch) {
    if (!model.has_generator()) throw ConfigError("generator_step: model has no generator");
    double lambda = detail::effective_lambda(cfg);
    auto params = model.generator->tensors();
    detail::BatchGrads grads;
    grads.init(params);
    double scale = 1.0 / static_cast<double>(batch.size());
    GeneratorStepResult res;
    for (const Window* w : batch) {
        Tensor base = model.baseline_for(*w);
        Graph g;
        GeneratorNodes gn = add_generator(g, *model.generator, true);
        DetectorNodes dn = add_detector(g, model.detector, false);
        int x = g.leaf(w->values, false);
        int m = mask_node(g, gn, x);
        int blended = g.blend_mask(m, w->values, base);
        int rec = reconstruct_node(g, dn, blended, w->values.rows());
        int err = g.mse_against(rec, w->values);
        int l1 = g.sum_all(m);
        int loss = g.weighted_sum(err, -1.0, l1, lambda);
        g.backward(loss);
        res.loss += g.scalar(loss) * scale;
        res.mask_l1_mean += g.scalar(l1) * scale;
        std::vector<Tensor> wg = {g.grad(gn.w_ih), g.grad(gn.w_hh), g.grad(gn.b),
                                  g.grad(gn.head_w), g.grad(gn.head_b)};
        grads.add(wg, scale);
    }
    adam_update(params, grads.acc, model.opt_generator, cfg.lr);
    return res;
}

// One detector update on a batch; generator (if present) is read-only and
// masks are recomputed fresh from its current parameters. Spectral
// normalization is re-applied after the Adam step.
struct DetectorStepResult {
    double loss = 0.0;
    double clean_err_mean = 0.0;
    double masked_err_mean = 0.0;
    double mask_l1_mean = 0.0;
    bool has_masked_terms = false;
};

inline DetectorStepResult detector_step(const TrainConfig& cfg, ModelParams& model,
                                        const std::vector<const Window*>& batch,
                                        bool use_generator) {
    auto params = model.detector.tensors();
    detail::BatchGrads grads;
    grads.init(params);
    double scale = 1.0 / static_cast<double>(batch.size());
    DetectorStepResult res;
    res.has_masked_terms = use_generator && model.has_generator();
    for (const Window* w : batch) {
        Graph g;
        DetectorNodes dn = add_detector(g, model.detector, true);
        int x = g.leaf(w->values, false);
        int rec_clean = reconstruct_node(g, dn, x, w->values.rows());
        int err_clean = g.mse_against(rec_clean, w->values);
        int loss;
        if (res.has_masked_terms) {
            TemporalMask m = generate_mask(*model.generator, *w);
            Tensor base = model.baseline_for(*w);
            Tensor blended = apply_mask_values(w->values, m, base);
            int xt = g.leaf(blended, false);
            int rec_masked = reconstruct_node(g, dn, xt, w->values.rows());
            int err_masked = g.mse_against(rec_masked, w->values);
            loss = g.weighted_sum(err_clean, 1.0, err_masked, cfg.gamma_rob);
            res.masked_err_mean += g.scalar(err_masked) * scale;
            res.mask_l1_mean += mask_l1(m) * scale;
        } else {
            loss = err_clean;
        }
        g.backward(loss);
        res.loss += g.scalar(loss) * scale;
        res.clean_err_mean += g.scalar(err_clean) * scale;
        std::vector<Tensor> wg = {g.grad(dn.enc_wih), g.grad(dn.enc_whh), g.grad(dn.enc_b),
                                  g.grad(dn.dec_wih), g.grad(dn.dec_whh), g.grad(dn.dec_b),
                                  g.grad(dn.proj_w),  g.grad(dn.proj_b)};
        grads.add(wg, scale);
    }
    adam_update(params, grads.acc, model.opt_detector, cfg.lr);
    apply_spectral_normalization(model, 1);
    return res;
}

namespace detail {

inline std::vector<std::vector<const Window*>> make_batches(const std::vector<Window>& windows,
                                                            int batch, Rng& rng) {
    std::vector<std::size_t> order(windows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle(order, rng);
    std::vector<std::vector<const Window*>> batches;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch)) {
        std::vector<const Window*> b;
        for (std::size_t i = start; i < std::min(order.size(), start + static_cast<std::size_t>(batch)); ++i)
            b.push_back(&windows[order[i]]);
        batches.push_back(std::move(b));
    }
    return batches;
}

// Spot gradient check of the detector loss on one window; recorded in the
// report, never used to steer training.
inline double spot_grad_check(ModelParams& model, const Window& w, Rng& rng) {
    auto params = model.detector.tensors();
    auto loss_value = [&]() {
        Graph g;
        DetectorNodes dn = add_detector(g, model.detector, false);
        int x = g.leaf(w.values, false);
        int rec = reconstruct_node(g, dn, x, w.values.rows());
        return g.scalar(g.mse_against(rec, w.values));
    };
    auto analytic = [&]() {
        Graph g;
        DetectorNodes dn = add_detector(g, model.detector, true);
        int x = g.leaf(w.values, false);
        int rec = reconstruct_node(g, dn, x, w.values.rows());
        g.backward(g.mse_against(rec, w.values));
        return std::vector<Tensor>{g.grad(dn.enc_wih), g.grad(dn.enc_whh), g.grad(dn.enc_b),
                                   g.grad(dn.dec_wih), g.grad(dn.dec_whh), g.grad(dn.dec_b),
                                   g.grad(dn.proj_w),  g.grad(dn.proj_b)};
    };
    return check_gradients(loss_value, analytic, params, 1e-3, rng).max_rel_err;
}

}  // namespace detail

// Detector-only reconstruction training.
inline void warmup(const TrainConfig& cfg, ModelParams& model, const std::vector<Window>& windows,
                   Rng& rng, TrainReport* report = nullptr) {
    if (windows.empty()) throw ConfigError("warmup: no training windows");
    for (int e = 0; e < cfg.warmup_epochs; ++e) {
        Rng erng = rng.split("warmup.epoch." + std::to_string(e));
        auto batches = detail::make_batches(windows, cfg.batch, erng);
        double mean_ld = 0.0;
        for (auto& b : batches) {
            auto r = detector_step(cfg, model, b, /*use_generator=*/false);
            mean_ld += r.loss;
        }
        mean_ld /= static_cast<double>(batches.size());
        if (report) {
            EpochRecord rec;
            rec.phase = "warmup";
            rec.epoch = e;
            rec.mean_ld = mean_ld;
            if (e == 0) {
                Rng gc = rng.split("warmup.gradcheck");
                rec.grad_check = detail::spot_grad_check(model, windows.front(), gc);
            }
            report->records.push_back(rec);
        }
    }
}

// Full two-stage optimization over the training split of a raw series.
// Fits the normalizer on the training region and returns the trained model
// plus the per-epoch report.
inline std::pair<ModelParams, TrainReport> joint_train(const TrainConfig& cfg,
                                                       const TimeSeries& raw) {
    cfg.validate();
    int split = split_point(raw, cfg.split_fraction);
    if (split < cfg.window)
        throw ConfigError("training split shorter than one window (" + std::to_string(split) +
                          " < " + std::to_string(cfg.window) + ")");
    TimeSeries train = slice(raw, 0, split);
    Normalizer nz = Normalizer::fit(train);
    nz.apply(train);

    ModelParams model = init_model(train.f, cfg.window, cfg.hidden, cfg.seed, !cfg.no_generator);
    model.normalizer = nz;
    model.aggregator = cfg.aggregator;
    model.baseline_zeros = cfg.no_baseline;
    model.lambda_sp = detail::effective_lambda(cfg);
    model.gamma_rob = cfg.gamma_rob;

    std::vector<Window> windows = make_windows(train, cfg.window, cfg.stride);
    Rng rng = Rng(cfg.seed).split("train");
    TrainReport report;

    warmup(cfg, model, windows, rng, &report);

    for (int e = 0; e < cfg.joint_epochs; ++e) {
        Rng erng = rng.split("joint.epoch." + std::to_string(e));
        auto batches = detail::make_batches(windows, cfg.batch, erng);
        double mean_ld = 0.0, mean_lg = 0.0, mean_l1 = 0.0;
        double lambda = detail::effective_lambda(cfg);
        for (auto& b : batches) {
            if (!cfg.no_generator && !cfg.no_adversarial) {
                auto gr = generator_step(cfg, model, b);
                mean_lg += gr.loss;
            }
            auto dr = detector_step(cfg, model, b, /*use_generator=*/!cfg.no_generator);
            mean_ld += dr.loss;
            mean_l1 += dr.mask_l1_mean;
            if (cfg.no_adversarial && !cfg.no_generator)
                mean_lg += -dr.masked_err_mean + lambda * dr.mask_l1_mean;
        }
        double nb = static_cast<double>(batches.size());
        EpochRecord rec;
        rec.phase = "joint";
        rec.epoch = e;
        rec.mean_ld = mean_ld / nb;
        if (!cfg.no_generator) {
            rec.mean_lg = mean_lg / nb;
            rec.mean_mask_l1 = mean_l1 / nb;
        }
        if (e == 0) {
            Rng gc = rng.split("joint.gradcheck");
            rec.grad_check = detail::spot_grad_check(model, windows.front(), gc);
        }
        report.records.push_back(rec);
    }
    return {std::move(model), std::move(report)};
}

}  // namespace arta
