#pragma once

// LSTM autoencoder detector: encode a window to the final hidden state,
// repeat it as the decoder input sequence, project each decoder state back
// to the sensor dimension. Reconstruction error drives the anomaly score.

#include <algorithm>
#include <vector>

#include "arta/data.hpp"
#include "arta/graph.hpp"
#include "arta/numerics.hpp"
#include "arta/rng.hpp"
#include "arta/tensor.hpp"

namespace arta {

struct DetectorParams {
    LstmParams encoder;  // F -> H
    LstmParams decoder;  // H -> H
    Tensor proj_w;       // F x H
    Tensor proj_b;       // F

    int hidden() const { return encoder.hidden(); }
    int features() const { return encoder.input_size(); }

    std::vector<Tensor*> tensors() {
        return {&encoder.w_ih, &encoder.w_hh, &encoder.b, &decoder.w_ih,
                &decoder.w_hh, &decoder.b,    &proj_w,    &proj_b};
    }
    std::vector<const Tensor*> tensors() const {
        return {&encoder.w_ih, &encoder.w_hh, &encoder.b, &decoder.w_ih,
                &decoder.w_hh, &decoder.b,    &proj_w,    &proj_b};
    }
    static std::vector<std::string> tensor_names() {
        return {"det.enc.w_ih", "det.enc.w_hh", "det.enc.b", "det.dec.w_ih",
                "det.dec.w_hh", "det.dec.b",    "det.proj.w", "det.proj.b"};
    }

    // the matrices subject to spectral normalization (biases excluded)
    std::vector<Tensor*> norm_matrices() {
        return {&encoder.w_ih, &encoder.w_hh, &decoder.w_ih, &decoder.w_hh, &proj_w};
    }
    static std::vector<std::string> norm_matrix_names() {
        return {"det.enc.w_ih", "det.enc.w_hh", "det.dec.w_ih", "det.dec.w_hh", "det.proj.w"};
    }
};

inline DetectorParams init_detector(int features, int hidden, Rng& rng) {
    double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    DetectorParams d;
    Rng er = rng.split("det.enc");
    Rng dr = rng.split("det.dec");
    Rng pr = rng.split("det.proj");
    d.encoder = init_lstm(features, hidden, er);
    d.decoder = init_lstm(hidden, hidden, dr);
    d.proj_w = uniform_init({features, hidden}, bound, pr);
    d.proj_b = Tensor::zeros({features});
    return d;
}

struct DetectorNodes {
    int enc_wih, enc_whh, enc_b;
    int dec_wih, dec_whh, dec_b;
    int proj_w, proj_b;
};

inline DetectorNodes add_detector(Graph& g, const DetectorParams& p, bool trainable) {
    DetectorNodes n;
    n.enc_wih = g.leaf(p.encoder.w_ih, trainable);
    n.enc_whh = g.leaf(p.encoder.w_hh, trainable);
    n.enc_b = g.leaf(p.encoder.b, trainable);
    n.dec_wih = g.leaf(p.decoder.w_ih, trainable);
    n.dec_whh = g.leaf(p.decoder.w_hh, trainable);
    n.dec_b = g.leaf(p.decoder.b, trainable);
    n.proj_w = g.leaf(p.proj_w, trainable);
    n.proj_b = g.leaf(p.proj_b, trainable);
    return n;
}

// input: T x F node. Returns the T x F reconstruction node.
inline int reconstruct_node(Graph& g, const DetectorNodes& n, int input, int steps) {
    int enc = g.lstm_seq(n.enc_wih, n.enc_whh, n.enc_b, input);
    int z = g.last_row(enc);
    int dec = g.lstm_repeat(n.dec_wih, n.dec_whh, n.dec_b, z, steps);
    return g.linear_seq(n.proj_w, n.proj_b, dec);
}

inline Tensor reconstruct_tensor(const DetectorParams& p, const Tensor& window_values) {
    if (window_values.rank() != 2 || window_values.cols() != p.features())
        throw ConfigError("reconstruct: window feature count mismatch");
    Graph g;
    DetectorNodes n = add_detector(g, p, false);
    int x = g.leaf(window_values, false);
    int rec = reconstruct_node(g, n, x, window_values.rows());
    return g.value(rec);
}

inline Tensor reconstruct(const DetectorParams& p, const Window& w) {
    return reconstruct_tensor(p, w.values);
}

// Per-timestamp squared error averaged over sensors.
struct PointScores {
    std::vector<double> a;  // length T, each >= 0
};

inline PointScores pointwise_scores_from(const Tensor& window_values, const Tensor& recon) {
    require_same_shape(window_values, recon, "pointwise_scores");
    int t = window_values.rows(), f = window_values.cols();
    PointScores ps;
    ps.a.resize(static_cast<std::size_t>(t));
    for (int s = 0; s < t; ++s) {
        double acc = 0.0;
        for (int j = 0; j < f; ++j) {
            double d = static_cast<double>(window_values.at(s, j)) - static_cast<double>(recon.at(s, j));
            acc += d * d;
        }
        ps.a[static_cast<std::size_t>(s)] = acc / static_cast<double>(f);
    }
    return ps;
}

inline PointScores pointwise_scores(const DetectorParams& p, const Window& w) {
    return pointwise_scores_from(w.values, reconstruct(p, w));
}

enum class Aggregator { mean, max };

inline Aggregator aggregator_from_string(const std::string& s) {
    if (s == "mean") return Aggregator::mean;
    if (s == "max") return Aggregator::max;
    throw ConfigError("unknown aggregator: " + s);
}

inline const char* to_string(Aggregator a) { return a == Aggregator::mean ? "mean" : "max"; }

// Aggregated window score. The mean aggregator shares the loss_mse code
// path so the two are bit-equal by construction.
inline double anomaly_score(const DetectorParams& p, const Window& w, Aggregator agg) {
    Tensor rec = reconstruct(p, w);
    if (agg == Aggregator::mean) return loss_mse(w.values, rec);
    PointScores ps = pointwise_scores_from(w.values, rec);
    return *std::max_element(ps.a.begin(), ps.a.end());
}

}  // namespace arta
