#pragma once

// Mask generator: an LSTM reads the window, a linear head plus sigmoid on
// the final hidden state produces a soft temporal mask m in (0,1)^T that
// is broadcast across sensors when blended with the baseline.

#include <vector>

#include "arta/data.hpp"
#include "arta/graph.hpp"
#include "arta/numerics.hpp"
#include "arta/rng.hpp"
#include "arta/tensor.hpp"

namespace arta {

struct TemporalMask {
    Tensor values;  // length T, entries in (0,1) when produced by the generator

    int size() const { return values.shape.empty() ? 0 : values.shape[0]; }
};

struct GeneratorParams {
    LstmParams lstm;  // F -> H
    Tensor head_w;    // T x H
    Tensor head_b;    // T

    int hidden() const { return lstm.hidden(); }
    int features() const { return lstm.input_size(); }
    int mask_length() const { return head_w.rows(); }

    std::vector<Tensor*> tensors() {
        return {&lstm.w_ih, &lstm.w_hh, &lstm.b, &head_w, &head_b};
    }
    std::vector<const Tensor*> tensors() const {
        return {&lstm.w_ih, &lstm.w_hh, &lstm.b, &head_w, &head_b};
    }
    static std::vector<std::string> tensor_names() {
        return {"gen.lstm.w_ih", "gen.lstm.w_hh", "gen.lstm.b", "gen.head.w", "gen.head.b"};
    }
};

inline GeneratorParams init_generator(int features, int hidden, int mask_length, Rng& rng) {
    double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    GeneratorParams g;
    Rng lr = rng.split("gen.lstm");
    Rng hr = rng.split("gen.head");
    g.lstm = init_lstm(features, hidden, lr);
    g.head_w = uniform_init({mask_length, hidden}, bound, hr);
    g.head_b = Tensor::zeros({mask_length});
    return g;
}

struct GeneratorNodes {
    int w_ih, w_hh, b, head_w, head_b;
};

inline GeneratorNodes add_generator(Graph& g, const GeneratorParams& p, bool trainable) {
    GeneratorNodes n;
    n.w_ih = g.leaf(p.lstm.w_ih, trainable);
    n.w_hh = g.leaf(p.lstm.w_hh, trainable);
    n.b = g.leaf(p.lstm.b, trainable);
    n.head_w = g.leaf(p.head_w, trainable);
    n.head_b = g.leaf(p.head_b, trainable);
    return n;
}

// window node -> mask node (length T)
inline int mask_node(Graph& g, const GeneratorNodes& n, int input) {
    int seq = g.lstm_seq(n.w_ih, n.w_hh, n.b, input);
    int z = g.last_row(seq);
    int head = g.linear_vec(n.head_w, n.head_b, z);
    return g.sigmoid(head);
}

inline TemporalMask generate_mask(const GeneratorParams& p, const Window& w) {
    if (w.values.cols() != p.features())
        throw ConfigError("generate_mask: window feature count mismatch");
    if (w.values.rows() != p.mask_length())
        throw ConfigError("generate_mask: window length does not match mask head");
    Graph g;
    GeneratorNodes n = add_generator(g, p, false);
    int x = g.leaf(w.values, false);
    return TemporalMask{g.value(mask_node(g, n, x))};
}

// x~[t,f] = m[t] * x[t,f] + (1 - m[t]) * b[t,f]
inline Tensor apply_mask_values(const Tensor& x, const TemporalMask& m, const Tensor& baseline) {
    require_same_shape(x, baseline, "apply_mask");
    int t = x.rows(), f = x.cols();
    if (m.size() != t) throw ConfigError("apply_mask: mask length mismatch");
    Tensor out = Tensor::zeros({t, f});
    for (int s = 0; s < t; ++s) {
        float mv = m.values[static_cast<std::size_t>(s)];
        for (int j = 0; j < f; ++j)
            out.at(s, j) = mv * x.at(s, j) + (1.0f - mv) * baseline.at(s, j);
    }
    return out;
}

inline Window apply_mask(const Window& w, const TemporalMask& m, const Tensor& baseline) {
    Window out;
    out.start_index = w.start_index;
    out.values = apply_mask_values(w.values, m, baseline);
    return out;
}

// plain sum over T; the mask is non-negative so this is its l1 norm
inline double mask_l1(const TemporalMask& m) {
    double acc = 0.0;
    for (float v : m.values.data) acc += std::abs(static_cast<double>(v));
    return acc;
}

}  // namespace arta
