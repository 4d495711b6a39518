#pragma once

// Numeric substrate: LSTM cell parameters and recurrence, linear maps,
// MSE, Adam updates, spectral-norm power iteration and a finite-difference
// gradient checker. Storage is float32; reductions and inner products
// accumulate in double.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "arta/rng.hpp"
#include "arta/tensor.hpp"

namespace arta {

// Stacked single-layer LSTM parameters. Gate row order in the 4H stack:
// input, forget, cell, output.
struct LstmParams {
    Tensor w_ih;  // 4H x Fin
    Tensor w_hh;  // 4H x H
    Tensor b;     // 4H

    int hidden() const { return w_hh.cols(); }
    int input_size() const { return w_ih.cols(); }

    void validate() const {
        int h = w_hh.cols();
        if (w_hh.rows() != 4 * h) throw ConfigError("LstmParams: w_hh must be 4HxH");
        if (w_ih.rows() != 4 * h) throw ConfigError("LstmParams: w_ih rows must be 4H");
        if (b.shape != std::vector<int>{4 * h}) throw ConfigError("LstmParams: bias must be 4H");
    }
};

inline Tensor uniform_init(std::vector<int> shape, double bound, Rng& rng) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (auto& v : t.data) v = static_cast<float>(rng.uniform(-bound, bound));
    return t;
}

// uniform(-1/sqrt(H), 1/sqrt(H)) weights; biases zero except the forget
// gate, which starts at +1 so long-range memory survives early training
inline LstmParams init_lstm(int input_size, int hidden, Rng& rng) {
    double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    LstmParams p;
    p.w_ih = uniform_init({4 * hidden, input_size}, bound, rng);
    p.w_hh = uniform_init({4 * hidden, hidden}, bound, rng);
    p.b = Tensor::zeros({4 * hidden});
    for (int i = hidden; i < 2 * hidden; ++i) p.b[static_cast<std::size_t>(i)] = 1.0f;
    return p;
}

struct LstmOut {
    Tensor hidden_seq;  // T x H
    Tensor h_last;      // H
    Tensor c_last;      // H
};

// Standard LSTM recurrence from an explicit initial state.
inline LstmOut forward_lstm(const LstmParams& p, const Tensor& inputs, const Tensor& h0,
                            const Tensor& c0) {
    p.validate();
    int h = p.hidden();
    int fin = p.input_size();
    if (inputs.rank() != 2 || inputs.cols() != fin)
        throw ConfigError("forward_lstm: inputs must be TxF matching w_ih");
    int t = inputs.rows();
    if (t < 1) throw ConfigError("forward_lstm: T must be >= 1");
    require_shape(h0, {h}, "forward_lstm h0");
    require_shape(c0, {h}, "forward_lstm c0");

    std::vector<double> hs(static_cast<std::size_t>(h)), cs(static_cast<std::size_t>(h));
    for (int i = 0; i < h; ++i) {
        hs[static_cast<std::size_t>(i)] = h0[static_cast<std::size_t>(i)];
        cs[static_cast<std::size_t>(i)] = c0[static_cast<std::size_t>(i)];
    }
    LstmOut out;
    out.hidden_seq = Tensor::zeros({t, h});
    std::vector<double> a(static_cast<std::size_t>(4) * h);
    for (int s = 0; s < t; ++s) {
        for (int r = 0; r < 4 * h; ++r) {
            double acc = p.b[static_cast<std::size_t>(r)];
            for (int i = 0; i < fin; ++i)
                acc += static_cast<double>(p.w_ih.at(r, i)) * static_cast<double>(inputs.at(s, i));
            for (int i = 0; i < h; ++i)
                acc += static_cast<double>(p.w_hh.at(r, i)) * hs[static_cast<std::size_t>(i)];
            a[static_cast<std::size_t>(r)] = acc;
        }
        for (int i = 0; i < h; ++i) {
            double gi = 1.0 / (1.0 + std::exp(-a[static_cast<std::size_t>(i)]));
            double gf = 1.0 / (1.0 + std::exp(-a[static_cast<std::size_t>(h + i)]));
            double gg = std::tanh(a[static_cast<std::size_t>(2 * h + i)]);
            double go = 1.0 / (1.0 + std::exp(-a[static_cast<std::size_t>(3 * h + i)]));
            cs[static_cast<std::size_t>(i)] = gf * cs[static_cast<std::size_t>(i)] + gi * gg;
            hs[static_cast<std::size_t>(i)] = go * std::tanh(cs[static_cast<std::size_t>(i)]);
            out.hidden_seq.at(s, i) = static_cast<float>(hs[static_cast<std::size_t>(i)]);
        }
    }
    out.h_last = Tensor::zeros({h});
    out.c_last = Tensor::zeros({h});
    for (int i = 0; i < h; ++i) {
        out.h_last[static_cast<std::size_t>(i)] = out.hidden_seq.at(t - 1, i);
        out.c_last[static_cast<std::size_t>(i)] = static_cast<float>(cs[static_cast<std::size_t>(i)]);
    }
    return out;
}

// y = Wx + b
inline Tensor forward_linear(const Tensor& w, const Tensor& b, const Tensor& x) {
    if (w.rank() != 2) throw ConfigError("forward_linear: W must be rank 2");
    int o = w.rows(), in = w.cols();
    require_shape(b, {o}, "forward_linear b");
    require_shape(x, {in}, "forward_linear x");
    Tensor y = Tensor::zeros({o});
    for (int r = 0; r < o; ++r) {
        double acc = b[static_cast<std::size_t>(r)];
        for (int i = 0; i < in; ++i)
            acc += static_cast<double>(w.at(r, i)) * static_cast<double>(x[static_cast<std::size_t>(i)]);
        y[static_cast<std::size_t>(r)] = static_cast<float>(acc);
    }
    return y;
}

// mean of squared element-wise differences
inline double loss_mse(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "loss_mse");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(a.data.size());
}

// ---- spectral normalization -------------------------------------------

// Persistent left singular vector estimate for one weight matrix.
struct SpectralState {
    Tensor u;  // length = rows of the tracked matrix
    std::int64_t iterations = 0;

    static SpectralState init(int rows, Rng& rng) {
        SpectralState s;
        s.u = Tensor::zeros({rows});
        double norm = 0.0;
        for (int i = 0; i < rows; ++i) {
            double v = rng.normal();
            s.u[static_cast<std::size_t>(i)] = static_cast<float>(v);
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (auto& v : s.u.data) v = static_cast<float>(v / norm);
        return s;
    }
};

// Power-iteration estimate of the largest singular value. Updates state.u
// in place; a zero matrix yields 0 with the state untouched.
inline double estimate_spectral_norm(const Tensor& w, SpectralState& state, int iters) {
    if (w.rank() != 2) throw ConfigError("estimate_spectral_norm: matrix expected");
    if (iters < 1) throw ConfigError("estimate_spectral_norm: iters must be >= 1");
    int o = w.rows(), in = w.cols();
    require_shape(state.u, {o}, "spectral state u");

    std::vector<double> u(static_cast<std::size_t>(o)), v(static_cast<std::size_t>(in));
    for (int i = 0; i < o; ++i) u[static_cast<std::size_t>(i)] = state.u[static_cast<std::size_t>(i)];
    double sigma = 0.0;
    for (int it = 0; it < iters; ++it) {
        // v = normalize(W^T u)
        double vn = 0.0;
        for (int j = 0; j < in; ++j) {
            double acc = 0.0;
            for (int i = 0; i < o; ++i) acc += static_cast<double>(w.at(i, j)) * u[static_cast<std::size_t>(i)];
            v[static_cast<std::size_t>(j)] = acc;
            vn += acc * acc;
        }
        vn = std::sqrt(vn);
        if (vn < 1e-30) return 0.0;  // u in the left null space or W == 0
        for (auto& x : v) x /= vn;
        // u = W v, sigma = ||W v||
        double un = 0.0;
        for (int i = 0; i < o; ++i) {
            double acc = 0.0;
            for (int j = 0; j < in; ++j) acc += static_cast<double>(w.at(i, j)) * v[static_cast<std::size_t>(j)];
            u[static_cast<std::size_t>(i)] = acc;
            un += acc * acc;
        }
        un = std::sqrt(un);
        if (un < 1e-30) return 0.0;
        sigma = un;
        for (auto& x : u) x /= un;
    }
    for (int i = 0; i < o; ++i) state.u[static_cast<std::size_t>(i)] = static_cast<float>(u[static_cast<std::size_t>(i)]);
    state.iterations += iters;
    return sigma;
}

// W <- W / sigma_hat. Degenerate (near-zero) matrices are left unchanged.
inline double normalize_spectral(Tensor& w, SpectralState& state, int iters) {
    double sigma = estimate_spectral_norm(w, state, iters);
    if (sigma < 1e-12) return sigma;
    for (auto& v : w.data) v = static_cast<float>(static_cast<double>(v) / sigma);
    return sigma;
}

// ---- Adam ----------------------------------------------------------------

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t t = 0;
    std::vector<Tensor> m, v;

    static AdamState init(const std::vector<const Tensor*>& params) {
        AdamState s;
        s.m.reserve(params.size());
        s.v.reserve(params.size());
        for (const Tensor* p : params) {
            s.m.push_back(Tensor::zeros(p->shape));
            s.v.push_back(Tensor::zeros(p->shape));
        }
        return s;
    }
};

// One bias-corrected Adam step over a parameter group.
inline void adam_update(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
                        AdamState& state, double lr) {
    if (lr <= 0.0) throw ConfigError("adam_update: lr must be > 0");
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw ConfigError("adam_update: parameter/gradient/state count mismatch");
    state.t += 1;
    double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor& p = *params[k];
        const Tensor& g = grads[k];
        require_same_shape(p, g, "adam_update");
        Tensor& m = state.m[k];
        Tensor& v = state.v[k];
        for (std::size_t i = 0; i < p.data.size(); ++i) {
            double gi = g.data[i];
            if (!std::isfinite(gi)) throw NumericError("adam_update: non-finite gradient");
            double mi = state.beta1 * static_cast<double>(m.data[i]) + (1.0 - state.beta1) * gi;
            double vi = state.beta2 * static_cast<double>(v.data[i]) + (1.0 - state.beta2) * gi * gi;
            m.data[i] = static_cast<float>(mi);
            v.data[i] = static_cast<float>(vi);
            double m_hat = mi / bc1;
            double v_hat = vi / bc2;
            p.data[i] = static_cast<float>(static_cast<double>(p.data[i]) -
                                           lr * m_hat / (std::sqrt(v_hat) + state.eps));
        }
    }
}

// ---- gradient checking -----------------------------------------------

struct GradCheckResult {
    double max_rel_err = 0.0;
    int coords_checked = 0;
};

// Central-difference check of analytic gradients on a random coordinate
// sample. `loss_value` re-evaluates the loss from the current parameter
// tensors; `analytic` recomputes the full gradient set (aligned with
// `params`).
inline GradCheckResult check_gradients(const std::function<double()>& loss_value,
                                       const std::function<std::vector<Tensor>()>& analytic,
                                       const std::vector<Tensor*>& params, double step, Rng& rng,
                                       int sample_target = 50) {
    if (step <= 0.0) throw ConfigError("check_gradients: step must be > 0");
    std::vector<Tensor> grads = analytic();
    if (grads.size() != params.size()) throw ConfigError("check_gradients: gradient count mismatch");

    std::int64_t total = 0;
    for (const Tensor* p : params) total += p->numel();
    std::int64_t want = std::min<std::int64_t>(total, sample_target);

    GradCheckResult res;
    for (std::int64_t k = 0; k < want; ++k) {
        std::int64_t flat = static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(total)));
        std::size_t pi = 0;
        while (flat >= params[pi]->numel()) {
            flat -= params[pi]->numel();
            ++pi;
        }
        float* slot = &params[pi]->data[static_cast<std::size_t>(flat)];
        float saved = *slot;
        *slot = static_cast<float>(static_cast<double>(saved) + step);
        double realized_hi = *slot;
        double lp = loss_value();
        *slot = static_cast<float>(static_cast<double>(saved) - step);
        double realized_lo = *slot;
        double lm = loss_value();
        *slot = saved;
        // divide by the realized float32 perturbation, not the nominal step
        double fd = (lp - lm) / (realized_hi - realized_lo);
        double an = grads[pi].data[static_cast<std::size_t>(flat)];
        double rel = std::abs(an - fd) / (std::abs(an) + std::abs(fd) + 1e-8);
        if (rel > res.max_rel_err) res.max_rel_err = rel;
        res.coords_checked += 1;
    }
    return res;
}

}  // namespace arta
