#pragma once

// Reverse-mode autodiff over a small closed set of tensor ops: LSTM
// sequence, linear map, sigmoid, mask blending, MSE, sum. Node values and
// all intermediate arithmetic are double; parameters enter as float32
// leaves and gradients are returned as float32 tensors. The op set is
// exactly what the detector/generator losses need — nothing dynamic.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "arta/tensor.hpp"

namespace arta {

class Graph {
  public:
    struct Node {
        std::vector<int> shape;
        std::vector<double> value;
        std::vector<double> grad;
        bool requires_grad = false;
        const char* op = "leaf";
        std::function<void(Graph&)> backward;  // empty for leaves
    };

    int leaf(const Tensor& t, bool requires_grad) {
        Node n;
        n.shape = t.shape;
        n.value.assign(t.data.begin(), t.data.end());
        n.requires_grad = requires_grad;
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }

    const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
    Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }

    double scalar(int id) const {
        const Node& n = node(id);
        if (n.value.size() != 1) throw ConfigError("node is not a scalar");
        return n.value[0];
    }

    Tensor value(int id) const {
        const Node& n = node(id);
        std::vector<float> d(n.value.size());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<float>(n.value[i]);
        return Tensor(n.shape, std::move(d));
    }

    Tensor grad(int id) const {
        const Node& n = node(id);
        std::vector<float> d(n.value.size(), 0.0f);
        for (std::size_t i = 0; i < n.grad.size(); ++i) d[i] = static_cast<float>(n.grad[i]);
        return Tensor(n.shape, std::move(d));
    }

    const std::vector<double>& grad_raw(int id) const { return node(id).grad; }

    // ---- ops -----------------------------------------------------------

    // Single-layer LSTM over a T x Fin input sequence, zero initial state.
    // Gate layout in the stacked 4H rows: input, forget, cell, output.
    int lstm_seq(int w_ih, int w_hh, int b, int inputs) {
        return lstm_impl(w_ih, w_hh, b, inputs, /*steps=*/-1);
    }

    // LSTM whose input at every step is the same vector (a repeated latent
    // code). Avoids materialising the repeated sequence.
    int lstm_repeat(int w_ih, int w_hh, int b, int z, int steps) {
        return lstm_impl(w_ih, w_hh, b, z, steps);
    }

    int last_row(int seq) {
        const Node& s = node(seq);
        if (s.shape.size() != 2) throw ConfigError("last_row: rank-2 node expected");
        int t = s.shape[0], c = s.shape[1];
        Node out;
        out.shape = {c};
        out.value.assign(s.value.end() - c, s.value.end());
        out.op = "last_row";
        out.requires_grad = s.requires_grad;
        int id = push(std::move(out));
        node(id).backward = [seq, id, t, c](Graph& g) {
            Node& sn = g.node(seq);
            if (!sn.requires_grad) return;
            const auto& go = g.node(id).grad;
            double* dst = sn.grad.data() + static_cast<std::size_t>(t - 1) * c;
            for (int i = 0; i < c; ++i) dst[i] += go[static_cast<std::size_t>(i)];
        };
        return id;
    }

    // y = W x + b for a single vector x.
    int linear_vec(int w, int b, int x) {
        const Node& wn = node(w);
        const Node& xn = node(x);
        if (wn.shape.size() != 2 || wn.shape[1] != xn.shape[0])
            throw ConfigError("linear_vec: shape mismatch");
        int o = wn.shape[0], in = wn.shape[1];
        Node out;
        out.shape = {o};
        out.value.resize(static_cast<std::size_t>(o));
        out.op = "linear";
        const auto& bv = node(b).value;
        for (int r = 0; r < o; ++r) {
            double acc = bv[static_cast<std::size_t>(r)];
            const double* row = wn.value.data() + static_cast<std::size_t>(r) * in;
            for (int i = 0; i < in; ++i) acc += row[i] * xn.value[static_cast<std::size_t>(i)];
            out.value[static_cast<std::size_t>(r)] = acc;
        }
        out.requires_grad = wn.requires_grad || node(b).requires_grad || xn.requires_grad;
        int id = push(std::move(out));
        node(id).backward = [w, b, x, id, o, in](Graph& g) {
            const auto& go = g.node(id).grad;
            Node& wn2 = g.node(w);
            Node& bn2 = g.node(b);
            Node& xn2 = g.node(x);
            for (int r = 0; r < o; ++r) {
                double gr = go[static_cast<std::size_t>(r)];
                if (wn2.requires_grad) {
                    double* wrow = wn2.grad.data() + static_cast<std::size_t>(r) * in;
                    for (int i = 0; i < in; ++i) wrow[i] += gr * xn2.value[static_cast<std::size_t>(i)];
                }
                if (bn2.requires_grad) bn2.grad[static_cast<std::size_t>(r)] += gr;
                if (xn2.requires_grad) {
                    const double* wrow = wn2.value.data() + static_cast<std::size_t>(r) * in;
                    for (int i = 0; i < in; ++i) xn2.grad[static_cast<std::size_t>(i)] += gr * wrow[i];
                }
            }
        };
        return id;
    }

    // Y[t] = W X[t] + b applied to every row of a T x I sequence.
    int linear_seq(int w, int b, int x) {
        const Node& wn = node(w);
        const Node& xn = node(x);
        if (wn.shape.size() != 2 || xn.shape.size() != 2 || wn.shape[1] != xn.shape[1])
            throw ConfigError("linear_seq: shape mismatch");
        int o = wn.shape[0], in = wn.shape[1], t = xn.shape[0];
        Node out;
        out.shape = {t, o};
        out.value.resize(static_cast<std::size_t>(t) * o);
        out.op = "linear_seq";
        const auto& bv = node(b).value;
        for (int s = 0; s < t; ++s) {
            const double* xr = xn.value.data() + static_cast<std::size_t>(s) * in;
            double* yr = out.value.data() + static_cast<std::size_t>(s) * o;
            for (int r = 0; r < o; ++r) {
                double acc = bv[static_cast<std::size_t>(r)];
                const double* wrow = wn.value.data() + static_cast<std::size_t>(r) * in;
                for (int i = 0; i < in; ++i) acc += wrow[i] * xr[i];
                yr[r] = acc;
            }
        }
        out.requires_grad = wn.requires_grad || node(b).requires_grad || xn.requires_grad;
        int id = push(std::move(out));
        node(id).backward = [w, b, x, id, o, in, t](Graph& g) {
            const auto& go = g.node(id).grad;
            Node& wn2 = g.node(w);
            Node& bn2 = g.node(b);
            Node& xn2 = g.node(x);
            for (int s = 0; s < t; ++s) {
                const double* gr = go.data() + static_cast<std::size_t>(s) * o;
                const double* xr = xn2.value.data() + static_cast<std::size_t>(s) * in;
                for (int r = 0; r < o; ++r) {
                    if (wn2.requires_grad) {
                        double* wrow = wn2.grad.data() + static_cast<std::size_t>(r) * in;
                        for (int i = 0; i < in; ++i) wrow[i] += gr[r] * xr[i];
                    }
                    if (bn2.requires_grad) bn2.grad[static_cast<std::size_t>(r)] += gr[r];
                    if (xn2.requires_grad) {
                        const double* wrow = wn2.value.data() + static_cast<std::size_t>(r) * in;
                        double* xg = xn2.grad.data() + static_cast<std::size_t>(s) * in;
                        for (int i = 0; i < in; ++i) xg[i] += gr[r] * wrow[i];
                    }
                }
            }
        };
        return id;
    }

    int sigmoid(int x) {
        const Node& xn = node(x);
        Node out;
        out.shape = xn.shape;
        out.value.resize(xn.value.size());
        out.op = "sigmoid";
        for (std::size_t i = 0; i < xn.value.size(); ++i)
            out.value[i] = 1.0 / (1.0 + std::exp(-xn.value[i]));
        out.requires_grad = xn.requires_grad;
        int id = push(std::move(out));
        node(id).backward = [x, id](Graph& g) {
            Node& xn2 = g.node(x);
            if (!xn2.requires_grad) return;
            const Node& on = g.node(id);
            for (std::size_t i = 0; i < on.value.size(); ++i) {
                double y = on.value[i];
                xn2.grad[i] += on.grad[i] * y * (1.0 - y);
            }
        };
        return id;
    }

    // blend[t,f] = m[t] * x[t,f] + (1 - m[t]) * base[t,f] with x and base
    // held constant; only the mask participates in differentiation.
    int blend_mask(int m, const Tensor& x, const Tensor& base) {
        require_same_shape(x, base, "blend_mask");
        const Node& mn = node(m);
        int t = x.rows(), f = x.cols();
        if (mn.shape != std::vector<int>{t}) throw ConfigError("blend_mask: mask length mismatch");
        Node out;
        out.shape = {t, f};
        out.value.resize(static_cast<std::size_t>(t) * f);
        out.op = "blend_mask";
        for (int s = 0; s < t; ++s) {
            double mv = mn.value[static_cast<std::size_t>(s)];
            for (int j = 0; j < f; ++j) {
                double xv = x.at(s, j), bv = base.at(s, j);
                out.value[static_cast<std::size_t>(s) * f + j] = mv * xv + (1.0 - mv) * bv;
            }
        }
        out.requires_grad = mn.requires_grad;
        int id = push(std::move(out));
        auto xs = std::make_shared<Tensor>(x);
        auto bs = std::make_shared<Tensor>(base);
        node(id).backward = [m, id, t, f, xs, bs](Graph& g) {
            Node& mn2 = g.node(m);
            if (!mn2.requires_grad) return;
            const auto& go = g.node(id).grad;
            for (int s = 0; s < t; ++s) {
                double acc = 0.0;
                for (int j = 0; j < f; ++j)
                    acc += go[static_cast<std::size_t>(s) * f + j] *
                           (static_cast<double>(xs->at(s, j)) - static_cast<double>(bs->at(s, j)));
                mn2.grad[static_cast<std::size_t>(s)] += acc;
            }
        };
        return id;
    }

    // mean((pred - target)^2) over all elements, target constant.
    int mse_against(int pred, const Tensor& target) {
        const Node& pn = node(pred);
        if (pn.shape != target.shape) throw ConfigError("mse: shape mismatch");
        Node out;
        out.shape = {1};
        out.op = "mse";
        double acc = 0.0;
        for (std::size_t i = 0; i < pn.value.size(); ++i) {
            double d = pn.value[i] - static_cast<double>(target.data[i]);
            acc += d * d;
        }
        double n = static_cast<double>(pn.value.size());
        out.value = {acc / n};
        out.requires_grad = pn.requires_grad;
        int id = push(std::move(out));
        auto ts = std::make_shared<Tensor>(target);
        node(id).backward = [pred, id, ts, n](Graph& g) {
            Node& pn2 = g.node(pred);
            if (!pn2.requires_grad) return;
            double go = g.node(id).grad[0];
            for (std::size_t i = 0; i < pn2.value.size(); ++i)
                pn2.grad[i] += go * 2.0 * (pn2.value[i] - static_cast<double>(ts->data[i])) / n;
        };
        return id;
    }

    int sum_all(int x) {
        const Node& xn = node(x);
        Node out;
        out.shape = {1};
        out.op = "sum";
        double acc = 0.0;
        for (double v : xn.value) acc += v;
        out.value = {acc};
        out.requires_grad = xn.requires_grad;
        int id = push(std::move(out));
        node(id).backward = [x, id](Graph& g) {
            Node& xn2 = g.node(x);
            if (!xn2.requires_grad) return;
            double go = g.node(id).grad[0];
            for (std::size_t i = 0; i < xn2.grad.size(); ++i) xn2.grad[i] += go;
        };
        return id;
    }

    // scalar ca*a + cb*b
    int weighted_sum(int a, double ca, int b, double cb) {
        Node out;
        out.shape = {1};
        out.op = "weighted_sum";
        out.value = {ca * scalar(a) + cb * scalar(b)};
        out.requires_grad = node(a).requires_grad || node(b).requires_grad;
        int id = push(std::move(out));
        node(id).backward = [a, ca, b, cb, id](Graph& g) {
            double go = g.node(id).grad[0];
            if (g.node(a).requires_grad) g.node(a).grad[0] += go * ca;
            if (g.node(b).requires_grad) g.node(b).grad[0] += go * cb;
        };
        return id;
    }

    // ---- reverse pass ----------------------------------------------------

    // Seeds d(loss)/d(loss) = 1 and walks the tape backwards. Throws
    // NumericError if the loss (or any node value) is non-finite, naming
    // the first offending op.
    void backward(int loss) {
        const Node& ln = node(loss);
        if (ln.value.size() != 1) throw ConfigError("backward: loss must be scalar");
        if (!std::isfinite(ln.value[0])) {
            for (const Node& n : nodes_)
                for (double v : n.value)
                    if (!std::isfinite(v))
                        throw NumericError(std::string("non-finite value produced by op '") + n.op + "'");
            throw NumericError("non-finite loss");
        }
        for (Node& n : nodes_) n.grad.assign(n.value.size(), 0.0);
        node(loss).grad[0] = 1.0;
        for (int id = loss; id >= 0; --id) {
            Node& n = node(id);
            if (n.backward && n.requires_grad) n.backward(*this);
        }
    }

  private:
    int push(Node&& n) {
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }

    struct LstmCache {
        // gate activations and cell states per step, each T x H
        std::vector<double> gi, gf, gg, go, c, tc;
    };

    // steps < 0: `input` is a T x Fin sequence node. steps >= 0: `input` is
    // a Fin vector node fed at every one of `steps` steps.
    int lstm_impl(int w_ih, int w_hh, int b, int input, int steps) {
        const Node& wi = node(w_ih);
        const Node& wh = node(w_hh);
        const Node& bn = node(b);
        const Node& xn = node(input);
        if (wh.shape.size() != 2 || wh.shape[0] != 4 * wh.shape[1])
            throw ConfigError("lstm: recurrent weights must be 4HxH");
        int h = wh.shape[1];
        bool repeat = steps >= 0;
        int fin = repeat ? xn.shape[0] : xn.shape[1];
        int t = repeat ? steps : xn.shape[0];
        if (t < 1) throw ConfigError("lstm: sequence length must be >= 1");
        if (wi.shape != std::vector<int>{4 * h, fin}) throw ConfigError("lstm: input weights must be 4HxF");
        if (bn.shape != std::vector<int>{4 * h}) throw ConfigError("lstm: bias must be 4H");

        auto cache = std::make_shared<LstmCache>();
        std::size_t th = static_cast<std::size_t>(t) * h;
        cache->gi.resize(th);
        cache->gf.resize(th);
        cache->gg.resize(th);
        cache->go.resize(th);
        cache->c.resize(th);
        cache->tc.resize(th);

        Node out;
        out.shape = {t, h};
        out.value.resize(th);
        out.op = repeat ? "lstm_repeat" : "lstm";

        std::vector<double> a(static_cast<std::size_t>(4) * h);
        std::vector<double> wx_const;
        if (repeat) {
            // input projection is step-invariant; compute once
            wx_const.assign(static_cast<std::size_t>(4) * h, 0.0);
            for (int r = 0; r < 4 * h; ++r) {
                const double* row = wi.value.data() + static_cast<std::size_t>(r) * fin;
                double acc = 0.0;
                for (int i = 0; i < fin; ++i) acc += row[i] * xn.value[static_cast<std::size_t>(i)];
                wx_const[static_cast<std::size_t>(r)] = acc;
            }
        }
        const double* h_prev = nullptr;
        const double* c_prev = nullptr;
        for (int s = 0; s < t; ++s) {
            for (int r = 0; r < 4 * h; ++r) {
                double acc = bn.value[static_cast<std::size_t>(r)];
                if (repeat) {
                    acc += wx_const[static_cast<std::size_t>(r)];
                } else {
                    const double* row = wi.value.data() + static_cast<std::size_t>(r) * fin;
                    const double* xr = xn.value.data() + static_cast<std::size_t>(s) * fin;
                    for (int i = 0; i < fin; ++i) acc += row[i] * xr[i];
                }
                if (h_prev) {
                    const double* row = wh.value.data() + static_cast<std::size_t>(r) * h;
                    for (int i = 0; i < h; ++i) acc += row[i] * h_prev[i];
                }
                a[static_cast<std::size_t>(r)] = acc;
            }
            double* gi = cache->gi.data() + static_cast<std::size_t>(s) * h;
            double* gf = cache->gf.data() + static_cast<std::size_t>(s) * h;
            double* gg = cache->gg.data() + static_cast<std::size_t>(s) * h;
            double* go = cache->go.data() + static_cast<std::size_t>(s) * h;
            double* cc = cache->c.data() + static_cast<std::size_t>(s) * h;
            double* tc = cache->tc.data() + static_cast<std::size_t>(s) * h;
            double* hh = out.value.data() + static_cast<std::size_t>(s) * h;
            for (int i = 0; i < h; ++i) {
                gi[i] = 1.0 / (1.0 + std::exp(-a[static_cast<std::size_t>(i)]));
                gf[i] = 1.0 / (1.0 + std::exp(-a[static_cast<std::size_t>(h + i)]));
                gg[i] = std::tanh(a[static_cast<std::size_t>(2 * h + i)]);
                go[i] = 1.0 / (1.0 + std::exp(-a[static_cast<std::size_t>(3 * h + i)]));
                double cp = c_prev ? c_prev[i] : 0.0;
                cc[i] = gf[i] * cp + gi[i] * gg[i];
                tc[i] = std::tanh(cc[i]);
                hh[i] = go[i] * tc[i];
            }
            h_prev = hh;
            c_prev = cc;
        }
        out.requires_grad =
            wi.requires_grad || wh.requires_grad || bn.requires_grad || xn.requires_grad;
        int id = push(std::move(out));
        node(id).backward = [w_ih, w_hh, b, input, id, t, h, fin, repeat, cache](Graph& g) {
            Node& wi2 = g.node(w_ih);
            Node& wh2 = g.node(w_hh);
            Node& bn2 = g.node(b);
            Node& xn2 = g.node(input);
            const Node& on = g.node(id);
            bool want_w = wi2.requires_grad;  // all three param tensors share trainability
            bool want_x = xn2.requires_grad;

            std::vector<double> dh_next(static_cast<std::size_t>(h), 0.0);
            std::vector<double> dc_next(static_cast<std::size_t>(h), 0.0);
            std::vector<double> da(static_cast<std::size_t>(4) * h);
            std::vector<double> da_sum;
            if (repeat && want_w) da_sum.assign(static_cast<std::size_t>(4) * h, 0.0);
            for (int s = t - 1; s >= 0; --s) {
                const double* gi = cache->gi.data() + static_cast<std::size_t>(s) * h;
                const double* gf = cache->gf.data() + static_cast<std::size_t>(s) * h;
                const double* gg = cache->gg.data() + static_cast<std::size_t>(s) * h;
                const double* go = cache->go.data() + static_cast<std::size_t>(s) * h;
                const double* tc = cache->tc.data() + static_cast<std::size_t>(s) * h;
                const double* cp = s > 0 ? cache->c.data() + static_cast<std::size_t>(s - 1) * h : nullptr;
                const double* hp = s > 0 ? on.value.data() + static_cast<std::size_t>(s - 1) * h : nullptr;
                for (int i = 0; i < h; ++i) {
                    double dh = on.grad[static_cast<std::size_t>(s) * h + i] + dh_next[static_cast<std::size_t>(i)];
                    double dgo = dh * tc[i];
                    double dc = dc_next[static_cast<std::size_t>(i)] + dh * go[i] * (1.0 - tc[i] * tc[i]);
                    double dgi = dc * gg[i];
                    double dgf = dc * (cp ? cp[i] : 0.0);
                    double dgg = dc * gi[i];
                    da[static_cast<std::size_t>(i)] = dgi * gi[i] * (1.0 - gi[i]);
                    da[static_cast<std::size_t>(h + i)] = dgf * gf[i] * (1.0 - gf[i]);
                    da[static_cast<std::size_t>(2 * h + i)] = dgg * (1.0 - gg[i] * gg[i]);
                    da[static_cast<std::size_t>(3 * h + i)] = dgo * go[i] * (1.0 - go[i]);
                    dc_next[static_cast<std::size_t>(i)] = dc * gf[i];
                }
                if (want_w) {
                    for (int r = 0; r < 4 * h; ++r) {
                        double d = da[static_cast<std::size_t>(r)];
                        bn2.grad[static_cast<std::size_t>(r)] += d;
                        if (repeat) {
                            da_sum[static_cast<std::size_t>(r)] += d;
                        } else {
                            const double* xr = xn2.value.data() + static_cast<std::size_t>(s) * fin;
                            double* wrow = wi2.grad.data() + static_cast<std::size_t>(r) * fin;
                            for (int i = 0; i < fin; ++i) wrow[i] += d * xr[i];
                        }
                        if (hp) {
                            double* wrow = wh2.grad.data() + static_cast<std::size_t>(r) * h;
                            for (int i = 0; i < h; ++i) wrow[i] += d * hp[i];
                        }
                    }
                }
                if (want_x && !repeat) {
                    double* xg = xn2.grad.data() + static_cast<std::size_t>(s) * fin;
                    for (int r = 0; r < 4 * h; ++r) {
                        double d = da[static_cast<std::size_t>(r)];
                        const double* wrow = wi2.value.data() + static_cast<std::size_t>(r) * fin;
                        for (int i = 0; i < fin; ++i) xg[i] += d * wrow[i];
                    }
                }
                if (want_x && repeat) {
                    double* xg = xn2.grad.data();
                    for (int r = 0; r < 4 * h; ++r) {
                        double d = da[static_cast<std::size_t>(r)];
                        const double* wrow = wi2.value.data() + static_cast<std::size_t>(r) * fin;
                        for (int i = 0; i < fin; ++i) xg[i] += d * wrow[i];
                    }
                }
                // recurrent gradient into h_{s-1}
                for (int i = 0; i < h; ++i) dh_next[static_cast<std::size_t>(i)] = 0.0;
                for (int r = 0; r < 4 * h; ++r) {
                    double d = da[static_cast<std::size_t>(r)];
                    const double* wrow = wh2.value.data() + static_cast<std::size_t>(r) * h;
                    for (int i = 0; i < h; ++i) dh_next[static_cast<std::size_t>(i)] += d * wrow[i];
                }
            }
            if (repeat && want_w) {
                for (int r = 0; r < 4 * h; ++r) {
                    double d = da_sum[static_cast<std::size_t>(r)];
                    double* wrow = wi2.grad.data() + static_cast<std::size_t>(r) * fin;
                    for (int i = 0; i < fin; ++i) wrow[i] += d * xn2.value[static_cast<std::size_t>(i)];
                }
            }
        };
        return id;
    }

    std::vector<Node> nodes_;
};

}  // namespace arta
