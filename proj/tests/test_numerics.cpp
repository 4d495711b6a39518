#include <doctest.h>

#include <cmath>

#include "arta/numerics.hpp"
#include "arta/rng.hpp"
#include "support/oracles.hpp"

using namespace arta;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double scale = 1.0) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (auto& v : t.data) v = static_cast<float>(rng.uniform(-scale, scale));
    return t;
}

}  // namespace

TEST_SUITE("numerics") {

TEST_CASE("forward_lstm: zero weights give zero outputs") {
    LstmParams p;
    p.w_ih = Tensor::zeros({8, 2});
    p.w_hh = Tensor::zeros({8, 2});
    p.b = Tensor::zeros({8});
    Tensor x = Tensor::full({4, 2}, 1.5f);
    auto out = forward_lstm(p, x, Tensor::zeros({2}), Tensor::zeros({2}));
    for (float v : out.hidden_seq.data) CHECK(v == 0.0f);
    for (float v : out.h_last.data) CHECK(v == 0.0f);
    CHECK(out.h_last[0] == out.hidden_seq.at(3, 0));
}

TEST_CASE("forward_lstm: single cell with gates forced open") {
    // input and output gates saturated via large biases, forget irrelevant
    // at c0=0; the cell reduces to h1 = sigma(20) tanh(sigma(20) tanh(w x))
    LstmParams p;
    p.w_ih = Tensor::zeros({4, 1});
    p.w_hh = Tensor::zeros({4, 1});
    p.b = Tensor::zeros({4});
    double w = 1.3, x = 0.23;
    p.w_ih.at(2, 0) = static_cast<float>(w);  // cell gate row
    p.b[0] = 20.0f;                            // input gate open
    p.b[3] = 20.0f;                            // output gate open
    Tensor input = Tensor::full({1, 1}, static_cast<float>(x));
    auto out = forward_lstm(p, input, Tensor::zeros({1}), Tensor::zeros({1}));
    double gate = oracle::sigmoid(20.0);
    double expect = gate * std::tanh(gate * std::tanh(w * x));
    CHECK(std::abs(out.h_last[0] - expect) < 1e-6);
    // and approximately tanh(w x) for a small pre-activation
    CHECK(std::abs(out.h_last[0] - std::tanh(w * x)) < 0.01);
}

TEST_CASE("forward_lstm: T=3 sequence matches the step-by-step oracle") {
    Rng rng(42);
    LstmParams p = init_lstm(3, 5, rng);
    for (auto& v : p.b.data) v = static_cast<float>(rng.uniform(-0.3, 0.3));
    Tensor x = random_tensor({3, 3}, rng);
    auto out = forward_lstm(p, x, Tensor::zeros({5}), Tensor::zeros({5}));
    auto expect = oracle::lstm_unroll(p.w_ih, p.w_hh, p.b, x);
    for (int t = 0; t < 3; ++t)
        for (int u = 0; u < 5; ++u)
            CHECK(std::abs(out.hidden_seq.at(t, u) - expect[static_cast<std::size_t>(t)][static_cast<std::size_t>(u)]) < 1e-6);
}

TEST_CASE("forward_lstm: shape mismatch is a configuration error") {
    Rng rng(1);
    LstmParams p = init_lstm(2, 4, rng);
    Tensor bad = Tensor::zeros({3, 3});
    CHECK_THROWS_AS((void)forward_lstm(p, bad, Tensor::zeros({4}), Tensor::zeros({4})), ConfigError);
}

TEST_CASE("forward_linear: identity and constant maps") {
    Tensor w = Tensor::identity(3);
    Tensor b = Tensor::zeros({3});
    Tensor x({3}, {1.0f, -2.0f, 3.0f});
    Tensor y = forward_linear(w, b, x);
    for (int i = 0; i < 3; ++i) CHECK(y[static_cast<std::size_t>(i)] == x[static_cast<std::size_t>(i)]);

    Tensor w0 = Tensor::zeros({3, 3});
    Tensor c = Tensor::full({3}, 0.7f);
    Tensor y2 = forward_linear(w0, c, x);
    for (int i = 0; i < 3; ++i) CHECK(y2[static_cast<std::size_t>(i)] == 0.7f);
}

TEST_CASE("forward_linear: random 3x2 against the triple-loop oracle") {
    Rng rng(5);
    Tensor w = random_tensor({3, 2}, rng);
    Tensor b = random_tensor({3}, rng);
    Tensor x = random_tensor({2}, rng);
    Tensor y = forward_linear(w, b, x);
    std::vector<double> xd(x.data.begin(), x.data.end());
    auto expect = oracle::matvec(w, b, xd);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(y[static_cast<std::size_t>(i)] - expect[static_cast<std::size_t>(i)]) < 1e-6);
    CHECK_THROWS_AS((void)forward_linear(w, b, Tensor::zeros({5})), ConfigError);
}

TEST_CASE("loss_mse: identity, offset and the element-loop oracle") {
    Tensor a({2}, {0.0f, 0.0f});
    Tensor b({2}, {1.0f, 1.0f});
    CHECK(loss_mse(a, a) == 0.0);
    CHECK(loss_mse(a, b) == 1.0);

    Rng rng(9);
    Tensor p = random_tensor({4, 3}, rng);
    Tensor q = random_tensor({4, 3}, rng);
    std::vector<double> pd(p.data.begin(), p.data.end());
    std::vector<double> qd(q.data.begin(), q.data.end());
    CHECK(std::abs(loss_mse(p, q) - oracle::mse(pd, qd)) < 1e-7);
    CHECK(loss_mse(p, q) >= 0.0);
    CHECK_THROWS_AS((void)loss_mse(p, Tensor::zeros({2, 2})), ConfigError);
}

TEST_CASE("estimate_spectral_norm: known spectra") {
    Rng rng(3);
    SUBCASE("2x identity") {
        Tensor w = Tensor::identity(4);
        for (auto& v : w.data) v *= 2.0f;
        SpectralState st = SpectralState::init(4, rng);
        double sigma = estimate_spectral_norm(w, st, 20);
        CHECK(std::abs(sigma - 2.0) < 1e-4);
    }
    SUBCASE("diag(3,1)") {
        Tensor w({2, 2}, {3.0f, 0.0f, 0.0f, 1.0f});
        SpectralState st = SpectralState::init(2, rng);
        double sigma = estimate_spectral_norm(w, st, 20);
        CHECK(std::abs(sigma - 3.0) < 1e-4);
    }
    SUBCASE("random 8x8 against the Jacobi SVD oracle") {
        Tensor w = random_tensor({8, 8}, rng);
        SpectralState st = SpectralState::init(8, rng);
        double sigma = estimate_spectral_norm(w, st, 50);
        double expect = oracle::largest_singular_value(w);
        CHECK(std::abs(sigma - expect) / expect < 1e-3);
    }
    SUBCASE("zero matrix returns 0 and leaves u untouched") {
        Tensor w = Tensor::zeros({3, 3});
        SpectralState st = SpectralState::init(3, rng);
        Tensor u_before = st.u;
        CHECK(estimate_spectral_norm(w, st, 5) == 0.0);
        for (std::size_t i = 0; i < u_before.data.size(); ++i) CHECK(st.u.data[i] == u_before.data[i]);
    }
}

TEST_CASE("estimate_spectral_norm: monotone on symmetric PSD matrices") {
    Rng rng(11);
    Tensor a = random_tensor({6, 6}, rng);
    // W = A^T A is symmetric PSD
    Tensor w = Tensor::zeros({6, 6});
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 6; ++k) acc += static_cast<double>(a.at(k, i)) * a.at(k, j);
            w.at(i, j) = static_cast<float>(acc);
        }
    SpectralState st = SpectralState::init(6, rng);
    double prev = 0.0;
    for (int it = 0; it < 25; ++it) {
        double sigma = estimate_spectral_norm(w, st, 1);
        CHECK(sigma >= prev - 1e-6);
        prev = sigma;
    }
}

TEST_CASE("normalize_spectral: rescaling and idempotence") {
    Rng rng(13);
    SUBCASE("4x identity becomes identity") {
        Tensor w = Tensor::identity(3);
        for (auto& v : w.data) v *= 4.0f;
        SpectralState st = SpectralState::init(3, rng);
        normalize_spectral(w, st, 30);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) CHECK(std::abs(w.at(i, j) - (i == j ? 1.0f : 0.0f)) < 1e-3);
    }
    SUBCASE("already-normalized matrix barely changes") {
        Tensor w = random_tensor({5, 5}, rng);
        SpectralState st = SpectralState::init(5, rng);
        normalize_spectral(w, st, 50);
        Tensor before = w;
        normalize_spectral(w, st, 50);
        double rel = 0.0, norm = 0.0;
        for (std::size_t i = 0; i < w.data.size(); ++i) {
            rel += std::abs(w.data[i] - before.data[i]);
            norm += std::abs(before.data[i]);
        }
        CHECK(rel / norm < 1e-2);
    }
    SUBCASE("post-normalization sigma lands in [0.95, 1.05]") {
        for (int k = 0; k < 3; ++k) {
            Tensor w = random_tensor({7, 4}, rng, 2.0);
            SpectralState st = SpectralState::init(7, rng);
            normalize_spectral(w, st, 50);
            SpectralState fresh = SpectralState::init(7, rng);
            double sigma = estimate_spectral_norm(w, fresh, 100);
            CHECK(sigma > 0.95);
            CHECK(sigma < 1.05);
        }
    }
    SUBCASE("zero matrix left unchanged") {
        Tensor w = Tensor::zeros({3, 2});
        SpectralState st = SpectralState::init(3, rng);
        normalize_spectral(w, st, 5);
        for (float v : w.data) CHECK(v == 0.0f);
    }
}

TEST_CASE("adam_update: zero gradients leave parameters fixed") {
    Tensor p({2}, {1.0f, -2.0f});
    std::vector<const Tensor*> cp = {&p};
    AdamState st = AdamState::init(cp);
    adam_update({&p}, {Tensor::zeros({2})}, st, 0.1);
    CHECK(p[0] == 1.0f);
    CHECK(p[1] == -2.0f);
    CHECK(st.t == 1);
}

TEST_CASE("adam_update: descends on w^2 from w=1") {
    Tensor w({1}, {1.0f});
    std::vector<const Tensor*> cp = {&w};
    AdamState st = AdamState::init(cp);
    Tensor g({1}, {2.0f});  // d/dw w^2 at w=1
    adam_update({&w}, {g}, st, 0.1);
    CHECK(w[0] < 1.0f);
}

TEST_CASE("adam_update: 200 steps converge on (w-2)^2") {
    Tensor w({1}, {0.0f});
    std::vector<const Tensor*> cp = {&w};
    AdamState st = AdamState::init(cp);
    for (int i = 0; i < 200; ++i) {
        Tensor g({1}, {static_cast<float>(2.0 * (w[0] - 2.0))});
        adam_update({&w}, {g}, st, 0.05);
    }
    CHECK(std::abs(w[0] - 2.0) < 0.05);
}

TEST_CASE("adam_update: non-finite gradient raises a numeric error") {
    Tensor p({1}, {0.0f});
    std::vector<const Tensor*> cp = {&p};
    AdamState st = AdamState::init(cp);
    Tensor g({1}, {std::numeric_limits<float>::quiet_NaN()});
    CHECK_THROWS_AS(adam_update({&p}, {g}, st, 0.1), NumericError);
}

TEST_CASE("check_gradients: quadratic f(w)=w^2 at w=3 is exact") {
    Tensor w({1}, {3.0f});
    auto loss = [&]() { return static_cast<double>(w[0]) * w[0]; };
    auto grad = [&]() { return std::vector<Tensor>{Tensor({1}, {static_cast<float>(2.0 * w[0])})}; };
    Rng rng(1);
    auto res = check_gradients(loss, grad, {&w}, 1e-3, rng);
    CHECK(res.max_rel_err < 1e-6);
    CHECK(res.coords_checked >= 1);
}

TEST_CASE("check_gradients: linear regression toy under 1e-4") {
    Rng rng(21);
    Tensor w = random_tensor({2, 3}, rng);
    Tensor b = random_tensor({2}, rng);
    Tensor x = random_tensor({3}, rng);
    Tensor target = random_tensor({2}, rng);
    auto predict = [&]() {
        std::vector<double> xd(x.data.begin(), x.data.end());
        return oracle::matvec(w, b, xd);
    };
    auto loss = [&]() {
        auto y = predict();
        std::vector<double> td(target.data.begin(), target.data.end());
        return oracle::mse(y, td);
    };
    auto grad = [&]() {
        auto y = predict();
        Tensor gw = Tensor::zeros({2, 3});
        Tensor gb = Tensor::zeros({2});
        for (int r = 0; r < 2; ++r) {
            double d = 2.0 * (y[static_cast<std::size_t>(r)] - target[static_cast<std::size_t>(r)]) / 2.0;
            gb[static_cast<std::size_t>(r)] = static_cast<float>(d);
            for (int c = 0; c < 3; ++c) gw.at(r, c) = static_cast<float>(d * x[static_cast<std::size_t>(c)]);
        }
        return std::vector<Tensor>{gw, gb};
    };
    Rng check_rng(2);
    auto res = check_gradients(loss, grad, {&w, &b}, 1e-3, check_rng, 8);
    CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("determinism: same seed, same init") {
    Rng a(77), b(77);
    LstmParams pa = init_lstm(3, 4, a);
    LstmParams pb = init_lstm(3, 4, b);
    for (std::size_t i = 0; i < pa.w_ih.data.size(); ++i) CHECK(pa.w_ih.data[i] == pb.w_ih.data[i]);
    for (std::size_t i = 0; i < pa.w_hh.data.size(); ++i) CHECK(pa.w_hh.data[i] == pb.w_hh.data[i]);
}

}  // TEST_SUITE
