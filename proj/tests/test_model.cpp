#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "core/errors.hpp"
#include "core/model.hpp"
#include "core/train.hpp"

using namespace nmtprune;

namespace {

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Independent scalar LSTM step, n = 1. T rows are (i, f, o, h_hat), columns
// multiply (input, previous hidden).
struct Scalar1 {
    double h = 0.0, c = 0.0;
    void step(const Matrix& T, double x) {
        const double pre_i = T.at(0, 0) * x + T.at(0, 1) * h;
        const double pre_f = T.at(1, 0) * x + T.at(1, 1) * h;
        const double pre_o = T.at(2, 0) * x + T.at(2, 1) * h;
        const double pre_g = T.at(3, 0) * x + T.at(3, 1) * h;
        const double i = sig(pre_i), f = sig(pre_f), o = sig(pre_o);
        const double g = std::tanh(pre_g);
        c = f * c + i * g;
        h = o * std::tanh(c);
    }
};

ModelConfig tiny_config(std::size_t layers, std::size_t hidden, std::size_t vocab) {
    ModelConfig config;
    config.layers = layers;
    config.hidden = hidden;
    config.source_vocab = vocab;
    config.target_vocab = vocab;
    config.dropout = 0.0;
    return config;
}

} // namespace

TEST_CASE("param_count matches the class accounting at full scale") {
    ModelConfig config;
    config.layers = 4;
    config.hidden = 1000;
    config.source_vocab = 50000;
    config.target_vocab = 50000;
    CHECK(param_count(config) == 216000000ULL);

    const ClassRegistry registry(config);
    CHECK(registry.class_count() == 12);
    CHECK(registry.param_count() == 216000000ULL);
    std::size_t layer_classes = 0, embedding_like = 0;
    for (const auto& e : registry.entries()) {
        if (e.weights.size() == 8000000) ++layer_classes;
        if (e.weights.size() == 50000000) ++embedding_like;
        if (e.id.kind == WeightClassKind::attention) {
            CHECK(e.weights.size() == 2000000);
        }
    }
    CHECK(layer_classes == 8);
    CHECK(embedding_like == 3);
}

TEST_CASE("param_count on a minimal config") {
    const ModelConfig config = tiny_config(1, 1, 4);
    CHECK(param_count(config) == 30); // 16 + 2 + 4 + 4 + 4
}

TEST_CASE("param_count layer classes grow quadratically in n") {
    ModelConfig small = tiny_config(2, 3, 7);
    ModelConfig big = small;
    big.hidden = 6;
    const std::size_t layer_small = 2 * small.layers * 8 * 3 * 3;
    const std::size_t layer_big = 2 * big.layers * 8 * 6 * 6;
    CHECK(layer_big == 4 * layer_small);
    CHECK(ClassRegistry(small).param_count() == param_count(small));
    CHECK(ClassRegistry(big).param_count() == param_count(big));
}

TEST_CASE("every parameter belongs to exactly one class") {
    const ClassRegistry registry(tiny_config(2, 3, 6));
    std::size_t total = 0;
    std::vector<std::string> names;
    for (const auto& e : registry.entries()) {
        total += e.weights.size();
        names.push_back(e.id.name());
    }
    CHECK(total == param_count(registry.config()));
    std::sort(names.begin(), names.end());
    CHECK(std::adjacent_find(names.begin(), names.end()) == names.end());
}

TEST_CASE("lstm_step with zero weights and zero memory is zero") {
    Tape tape;
    const std::size_t n = 3;
    Var T = tape.leaf(Matrix(4 * n, 2 * n));
    Var x = tape.leaf(Matrix::column({0.5, -1.0, 2.0}));
    Var h = tape.leaf(Matrix(n, 1));
    Var c = tape.leaf(Matrix(n, 1));
    const LstmOut out = lstm_step(tape, T, x, h, c);
    for (double v : tape.value(out.hidden).values) CHECK(v == doctest::Approx(0.0));
    for (double v : tape.value(out.memory).values) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("lstm_step with zero weights halves the previous memory") {
    Tape tape;
    const std::size_t n = 2;
    Var T = tape.leaf(Matrix(4 * n, 2 * n));
    Var x = tape.leaf(Matrix(n, 1));
    Var h = tape.leaf(Matrix(n, 1));
    Var c = tape.leaf(Matrix::column({0.8, -0.6}));
    const LstmOut out = lstm_step(tape, T, x, h, c);
    for (std::size_t k = 0; k < n; ++k) {
        const double prev = tape.value(c).values[k];
        CHECK(tape.value(out.memory).values[k] == doctest::Approx(0.5 * prev));
        CHECK(tape.value(out.hidden).values[k] ==
              doctest::Approx(0.5 * std::tanh(0.5 * prev)));
    }
}

TEST_CASE("lstm_step matches an independent scalar trace") {
    const Matrix T = {{0.4, -0.3}, {0.2, 0.9}, {-0.7, 0.1}, {1.2, -0.5}};
    Scalar1 oracle;
    oracle.h = 0.3;
    oracle.c = -0.2;
    const double x = 0.7;
    oracle.step(T, x);

    Tape tape;
    Var Tv = tape.leaf(T);
    const LstmOut out = lstm_step(tape, Tv, tape.leaf(Matrix(1, 1, {x})),
                                  tape.leaf(Matrix(1, 1, {0.3})),
                                  tape.leaf(Matrix(1, 1, {-0.2})));
    CHECK(tape.value(out.hidden).values[0] == doctest::Approx(oracle.h).epsilon(1e-12));
    CHECK(tape.value(out.memory).values[0] == doctest::Approx(oracle.c).epsilon(1e-12));
}

TEST_CASE("lstm_step rejects inconsistent shapes") {
    Tape tape;
    Var T = tape.leaf(Matrix(8, 4));
    Var bad = tape.leaf(Matrix(3, 1));
    Var ok = tape.leaf(Matrix(2, 1));
    CHECK_THROWS_AS(lstm_step(tape, T, bad, ok, ok), Error);
}

TEST_CASE("attention with a single encoder position uses it as the context") {
    Tape tape;
    const std::size_t n = 2;
    // W_c = [I | 0] so the output is tanh(context).
    Matrix wc(n, 2 * n);
    wc.at(0, 0) = 1.0;
    wc.at(1, 1) = 1.0;
    Var enc = tape.leaf(Matrix::column({0.4, -0.9}));
    std::vector<Var> cols = {enc};
    Var H = tape.concat_cols(cols);
    Var h = tape.leaf(Matrix::column({2.0, 1.0}));
    Var out = attention(tape, h, H, tape.leaf(wc));
    CHECK(tape.value(out).values[0] == doctest::Approx(std::tanh(0.4)));
    CHECK(tape.value(out).values[1] == doctest::Approx(std::tanh(-0.9)));
}

TEST_CASE("attention with equal scores averages the encoder states") {
    Tape tape;
    const std::size_t n = 2;
    Matrix wc(n, 2 * n);
    wc.at(0, 0) = 1.0;
    wc.at(1, 1) = 1.0;
    // Zero decoder hidden gives equal scores regardless of the encoder.
    Var h = tape.leaf(Matrix(n, 1));
    std::vector<Var> cols = {tape.leaf(Matrix::column({1.0, 0.0})),
                             tape.leaf(Matrix::column({0.0, 1.0})),
                             tape.leaf(Matrix::column({0.5, 0.5}))};
    Var H = tape.concat_cols(cols);
    Var out = attention(tape, h, H, tape.leaf(wc));
    CHECK(tape.value(out).values[0] == doctest::Approx(std::tanh(0.5)));
    CHECK(tape.value(out).values[1] == doctest::Approx(std::tanh(0.5)));
}

TEST_CASE("attention matches a scalar trace for n=2, S=2") {
    const double H00 = 1.0, H01 = -0.5, H10 = 0.2, H11 = 0.7;
    const double h0 = 0.3, h1 = -0.4;
    const std::vector<double> wc_values = {0.1, -0.2, 0.3,  0.4,
                                           0.5, 0.6,  -0.7, 0.8};
    // scores
    const double s0 = H00 * h0 + H10 * h1;
    const double s1 = H01 * h0 + H11 * h1;
    const double m = std::max(s0, s1);
    const double w0 = std::exp(s0 - m) / (std::exp(s0 - m) + std::exp(s1 - m));
    const double w1 = 1.0 - w0;
    const double ctx0 = w0 * H00 + w1 * H01;
    const double ctx1 = w0 * H10 + w1 * H11;
    const double comb[4] = {ctx0, ctx1, h0, h1};
    double expect[2];
    for (int r = 0; r < 2; ++r) {
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) acc += wc_values[r * 4 + k] * comb[k];
        expect[r] = std::tanh(acc);
    }

    Tape tape;
    std::vector<Var> cols = {tape.leaf(Matrix::column({H00, H10})),
                             tape.leaf(Matrix::column({H01, H11}))};
    Var out = attention(tape, tape.leaf(Matrix::column({h0, h1})),
                        tape.concat_cols(cols), tape.leaf(Matrix(2, 4, wc_values)));
    CHECK(tape.value(out).values[0] == doctest::Approx(expect[0]).epsilon(1e-12));
    CHECK(tape.value(out).values[1] == doctest::Approx(expect[1]).epsilon(1e-12));
}

TEST_CASE("zero-initialized model predicts uniformly") {
    const ModelConfig config = tiny_config(2, 3, 6);
    const ClassRegistry registry(config);
    Tape tape;
    ModelGraph graph(tape, registry);
    const std::vector<TokenId> source = {3, 4, 5};
    const std::vector<TokenId> target = {1, 4, 3, 2}; // <s> w1 w0 </s>
    const ForwardLoss fl = forward_loss(graph, source, target);
    CHECK(fl.tokens == 3);
    CHECK(fl.loss == doctest::Approx(3.0 * std::log(6.0)).epsilon(1e-12));
}

TEST_CASE("a model forced onto the end symbol reaches near-zero loss") {
    const ModelConfig config = tiny_config(1, 1, 5);
    ClassRegistry registry(config);
    const double A = 40.0, B = 40.0, C = 50.0;
    for (auto& e : registry.entries()) {
        switch (e.id.kind) {
        case WeightClassKind::source_embedding:
        case WeightClassKind::target_embedding:
            for (double& v : e.weights.values) v = 1.0;
            break;
        case WeightClassKind::source_layer:
        case WeightClassKind::target_layer:
            e.weights.at(0, 0) = A; // input gate opens on input
            e.weights.at(2, 0) = A; // output gate opens on input
            e.weights.at(3, 0) = A; // input signal saturates positive
            break;
        case WeightClassKind::attention:
            e.weights.at(0, 0) = B;
            e.weights.at(0, 1) = B;
            break;
        case WeightClassKind::softmax:
            for (std::size_t v = 0; v < config.target_vocab; ++v) {
                e.weights.at(v, 0) = v == Vocabulary::kEnd ? C : -C;
            }
            break;
        }
    }
    Tape tape;
    ModelGraph graph(tape, registry);
    const std::vector<TokenId> source = {3};
    const std::vector<TokenId> target = {1, 2}; // predict only </s>
    const ForwardLoss fl = forward_loss(graph, source, target);
    CHECK(fl.tokens == 1);
    CHECK(fl.loss < 1e-10);

    // The same model decodes to an immediate stop.
    CHECK(greedy_decode(registry, source, 10).empty());
}

TEST_CASE("forward_loss matches an independent full trace for n=2, L=1") {
    const ModelConfig config = tiny_config(1, 2, 5);
    const ClassRegistry registry = init_weights(config, 2024);
    const std::vector<TokenId> source = {3, 4, 0};
    const std::vector<TokenId> target = {1, 4, 4, 3, 2};

    // Independent trace with plain arrays.
    const Matrix& src_emb = registry.weights({WeightClassKind::source_embedding, 0});
    const Matrix& tgt_emb = registry.weights({WeightClassKind::target_embedding, 0});
    const Matrix& Ts = registry.weights({WeightClassKind::source_layer, 1});
    const Matrix& Tt = registry.weights({WeightClassKind::target_layer, 1});
    const Matrix& Wc = registry.weights({WeightClassKind::attention, 0});
    const Matrix& Wsm = registry.weights({WeightClassKind::softmax, 0});

    auto lstm2 = [&](const Matrix& T, const std::array<double, 2>& x,
                     std::array<double, 2>& h, std::array<double, 2>& c) {
        const double in[4] = {x[0], x[1], h[0], h[1]};
        double pre[8];
        for (int r = 0; r < 8; ++r) {
            pre[r] = 0.0;
            for (int k = 0; k < 4; ++k) pre[r] += T.at(r, k) * in[k];
        }
        for (int k = 0; k < 2; ++k) {
            const double i = sig(pre[k]), f = sig(pre[2 + k]), o = sig(pre[4 + k]);
            const double g = std::tanh(pre[6 + k]);
            c[k] = f * c[k] + i * g;
            h[k] = o * std::tanh(c[k]);
        }
    };

    std::array<double, 2> h{0, 0}, c{0, 0};
    std::vector<std::array<double, 2>> enc;
    for (TokenId t : source) {
        std::array<double, 2> x{src_emb.at(0, t), src_emb.at(1, t)};
        lstm2(Ts, x, h, c);
        enc.push_back(h);
    }
    double expected = 0.0;
    for (std::size_t t = 0; t + 1 < target.size(); ++t) {
        std::array<double, 2> x{tgt_emb.at(0, target[t]), tgt_emb.at(1, target[t])};
        lstm2(Tt, x, h, c);
        // attention
        std::vector<double> scores(enc.size());
        double mx = -1e300;
        for (std::size_t s = 0; s < enc.size(); ++s) {
            scores[s] = enc[s][0] * h[0] + enc[s][1] * h[1];
            mx = std::max(mx, scores[s]);
        }
        double z = 0.0;
        for (double& v : scores) {
            v = std::exp(v - mx);
            z += v;
        }
        std::array<double, 2> ctx{0, 0};
        for (std::size_t s = 0; s < enc.size(); ++s) {
            ctx[0] += scores[s] / z * enc[s][0];
            ctx[1] += scores[s] / z * enc[s][1];
        }
        const double comb[4] = {ctx[0], ctx[1], h[0], h[1]};
        double att[2];
        for (int r = 0; r < 2; ++r) {
            double acc = 0.0;
            for (int k = 0; k < 4; ++k) acc += Wc.at(r, k) * comb[k];
            att[r] = std::tanh(acc);
        }
        std::vector<double> logits(config.target_vocab);
        double lmax = -1e300;
        for (std::size_t v = 0; v < config.target_vocab; ++v) {
            logits[v] = Wsm.at(v, 0) * att[0] + Wsm.at(v, 1) * att[1];
            lmax = std::max(lmax, logits[v]);
        }
        double lse = 0.0;
        for (double v : logits) lse += std::exp(v - lmax);
        expected += std::log(lse) + lmax - logits[target[t + 1]];
    }

    Tape tape;
    ModelGraph graph(tape, registry);
    const ForwardLoss fl = forward_loss(graph, source, target);
    CHECK(fl.tokens == 4);
    CHECK(fl.loss == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("forward_loss is deterministic with dropout off and rejects bad tokens") {
    const ClassRegistry registry = init_weights(tiny_config(2, 3, 6), 11);
    const std::vector<TokenId> source = {3, 5};
    const std::vector<TokenId> target = {1, 4, 2};
    Tape t1, t2;
    ModelGraph g1(t1, registry), g2(t2, registry);
    const double a = forward_loss(g1, source, target).loss;
    const double b = forward_loss(g2, source, target).loss;
    CHECK(a == b);

    Tape t3;
    ModelGraph g3(t3, registry);
    const std::vector<TokenId> bad = {3, 6};
    CHECK_THROWS_AS(forward_loss(g3, bad, target), Error);
}

TEST_CASE("dropout keeps the loss finite and changes across draws") {
    const ClassRegistry registry = init_weights(tiny_config(2, 4, 8), 5);
    const std::vector<TokenId> source = {3, 4, 5};
    const std::vector<TokenId> target = {1, 5, 4, 3, 2};
    Rng rng(123);
    Tape t1, t2;
    ModelGraph g1(t1, registry), g2(t2, registry);
    const double a = forward_loss(g1, source, target, {0.5, &rng}).loss;
    const double b = forward_loss(g2, source, target, {0.5, &rng}).loss;
    CHECK(std::isfinite(a));
    CHECK(std::isfinite(b));
    CHECK(a != b); // different draws from the same stream
}

TEST_CASE("full forward_loss gradient matches finite differences") {
    const ModelConfig config = tiny_config(2, 3, 6);
    const std::vector<TokenId> source = {3, 5, 4};
    const std::vector<TokenId> target = {1, 4, 5, 2};
    const ClassRegistry base = init_weights(config, 31);

    DiffFn f = [&](std::span<const double> point, std::vector<double>* grad) {
        ClassRegistry registry(config);
        std::size_t offset = 0;
        for (auto& e : registry.entries()) {
            for (double& v : e.weights.values) v = point[offset++];
        }
        Tape tape;
        ModelGraph graph(tape, registry);
        const ForwardLoss fl = forward_loss(graph, source, target);
        if (grad != nullptr) {
            tape.backward(fl.loss_var);
            std::size_t out = 0;
            for (Var leaf : graph.class_leaves) {
                const Matrix g = tape.grad(leaf);
                for (double v : g.values) (*grad)[out++] = v;
            }
        }
        return fl.loss;
    };

    std::vector<double> point;
    for (const auto& e : base.entries()) {
        point.insert(point.end(), e.weights.values.begin(), e.weights.values.end());
    }
    const GradCheckReport report = grad_check(f, point, 1e-5);
    CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("greedy_decode respects max_len and tie-breaks to the lowest index") {
    const ModelConfig config = tiny_config(1, 1, 5);
    ClassRegistry registry(config);
    // Make token 3 the argmax at every step.
    for (auto& e : registry.entries()) {
        if (e.id.kind == WeightClassKind::source_embedding ||
            e.id.kind == WeightClassKind::target_embedding) {
            for (double& v : e.weights.values) v = 1.0;
        }
        if (e.id.kind == WeightClassKind::source_layer ||
            e.id.kind == WeightClassKind::target_layer) {
            e.weights.at(0, 0) = 40.0;
            e.weights.at(2, 0) = 40.0;
            e.weights.at(3, 0) = 40.0;
        }
        if (e.id.kind == WeightClassKind::attention) {
            e.weights.at(0, 0) = 40.0;
            e.weights.at(0, 1) = 40.0;
        }
        if (e.id.kind == WeightClassKind::softmax) {
            for (std::size_t v = 0; v < 5; ++v) {
                e.weights.at(v, 0) = v == 3 ? 50.0 : -50.0;
            }
        }
    }
    const std::vector<TokenId> source = {4};
    const std::vector<TokenId> decoded = greedy_decode(registry, source, 3);
    CHECK(decoded == std::vector<TokenId>{3, 3, 3});

    // All-zero model: every logit ties, so the argmax is index 0.
    const ClassRegistry zeros(config);
    const std::vector<TokenId> tied = greedy_decode(zeros, source, 2);
    CHECK(tied == std::vector<TokenId>{0, 0});

    CHECK_THROWS_AS(greedy_decode(zeros, source, 0), Error);
}
