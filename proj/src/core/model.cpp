/*
  Copyright (c) 2026 the nmtprune authors

  Licensed under the Apache License, Version 2.0 (the "License");
  you may not use this file except in compliance with the License.
  You may obtain a copy of the License at

  http://www.apache.org/licenses/LICENSE-2.0

  Unless required by applicable law or agreed to in writing, software
  distributed under the License is distributed on an "AS IS" BASIS,
  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
  See the License for the specific language governing permissions and
  limitations under the License.
*/

#include "core/model.hpp"

#include <algorithm>
#include <string>

#include "core/errors.hpp"

namespace nmtprune {

LstmOut lstm_step(Tape& tape, Var T, Var h_below, Var h_prev, Var c_prev) {
    const Matrix& tw = tape.value(T);
    const std::size_t n = tape.value(h_below).rows;
    auto expect_vec = [&](Var v, const char* what) {
        const Matrix& m = tape.value(v);
        if (m.rows != n || m.cols != 1) {
            throw_invalid(std::string("lstm_step: ") + what + " is " + m.shape_str() +
                          ", expected " + shape_of(n, 1));
        }
    };
    expect_vec(h_below, "input");
    expect_vec(h_prev, "previous hidden");
    expect_vec(c_prev, "previous memory");
    if (tw.rows != 4 * n || tw.cols != 2 * n) {
        throw_invalid("lstm_step: weight matrix is " + tw.shape_str() +
                      ", expected " + shape_of(4 * n, 2 * n));
    }

    Var stacked = tape.concat_rows(h_below, h_prev);
    Var pre = tape.matmul(T, stacked); // 4n x 1
    Var i = tape.sigmoid(tape.slice_rows(pre, 0, n));
    Var f = tape.sigmoid(tape.slice_rows(pre, n, n));
    Var o = tape.sigmoid(tape.slice_rows(pre, 2 * n, n));
    Var h_hat = tape.tanh(tape.slice_rows(pre, 3 * n, n));

    Var c = tape.add(tape.hadamard(f, c_prev), tape.hadamard(i, h_hat));
    Var h = tape.hadamard(o, tape.tanh(c));
    return {h, c};
}

Var attention(Tape& tape, Var decoder_hidden, Var encoder_hiddens, Var context_w) {
    const Matrix& h = tape.value(decoder_hidden);
    const Matrix& enc = tape.value(encoder_hiddens);
    const Matrix& wc = tape.value(context_w);
    if (enc.cols < 1) {
        throw_invalid("attention: no encoder positions");
    }
    const std::size_t n = h.rows;
    if (h.cols != 1 || enc.rows != n) {
        throw_invalid("attention: hidden " + h.shape_str() + " vs encoder states " +
                      enc.shape_str());
    }
    if (wc.rows != n || wc.cols != 2 * n) {
        throw_invalid("attention: context weights are " + wc.shape_str() +
                      ", expected " + shape_of(n, 2 * n));
    }

    Var scores = tape.matmul(tape.transpose(encoder_hiddens), decoder_hidden);
    Var weights = tape.softmax(scores);
    Var context = tape.matmul(encoder_hiddens, weights);
    Var combined = tape.concat_rows(context, decoder_hidden);
    return tape.tanh(tape.matmul(context_w, combined));
}

ModelGraph::ModelGraph(Tape& t, const ClassRegistry& reg) : tape(&t), registry(&reg) {
    const std::size_t layers = reg.config().layers;
    class_leaves.reserve(reg.class_count());
    source_layers.reserve(layers);
    target_layers.reserve(layers);
    for (const auto& entry : reg.entries()) {
        Var leaf = t.leaf(entry.weights);
        class_leaves.push_back(leaf);
        switch (entry.id.kind) {
        case WeightClassKind::source_embedding: source_embedding = leaf; break;
        case WeightClassKind::target_embedding: target_embedding = leaf; break;
        case WeightClassKind::source_layer: source_layers.push_back(leaf); break;
        case WeightClassKind::target_layer: target_layers.push_back(leaf); break;
        case WeightClassKind::attention: attention_w = leaf; break;
        case WeightClassKind::softmax: softmax_w = leaf; break;
        }
    }
}

namespace {

struct LayerState {
    Var h;
    Var c;
};

void check_tokens(std::span<const TokenId> seq, std::size_t vocab, const char* side) {
    for (TokenId t : seq) {
        if (t < 0 || static_cast<std::size_t>(t) >= vocab) {
            throw_invalid(std::string("forward: ") + side + " token " +
                          std::to_string(t) + " out of vocabulary range " +
                          std::to_string(vocab));
        }
    }
}

// Inverted dropout mask over an n-vector; identity when rng is null or p = 0.
Var dropped(Tape& tape, Var x, double p, Rng* rng) {
    if (rng == nullptr || p <= 0.0) return x;
    const Matrix& v = tape.value(x);
    Matrix mask(v.rows, v.cols);
    const double keep_scale = 1.0 / (1.0 - p);
    for (double& m : mask.values) {
        m = rng->bernoulli(p) ? 0.0 : keep_scale;
    }
    return tape.const_mul(x, std::move(mask));
}

// Runs a stacked column of LSTM layers for one timestep; the input to layer
// l+1 (and the embedding into layer 1) is a non-recurrent connection and is
// subject to dropout.
Var run_stack(Tape& tape, const std::vector<Var>& layer_weights,
              std::vector<LayerState>& states, Var input, double p, Rng* rng) {
    Var x = input;
    for (std::size_t l = 0; l < layer_weights.size(); ++l) {
        Var fed = dropped(tape, x, p, rng);
        LstmOut out = lstm_step(tape, layer_weights[l], fed, states[l].h, states[l].c);
        states[l] = {out.hidden, out.memory};
        x = out.hidden;
    }
    return x;
}

} // namespace

ForwardLoss forward_loss(ModelGraph& graph, std::span<const TokenId> source,
                         std::span<const TokenId> target, Dropout dropout) {
    Tape& tape = *graph.tape;
    const ModelConfig& config = graph.registry->config();
    if (source.empty()) throw_invalid("forward: empty source sequence");
    if (target.size() < 2) {
        throw_invalid("forward: target must carry the start/end wrapping");
    }
    if (!(dropout.p >= 0.0 && dropout.p < 1.0)) {
        throw_invalid("forward: dropout must lie in [0, 1)");
    }
    check_tokens(source, config.source_vocab, "source");
    check_tokens(target, config.target_vocab, "target");

    const std::size_t n = config.hidden;
    const std::size_t layers = config.layers;
    const double p = dropout.p;
    Rng* rng = dropout.rng;

    Var zero = tape.leaf(Matrix(n, 1));
    std::vector<LayerState> state(layers, LayerState{zero, zero});

    std::vector<Var> encoder_tops;
    encoder_tops.reserve(source.size());
    for (TokenId token : source) {
        Var embed = tape.select_col(graph.source_embedding,
                                    static_cast<std::size_t>(token));
        encoder_tops.push_back(
            run_stack(tape, graph.source_layers, state, embed, p, rng));
    }
    Var enc_matrix = tape.concat_cols(encoder_tops);

    // Decoder states start from the encoder's final states, layer by layer.
    std::vector<Var> step_losses;
    step_losses.reserve(target.size() - 1);
    for (std::size_t t = 0; t + 1 < target.size(); ++t) {
        Var embed = tape.select_col(graph.target_embedding,
                                    static_cast<std::size_t>(target[t]));
        Var top = run_stack(tape, graph.target_layers, state, embed, p, rng);
        Var attentional = attention(tape, top, enc_matrix, graph.attention_w);
        Var pre_softmax = dropped(tape, attentional, p, rng);
        Var logits = tape.matmul(graph.softmax_w, pre_softmax);
        step_losses.push_back(tape.softmax_cross_entropy(
            logits, static_cast<std::size_t>(target[t + 1])));
    }

    ForwardLoss result;
    result.loss_var = tape.sum_scalars(step_losses);
    result.loss = tape.scalar(result.loss_var);
    result.tokens = target.size() - 1;
    return result;
}

std::vector<TokenId> greedy_decode(const ClassRegistry& registry,
                                   std::span<const TokenId> source,
                                   std::size_t max_len) {
    if (max_len < 1) throw_invalid("greedy_decode: max_len must be at least 1");
    const ModelConfig& config = registry.config();
    if (source.empty()) throw_invalid("greedy_decode: empty source sequence");
    check_tokens(source, config.source_vocab, "source");

    Tape tape;
    ModelGraph graph(tape, registry);
    const std::size_t n = config.hidden;
    Var zero = tape.leaf(Matrix(n, 1));
    std::vector<LayerState> state(config.layers, LayerState{zero, zero});

    std::vector<Var> encoder_tops;
    encoder_tops.reserve(source.size());
    for (TokenId token : source) {
        Var embed = tape.select_col(graph.source_embedding,
                                    static_cast<std::size_t>(token));
        encoder_tops.push_back(
            run_stack(tape, graph.source_layers, state, embed, 0.0, nullptr));
    }
    Var enc_matrix = tape.concat_cols(encoder_tops);

    std::vector<TokenId> output;
    TokenId current = Vocabulary::kStart;
    for (std::size_t step = 0; step < max_len; ++step) {
        Var embed = tape.select_col(graph.target_embedding,
                                    static_cast<std::size_t>(current));
        Var top = run_stack(tape, graph.target_layers, state, embed, 0.0, nullptr);
        Var attentional = attention(tape, top, enc_matrix, graph.attention_w);
        Var logits = tape.matmul(graph.softmax_w, attentional);
        const Matrix& z = tape.value(logits);
        std::size_t best = 0;
        for (std::size_t v = 1; v < z.rows; ++v) {
            if (z.values[v] > z.values[best]) best = v;
        }
        const TokenId token = static_cast<TokenId>(best);
        if (token == Vocabulary::kEnd) break;
        output.push_back(token);
        current = token;
    }
    return output;
}

} // namespace nmtprune
