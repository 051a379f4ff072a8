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

#ifndef NMTPRUNE_CORE_MODEL_HPP
#define NMTPRUNE_CORE_MODEL_HPP

#include <optional>
#include <span>

#include "core/classes.hpp"
#include "core/corpus.hpp"
#include "core/rng.hpp"
#include "core/tape.hpp"

namespace nmtprune {

struct LstmOut {
    Var hidden;
    Var memory;
};

// One LSTM step. T is the 4n x 2n block matrix; its row blocks are the
// (i, f, o, h_hat) gates in that order, its column blocks multiply the
// feed-forward input and the recurrent input respectively.
LstmOut lstm_step(Tape& tape, Var T, Var h_below, Var h_prev, Var c_prev);

// Global dot attention: scores = H^T h, weights = softmax(scores),
// context = H * weights, output = tanh(W_c * [context; h]).
Var attention(Tape& tape, Var decoder_hidden, Var encoder_hiddens, Var context_w);

// Registry weights mounted on a tape, one leaf per class, so a single
// backward() yields a gradient for every class.
struct ModelGraph {
    ModelGraph(Tape& tape, const ClassRegistry& registry);

    Tape* tape;
    const ClassRegistry* registry;
    std::vector<Var> class_leaves; // aligned with registry.entries()

    Var source_embedding;
    Var target_embedding;
    std::vector<Var> source_layers;
    std::vector<Var> target_layers;
    Var attention_w;
    Var softmax_w;
};

struct ForwardLoss {
    Var loss_var;       // sum of per-step cross entropies, 1x1
    double loss = 0.0;  // its value
    std::size_t tokens = 0; // predictions, end symbol included
};

// Training-time stochasticity; {0, nullptr} runs a deterministic pass.
struct Dropout {
    double p = 0.0;
    Rng* rng = nullptr;
};

// Encoder-decoder forward pass over one encoded pair. target must carry the
// start/end wrapping. Inverted dropout is applied to the non-recurrent
// connections (layer inputs and the pre-softmax attentional vector).
ForwardLoss forward_loss(ModelGraph& graph, std::span<const TokenId> source,
                         std::span<const TokenId> target, Dropout dropout = {});

// Greedy decoding: feeds the argmax token back in until the end symbol or
// max_len tokens; ties resolve to the lowest index. The returned sequence
// excludes the wrapping symbols.
std::vector<TokenId> greedy_decode(const ClassRegistry& registry,
                                   std::span<const TokenId> source,
                                   std::size_t max_len);

} // namespace nmtprune

#endif // NMTPRUNE_CORE_MODEL_HPP
