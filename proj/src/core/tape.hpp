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

#ifndef NMTPRUNE_CORE_TAPE_HPP
#define NMTPRUNE_CORE_TAPE_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "core/matrix.hpp"

namespace nmtprune {

// Handle to a matrix-valued node on a Tape.
struct Var {
    std::uint32_t idx = 0;
};

// Reverse-mode gradient tape over matrix-valued primitives. Nodes only
// reference earlier nodes, so reverse creation order is a valid backward
// schedule. Gradients are allocated lazily; a node never reached by the
// backward sweep reports a zero gradient.
class Tape {
public:
    Var leaf(Matrix value);

    Var matmul(Var a, Var b);
    Var add(Var a, Var b);
    Var hadamard(Var a, Var b);
    Var scale(Var a, double factor);
    // Elementwise multiply by a constant matrix (dropout masks).
    Var const_mul(Var a, Matrix constant);
    Var sigmoid(Var a);
    Var tanh(Var a);
    Var transpose(Var a);
    // softmax over a column vector.
    Var softmax(Var a);
    Var slice_rows(Var a, std::size_t first_row, std::size_t num_rows);
    Var concat_rows(Var a, Var b);
    // Stack column vectors of equal length side by side into rows x S.
    Var concat_cols(std::span<const Var> columns);
    // Column `col` of a matrix as a column vector (embedding lookup).
    Var select_col(Var m, std::size_t col);
    // -log softmax(logits)[target], as a 1x1 node.
    Var softmax_cross_entropy(Var logits, std::size_t target);
    // Sum of 1x1 nodes.
    Var sum_scalars(std::span<const Var> scalars);

    const Matrix& value(Var v) const { return nodes_[v.idx].value; }
    double scalar(Var v) const;

    // Seeds d(root)/d(root) = 1 and sweeps backwards. root must be 1x1.
    void backward(Var root);

    // Gradient of the last backward() root w.r.t. node v (zeros if untouched).
    Matrix grad(Var v) const;

    std::size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }
    void reserve(std::size_t n) { nodes_.reserve(n); }

private:
    enum class Op : std::uint8_t {
        leaf,
        matmul,
        add,
        hadamard,
        scale,
        const_mul,
        sigmoid,
        tanh_,
        transpose_,
        softmax_,
        slice_rows,
        concat_rows,
        concat_cols,
        select_col,
        cross_entropy,
        sum_scalars,
    };

    struct Node {
        Op op;
        Matrix value;
        Matrix grad; // empty means zero
        std::uint32_t in0 = 0;
        std::uint32_t in1 = 0;
        std::vector<std::uint32_t> in_many;
        std::size_t p0 = 0; // slice first row / selected col / CE target
        std::size_t p1 = 0; // slice row count
        double factor = 0.0;
        Matrix aux; // const_mul constant, CE cached probabilities
    };

    Var push(Node node);
    Node& node(Var v) { return nodes_[v.idx]; }
    Matrix& grad_of(std::uint32_t idx);
    void accumulate(std::uint32_t idx, const Matrix& delta);

    std::vector<Node> nodes_;
};

// Scalar function with an analytic gradient; when `grad` is non-null the
// callee writes d(result)/d(point) into it (same length as point).
using DiffFn =
    std::function<double(std::span<const double> point, std::vector<double>* grad)>;

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    double analytic_at_worst = 0.0;
    double numeric_at_worst = 0.0;
};

// Central finite differences vs. analytic gradient, per coordinate.
// Relative error is |a - n| / max(1, |a| + |n|).
GradCheckReport grad_check(const DiffFn& f, std::span<const double> point, double eps);

} // namespace nmtprune

#endif // NMTPRUNE_CORE_TAPE_HPP
