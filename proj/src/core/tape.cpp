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

#include "core/tape.hpp"

#include <cmath>
#include <string>

#include "core/errors.hpp"

namespace nmtprune {

Var Tape::push(Node node) {
    nodes_.push_back(std::move(node));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::leaf(Matrix value) {
    Node n;
    n.op = Op::leaf;
    n.value = std::move(value);
    return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
    Node n;
    n.op = Op::matmul;
    n.value = nmtprune::matmul(value(a), value(b));
    n.in0 = a.idx;
    n.in1 = b.idx;
    return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
    Node n;
    n.op = Op::add;
    n.value = nmtprune::add(value(a), value(b));
    n.in0 = a.idx;
    n.in1 = b.idx;
    return push(std::move(n));
}

Var Tape::hadamard(Var a, Var b) {
    Node n;
    n.op = Op::hadamard;
    n.value = nmtprune::hadamard(value(a), value(b));
    n.in0 = a.idx;
    n.in1 = b.idx;
    return push(std::move(n));
}

Var Tape::scale(Var a, double factor) {
    Node n;
    n.op = Op::scale;
    n.value = value(a);
    for (double& v : n.value.values) v *= factor;
    n.in0 = a.idx;
    n.factor = factor;
    return push(std::move(n));
}

Var Tape::const_mul(Var a, Matrix constant) {
    Node n;
    n.op = Op::const_mul;
    n.value = nmtprune::hadamard(value(a), constant);
    n.in0 = a.idx;
    n.aux = std::move(constant);
    return push(std::move(n));
}

Var Tape::sigmoid(Var a) {
    Node n;
    n.op = Op::sigmoid;
    n.value = map_sigmoid(value(a));
    n.in0 = a.idx;
    return push(std::move(n));
}

Var Tape::tanh(Var a) {
    Node n;
    n.op = Op::tanh_;
    n.value = map_tanh(value(a));
    n.in0 = a.idx;
    return push(std::move(n));
}

Var Tape::transpose(Var a) {
    Node n;
    n.op = Op::transpose_;
    n.value = nmtprune::transpose(value(a));
    n.in0 = a.idx;
    return push(std::move(n));
}

Var Tape::softmax(Var a) {
    Node n;
    n.op = Op::softmax_;
    n.value = softmax_column(value(a));
    n.in0 = a.idx;
    return push(std::move(n));
}

Var Tape::slice_rows(Var a, std::size_t first_row, std::size_t num_rows) {
    const Matrix& m = value(a);
    if (first_row + num_rows > m.rows) {
        throw_invalid("slice_rows: [" + std::to_string(first_row) + ", " +
                      std::to_string(first_row + num_rows) + ") exceeds " +
                      m.shape_str());
    }
    Node n;
    n.op = Op::slice_rows;
    n.value = Matrix(num_rows, m.cols);
    for (std::size_t i = 0; i < num_rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            n.value.at(i, j) = m.at(first_row + i, j);
        }
    }
    n.in0 = a.idx;
    n.p0 = first_row;
    n.p1 = num_rows;
    return push(std::move(n));
}

Var Tape::concat_rows(Var a, Var b) {
    const Matrix& ma = value(a);
    const Matrix& mb = value(b);
    if (ma.cols != mb.cols) {
        throw_invalid("concat_rows: column mismatch " + ma.shape_str() + " vs " +
                      mb.shape_str());
    }
    Node n;
    n.op = Op::concat_rows;
    n.value = Matrix(ma.rows + mb.rows, ma.cols);
    std::copy(ma.values.begin(), ma.values.end(), n.value.values.begin());
    std::copy(mb.values.begin(), mb.values.end(),
              n.value.values.begin() + static_cast<std::ptrdiff_t>(ma.values.size()));
    n.in0 = a.idx;
    n.in1 = b.idx;
    n.p0 = ma.rows;
    return push(std::move(n));
}

Var Tape::concat_cols(std::span<const Var> columns) {
    if (columns.empty()) throw_invalid("concat_cols: no columns");
    const std::size_t rows = value(columns[0]).rows;
    Node n;
    n.op = Op::concat_cols;
    n.value = Matrix(rows, columns.size());
    n.in_many.reserve(columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j) {
        const Matrix& c = value(columns[j]);
        if (c.cols != 1 || c.rows != rows) {
            throw_invalid("concat_cols: expected " + shape_of(rows, 1) + ", got " +
                          c.shape_str());
        }
        for (std::size_t i = 0; i < rows; ++i) n.value.at(i, j) = c.at(i, 0);
        n.in_many.push_back(columns[j].idx);
    }
    return push(std::move(n));
}

Var Tape::select_col(Var m, std::size_t col) {
    const Matrix& mat = value(m);
    if (col >= mat.cols) {
        throw_invalid("select_col: column " + std::to_string(col) +
                      " out of range for " + mat.shape_str());
    }
    Node n;
    n.op = Op::select_col;
    n.value = Matrix(mat.rows, 1);
    for (std::size_t i = 0; i < mat.rows; ++i) n.value.at(i, 0) = mat.at(i, col);
    n.in0 = m.idx;
    n.p0 = col;
    return push(std::move(n));
}

Var Tape::softmax_cross_entropy(Var logits, std::size_t target) {
    const Matrix& z = value(logits);
    const double loss = cross_entropy_column(z, target); // validates shape/target
    Node n;
    n.op = Op::cross_entropy;
    n.value = Matrix(1, 1, {loss});
    n.in0 = logits.idx;
    n.p0 = target;
    n.aux = softmax_column(z);
    return push(std::move(n));
}

Var Tape::sum_scalars(std::span<const Var> scalars) {
    if (scalars.empty()) throw_invalid("sum_scalars: empty");
    Node n;
    n.op = Op::sum_scalars;
    double total = 0.0;
    n.in_many.reserve(scalars.size());
    for (Var v : scalars) {
        const Matrix& m = value(v);
        if (m.rows != 1 || m.cols != 1) {
            throw_invalid("sum_scalars: expected 1x1, got " + m.shape_str());
        }
        total += m.values[0];
        n.in_many.push_back(v.idx);
    }
    n.value = Matrix(1, 1, {total});
    return push(std::move(n));
}

double Tape::scalar(Var v) const {
    const Matrix& m = value(v);
    if (m.rows != 1 || m.cols != 1) {
        throw_invalid("scalar: node is " + m.shape_str() + ", not 1x1");
    }
    return m.values[0];
}

Matrix& Tape::grad_of(std::uint32_t idx) {
    Node& n = nodes_[idx];
    if (n.grad.empty() && n.value.size() != 0) {
        n.grad = Matrix(n.value.rows, n.value.cols);
    }
    return n.grad;
}

void Tape::accumulate(std::uint32_t idx, const Matrix& delta) {
    Matrix& g = grad_of(idx);
    for (std::size_t i = 0; i < g.values.size(); ++i) g.values[i] += delta.values[i];
}

Matrix Tape::grad(Var v) const {
    const Node& n = nodes_[v.idx];
    if (n.grad.empty()) return Matrix(n.value.rows, n.value.cols);
    return n.grad;
}

void Tape::backward(Var root) {
    const Matrix& rv = value(root);
    if (rv.rows != 1 || rv.cols != 1) {
        throw_invalid("backward: root must be 1x1, got " + rv.shape_str());
    }
    for (Node& n : nodes_) n.grad = Matrix();
    grad_of(root.idx).values[0] = 1.0;

    for (std::uint32_t i = root.idx + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.grad.empty()) continue;
        const Matrix& g = n.grad;
        switch (n.op) {
        case Op::leaf:
            break;
        case Op::matmul: {
            const Matrix& a = nodes_[n.in0].value;
            const Matrix& b = nodes_[n.in1].value;
            accumulate(n.in0, nmtprune::matmul(g, nmtprune::transpose(b)));
            accumulate(n.in1, nmtprune::matmul(nmtprune::transpose(a), g));
            break;
        }
        case Op::add:
            accumulate(n.in0, g);
            accumulate(n.in1, g);
            break;
        case Op::hadamard:
            accumulate(n.in0, nmtprune::hadamard(g, nodes_[n.in1].value));
            accumulate(n.in1, nmtprune::hadamard(g, nodes_[n.in0].value));
            break;
        case Op::scale: {
            Matrix d = g;
            for (double& v : d.values) v *= n.factor;
            accumulate(n.in0, d);
            break;
        }
        case Op::const_mul:
            accumulate(n.in0, nmtprune::hadamard(g, n.aux));
            break;
        case Op::sigmoid: {
            Matrix d = g;
            for (std::size_t k = 0; k < d.values.size(); ++k) {
                const double y = n.value.values[k];
                d.values[k] *= y * (1.0 - y);
            }
            accumulate(n.in0, d);
            break;
        }
        case Op::tanh_: {
            Matrix d = g;
            for (std::size_t k = 0; k < d.values.size(); ++k) {
                const double y = n.value.values[k];
                d.values[k] *= 1.0 - y * y;
            }
            accumulate(n.in0, d);
            break;
        }
        case Op::transpose_:
            accumulate(n.in0, nmtprune::transpose(g));
            break;
        case Op::softmax_: {
            // d_in = s .* (g - <s, g>)
            const Matrix& s = n.value;
            double dot = 0.0;
            for (std::size_t k = 0; k < s.values.size(); ++k) {
                dot += s.values[k] * g.values[k];
            }
            Matrix d = g;
            for (std::size_t k = 0; k < d.values.size(); ++k) {
                d.values[k] = s.values[k] * (g.values[k] - dot);
            }
            accumulate(n.in0, d);
            break;
        }
        case Op::slice_rows: {
            Matrix& target = grad_of(n.in0);
            for (std::size_t r = 0; r < n.p1; ++r) {
                for (std::size_t c = 0; c < g.cols; ++c) {
                    target.at(n.p0 + r, c) += g.at(r, c);
                }
            }
            break;
        }
        case Op::concat_rows: {
            Matrix& ga = grad_of(n.in0);
            Matrix& gb = grad_of(n.in1);
            for (std::size_t r = 0; r < ga.rows; ++r) {
                for (std::size_t c = 0; c < g.cols; ++c) {
                    ga.at(r, c) += g.at(r, c);
                }
            }
            for (std::size_t r = 0; r < gb.rows; ++r) {
                for (std::size_t c = 0; c < g.cols; ++c) {
                    gb.at(r, c) += g.at(n.p0 + r, c);
                }
            }
            break;
        }
        case Op::concat_cols: {
            for (std::size_t j = 0; j < n.in_many.size(); ++j) {
                Matrix& gc = grad_of(n.in_many[j]);
                for (std::size_t r = 0; r < g.rows; ++r) {
                    gc.at(r, 0) += g.at(r, j);
                }
            }
            break;
        }
        case Op::select_col: {
            Matrix& gm = grad_of(n.in0);
            for (std::size_t r = 0; r < g.rows; ++r) {
                gm.at(r, n.p0) += g.at(r, 0);
            }
            break;
        }
        case Op::cross_entropy: {
            const double gs = g.values[0];
            Matrix d = n.aux; // softmax probabilities
            d.values[n.p0] -= 1.0;
            for (double& v : d.values) v *= gs;
            accumulate(n.in0, d);
            break;
        }
        case Op::sum_scalars: {
            const double gs = g.values[0];
            for (std::uint32_t in : n.in_many) {
                grad_of(in).values[0] += gs;
            }
            break;
        }
        }
    }
}

GradCheckReport grad_check(const DiffFn& f, std::span<const double> point, double eps) {
    std::vector<double> x(point.begin(), point.end());
    std::vector<double> analytic(x.size(), 0.0);
    const double base = f(x, &analytic);
    if (!std::isfinite(base)) {
        throw_numeric("grad_check: function value is not finite at the base point");
    }

    GradCheckReport report;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + eps;
        const double plus = f(x, nullptr);
        x[i] = saved - eps;
        const double minus = f(x, nullptr);
        x[i] = saved;
        if (!std::isfinite(plus) || !std::isfinite(minus)) {
            throw_numeric("grad_check: non-finite value at perturbed coordinate " +
                          std::to_string(i));
        }
        const double numeric = (plus - minus) / (2.0 * eps);
        const double a = analytic[i];
        if (!std::isfinite(a)) {
            throw_numeric("grad_check: non-finite analytic gradient at coordinate " +
                          std::to_string(i));
        }
        const double rel =
            std::abs(a - numeric) / std::max(1.0, std::abs(a) + std::abs(numeric));
        if (rel >= report.max_rel_error) {
            report.max_rel_error = rel;
            report.worst_index = i;
            report.analytic_at_worst = a;
            report.numeric_at_worst = numeric;
        }
    }
    return report;
}

} // namespace nmtprune
