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

#include "core/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"

namespace nmtprune {

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> v)
    : rows(r), cols(c), values(std::move(v)) {
    if (values.size() != rows * cols) {
        throw_invalid("matrix: " + std::to_string(values.size()) +
                      " values do not fill shape " + shape_of(rows, cols));
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> init) {
    rows = init.size();
    cols = rows == 0 ? 0 : init.begin()->size();
    values.reserve(rows * cols);
    for (const auto& row : init) {
        if (row.size() != cols) {
            throw_invalid("matrix: ragged initializer rows");
        }
        values.insert(values.end(), row.begin(), row.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

Matrix Matrix::column(std::vector<double> v) {
    const std::size_t n = v.size();
    return Matrix(n, 1, std::move(v));
}

std::string Matrix::shape_str() const { return shape_of(rows, cols); }

bool Matrix::all_finite() const {
    return std::all_of(values.begin(), values.end(),
                       [](double x) { return std::isfinite(x); });
}

std::string shape_of(std::size_t rows, std::size_t cols) {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) {
        throw_invalid("matmul: lhs " + a.shape_str() + " cannot multiply rhs " +
                      b.shape_str());
    }
    Matrix out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.values.data() + i * a.cols;
        double* orow = out.values.data() + i * b.cols;
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.values.data() + k * b.cols;
            for (std::size_t j = 0; j < b.cols; ++j) {
                orow[j] += aik * brow[j];
            }
        }
    }
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < a.cols; ++j) {
            out.at(j, i) = a.at(i, j);
        }
    }
    return out;
}

static void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (!a.same_shape(b)) {
        throw_invalid(std::string(op) + ": shape mismatch " + a.shape_str() +
                      " vs " + b.shape_str());
    }
}

Matrix add(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "add");
    Matrix out = a;
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += b.values[i];
    return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "hadamard");
    Matrix out = a;
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] *= b.values[i];
    return out;
}

double sigmoid_scalar(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Matrix map_sigmoid(const Matrix& a) {
    Matrix out = a;
    for (double& v : out.values) v = sigmoid_scalar(v);
    return out;
}

Matrix map_tanh(const Matrix& a) {
    Matrix out = a;
    for (double& v : out.values) v = std::tanh(v);
    return out;
}

Matrix softmax_column(const Matrix& logits) {
    if (logits.cols != 1 || logits.rows == 0) {
        throw_invalid("softmax: expected non-empty column vector, got " +
                      logits.shape_str());
    }
    const double zmax = *std::max_element(logits.values.begin(), logits.values.end());
    Matrix out = logits;
    double total = 0.0;
    for (double& v : out.values) {
        v = std::exp(v - zmax);
        total += v;
    }
    for (double& v : out.values) v /= total;
    return out;
}

double cross_entropy_column(const Matrix& logits, std::size_t target) {
    if (logits.cols != 1 || logits.rows == 0) {
        throw_invalid("cross_entropy: expected non-empty column vector, got " +
                      logits.shape_str());
    }
    if (target >= logits.rows) {
        throw_invalid("cross_entropy: target " + std::to_string(target) +
                      " out of range for " + std::to_string(logits.rows) +
                      " logits");
    }
    const double zmax = *std::max_element(logits.values.begin(), logits.values.end());
    double sum = 0.0;
    for (double v : logits.values) sum += std::exp(v - zmax);
    return std::log(sum) + zmax - logits.values[target];
}

} // namespace nmtprune
