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

#ifndef NMTPRUNE_CORE_MATRIX_HPP
#define NMTPRUNE_CORE_MATRIX_HPP

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace nmtprune {

// Dense row-major matrix of doubles. Column vectors are rows x 1 matrices.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}
    Matrix(std::size_t r, std::size_t c, std::vector<double> v);
    Matrix(std::initializer_list<std::initializer_list<double>> init);

    static Matrix zeros(std::size_t r, std::size_t c) { return Matrix(r, c); }
    static Matrix identity(std::size_t n);
    static Matrix column(std::vector<double> v);

    double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

    std::size_t size() const { return rows * cols; }
    bool empty() const { return values.empty(); }
    bool same_shape(const Matrix& other) const {
        return rows == other.rows && cols == other.cols;
    }
    std::string shape_str() const;

    bool all_finite() const;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix map_sigmoid(const Matrix& a);
Matrix map_tanh(const Matrix& a);

double sigmoid_scalar(double x);

// softmax over a column vector, max-subtracted for stability; sums to 1.
Matrix softmax_column(const Matrix& logits);

// -log softmax(logits)[target] via log-sum-exp; logits must be a column vector.
double cross_entropy_column(const Matrix& logits, std::size_t target);

// Pretty shape diagnostic used in error messages, e.g. "2x3".
std::string shape_of(std::size_t rows, std::size_t cols);

} // namespace nmtprune

#endif // NMTPRUNE_CORE_MATRIX_HPP
