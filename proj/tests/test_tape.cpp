#include <doctest.h>

#include <cmath>

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "core/tape.hpp"

using namespace nmtprune;

TEST_CASE("grad_check on a square") {
    // f(x) = x^2 via the tape; df/dx = 2x.
    DiffFn f = [](std::span<const double> point, std::vector<double>* grad) {
        Tape tape;
        Var x = tape.leaf(Matrix(1, 1, {point[0]}));
        Var y = tape.hadamard(x, x);
        if (grad != nullptr) {
            tape.backward(y);
            (*grad)[0] = tape.grad(x).values[0];
        }
        return tape.scalar(y);
    };
    const std::vector<double> point = {3.0};
    const GradCheckReport report = grad_check(f, point, 1e-5);
    CHECK(report.max_rel_error < 1e-8);
    CHECK(report.analytic_at_worst == doctest::Approx(6.0));
    CHECK(report.numeric_at_worst == doctest::Approx(6.0));
}

TEST_CASE("grad_check on a constant") {
    DiffFn f = [](std::span<const double>, std::vector<double>* grad) {
        if (grad != nullptr) (*grad)[0] = 0.0;
        return 42.0;
    };
    const std::vector<double> point = {1.0};
    const GradCheckReport report = grad_check(f, point, 1e-5);
    CHECK(report.max_rel_error == doctest::Approx(0.0));
}

TEST_CASE("untouched nodes report a zero gradient") {
    Tape tape;
    Var used = tape.leaf(Matrix(1, 1, {2.0}));
    Var unused = tape.leaf(Matrix(3, 2));
    Var y = tape.hadamard(used, used);
    tape.backward(y);
    const Matrix g = tape.grad(unused);
    CHECK(g.rows == 3);
    CHECK(g.cols == 2);
    for (double v : g.values) CHECK(v == 0.0);
}

TEST_CASE("backward rejects non-scalar roots") {
    Tape tape;
    Var x = tape.leaf(Matrix(2, 1));
    CHECK_THROWS_AS(tape.backward(x), Error);
}

TEST_CASE("matmul gradients against finite differences") {
    // f(A, b) = sum over entries of sigmoid(A b), with A 3x2 and b 2x1.
    DiffFn f = [](std::span<const double> point, std::vector<double>* grad) {
        Tape tape;
        Var a = tape.leaf(Matrix(3, 2, {point.begin(), point.begin() + 6}));
        Var b = tape.leaf(Matrix(2, 1, {point[6], point[7]}));
        Var y = tape.sigmoid(tape.matmul(a, b));
        Var ones = tape.leaf(Matrix(1, 3, {1.0, 1.0, 1.0}));
        Var total = tape.matmul(ones, y);
        if (grad != nullptr) {
            tape.backward(total);
            const Matrix ga = tape.grad(a);
            const Matrix gb = tape.grad(b);
            std::copy(ga.values.begin(), ga.values.end(), grad->begin());
            std::copy(gb.values.begin(), gb.values.end(), grad->begin() + 6);
        }
        return tape.scalar(total);
    };
    const std::vector<double> point = {0.3, -1.2, 0.7, 0.1, -0.4, 0.9, 1.1, -0.8};
    CHECK(grad_check(f, point, 1e-5).max_rel_error < 1e-7);
}

TEST_CASE("composite op gradients against finite differences") {
    // Exercises slice_rows, concat_rows, concat_cols, transpose, softmax,
    // select_col and cross entropy in one scalar function.
    DiffFn f = [](std::span<const double> point, std::vector<double>* grad) {
        Tape tape;
        Var m = tape.leaf(Matrix(4, 2, {point.begin(), point.begin() + 8}));
        Var top = tape.slice_rows(m, 0, 2);    // 2x2
        Var bottom = tape.slice_rows(m, 2, 2); // 2x2
        Var c0 = tape.select_col(top, 0);
        Var c1 = tape.select_col(bottom, 1);
        Var stacked = tape.concat_rows(c0, c1);          // 4x1
        std::vector<Var> cols = {c0, c1};
        Var square = tape.concat_cols(cols);             // 2x2
        Var rotated = tape.transpose(square);            // 2x2
        Var logits = tape.matmul(rotated, tape.softmax(tape.slice_rows(stacked, 1, 2)));
        Var loss = tape.softmax_cross_entropy(logits, 1);
        if (grad != nullptr) {
            tape.backward(loss);
            const Matrix gm = tape.grad(m);
            std::copy(gm.values.begin(), gm.values.end(), grad->begin());
        }
        return tape.scalar(loss);
    };
    const std::vector<double> point = {0.5, -0.3, 0.8, 0.2, -0.6, 0.4, 0.1, -0.9};
    CHECK(grad_check(f, point, 1e-5).max_rel_error < 1e-7);
}

TEST_CASE("sum_scalars and scale gradients") {
    DiffFn f = [](std::span<const double> point, std::vector<double>* grad) {
        Tape tape;
        Var x = tape.leaf(Matrix(1, 1, {point[0]}));
        Var y = tape.leaf(Matrix(1, 1, {point[1]}));
        std::vector<Var> terms = {tape.hadamard(x, y), tape.scale(x, 2.5),
                                  tape.tanh(y)};
        Var total = tape.sum_scalars(terms);
        if (grad != nullptr) {
            tape.backward(total);
            (*grad)[0] = tape.grad(x).values[0];
            (*grad)[1] = tape.grad(y).values[0];
        }
        return tape.scalar(total);
    };
    const std::vector<double> point = {0.7, -1.3};
    CHECK(grad_check(f, point, 1e-5).max_rel_error < 1e-8);
}

TEST_CASE("const_mul applies a fixed mask with matching gradient") {
    Tape tape;
    Var x = tape.leaf(Matrix::column({2.0, 3.0, 4.0}));
    Matrix mask = Matrix::column({0.0, 2.0, 1.0});
    Var y = tape.const_mul(x, mask);
    CHECK(tape.value(y).values == std::vector<double>{0.0, 6.0, 4.0});
    Var ones = tape.leaf(Matrix(1, 3, {1.0, 1.0, 1.0}));
    tape.backward(tape.matmul(ones, y));
    CHECK(tape.grad(x).values == std::vector<double>{0.0, 2.0, 1.0});
}
