#include <doctest.h>

#include <cmath>

#include "csf/gradcheck.hpp"
#include "csf/matrix.hpp"
#include "csf/rng.hpp"
#include "csf/tape.hpp"

using namespace csf;

namespace {

Matrix random_matrix(int rows, int cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Matrix m(rows, cols);
    for (double& x : m.vec()) x = rng.uniform(lo, hi);
    return m;
}

// Independent reference product for the oracle tests.
Matrix matmul_ref(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (int k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    return c;
}

}  // namespace

TEST_SUITE_BEGIN("numerics");

TEST_CASE("matmul identity and hand-computed values") {
    Rng rng(7);
    const Matrix m = random_matrix(3, 5, rng);
    const Matrix im = matmul(Matrix::identity(3), m);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 5; ++j) CHECK(im(i, j) == m(i, j));

    const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
    const Matrix b = Matrix::from_rows({{1}, {1}});
    const Matrix c = matmul(a, b);
    CHECK(c(0, 0) == 3.0);
    CHECK(c(1, 0) == 7.0);

    CHECK_THROWS_AS(matmul(Matrix(2, 3), Matrix(2, 3)), ShapeError);
}

TEST_CASE("matmul matches reference on random shapes") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const int m = 1 + static_cast<int>(rng.uniform_int(0, 7));
        const int k = 1 + static_cast<int>(rng.uniform_int(0, 7));
        const int n = 1 + static_cast<int>(rng.uniform_int(0, 7));
        const Matrix a = random_matrix(m, k, rng);
        const Matrix b = random_matrix(k, n, rng);
        const Matrix got = matmul(a, b);
        const Matrix want = matmul_ref(a, b);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) CHECK(got(i, j) == doctest::Approx(want(i, j)).epsilon(1e-13));
    }
}

TEST_CASE("matmul associativity on conditioned triples") {
    Rng rng(13);
    for (int trial = 0; trial < 30; ++trial) {
        const Matrix a = random_matrix(8, 8, rng);
        const Matrix b = random_matrix(8, 8, rng);
        const Matrix c = random_matrix(8, 8, rng);
        const Matrix left = matmul(matmul(a, b), c);
        const Matrix right = matmul(a, matmul(b, c));
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j)
                CHECK(std::abs(left(i, j) - right(i, j)) < 1e-10);
    }
}

TEST_CASE("matmul gradient of sum-of-entries vs finite differences") {
    Rng rng(17);
    Param a("a", random_matrix(5, 7, rng));
    Param b("b", random_matrix(7, 3, rng));
    Param* params[] = {&a, &b};
    const auto loss = [&](bool with_grad) {
        Tape t(with_grad);
        Var prod = t.matmul(t.use(a), t.use(b));
        // sum of entries via ones^T * prod * ones expressed as a quadratic-free sum
        Var s = t.matmul(t.constant(Matrix::full(1, 5, 1.0)),
                         t.matmul(prod, t.constant(Matrix::full(3, 1, 1.0))));
        const double v = t.value(s)(0, 0);
        if (with_grad) {
            t.backward(s);
            t.flush_param_grads();
        }
        return v;
    };
    const GradCheckReport report = grad_check(loss, params);
    CHECK(report.max_rel_error < 1e-6);
}

TEST_CASE("softmax_columns closed-form values") {
    Tape t;
    SUBCASE("equal entries") {
        Var v = t.constant(Matrix::full(4, 1, 2.5));
        const Matrix& y = t.value(t.softmax_columns(v, 1.0));
        for (int i = 0; i < 4; ++i) CHECK(y(i, 0) == doctest::Approx(0.25).epsilon(1e-14));
    }
    SUBCASE("[0, ln 3] -> [0.25, 0.75]") {
        Matrix m(2, 1);
        m(0, 0) = 0.0;
        m(1, 0) = std::log(3.0);
        const Matrix& y = t.value(t.softmax_columns(t.constant(m), 1.0));
        CHECK(y(0, 0) == doctest::Approx(0.25).epsilon(1e-14));
        CHECK(y(1, 0) == doctest::Approx(0.75).epsilon(1e-14));
    }
    SUBCASE("temperature rejects non-positive") {
        Var v = t.constant(Matrix::full(2, 1, 0.0));
        CHECK_THROWS_AS(t.softmax_columns(v, 0.0), NumericError);
    }
}

TEST_CASE("softmax_columns shift invariance and column sums") {
    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix m = random_matrix(6, 5, rng, -30.0, 30.0);
        Matrix shifted = m;
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 5; ++j) shifted(i, j) += 100.0;
        Tape t;
        const Matrix& y1 = t.value(t.softmax_columns(t.constant(m), 2.0));
        const Matrix& y2 = t.value(t.softmax_columns(t.constant(shifted), 2.0));
        for (int j = 0; j < 5; ++j) {
            double sum = 0.0;
            for (int i = 0; i < 6; ++i) {
                sum += y1(i, j);
                CHECK(std::abs(y1(i, j) - y2(i, j)) < 1e-12);
                CHECK(y1(i, j) > 0.0);
                CHECK(y1(i, j) < 1.0 + 1e-15);
            }
            CHECK(std::abs(sum - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("softmax_columns respects the key mask") {
    Rng rng(29);
    const Matrix m = random_matrix(5, 3, rng);
    const std::vector<uint8_t> mask = {0, 1, 0, 1, 0};
    Tape t;
    const Matrix& y = t.value(t.softmax_columns(t.constant(m), 1.0, &mask));
    for (int j = 0; j < 3; ++j) {
        double sum = 0.0;
        for (int i = 0; i < 5; ++i) {
            if (mask[i]) CHECK(y(i, j) == 0.0);
            sum += y(i, j);
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("softmax_columns gradient") {
    Rng rng(31);
    Param x("x", random_matrix(4, 3, rng));
    Param* params[] = {&x};
    const Matrix weights = random_matrix(4, 3, rng);
    const auto loss = [&](bool with_grad) {
        Tape t(with_grad);
        Var y = t.softmax_columns(t.use(x), 1.7);
        // weighted sum to give every output entry a distinct pull
        Var s = t.sum_squares(t.add(y, t.constant(weights)));
        const double v = t.value(s)(0, 0);
        if (with_grad) {
            t.backward(s);
            t.flush_param_grads();
        }
        return v;
    };
    CHECK(grad_check(loss, params).max_rel_error < 1e-6);
}

TEST_CASE("layer_norm closed-form values") {
    SUBCASE("constant column maps to bias") {
        Tape t;
        Var m = t.constant(Matrix::full(3, 2, 4.2));
        Var gain = t.constant(Matrix::full(3, 1, 1.0));
        Var bias = t.constant(Matrix(3, 1));
        const Matrix& y = t.value(t.layer_norm(m, gain, bias));
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 2; ++j) CHECK(y(i, j) == 0.0);
    }
    SUBCASE("column [1,3] -> [-1,1] within eps effect") {
        Tape t;
        Matrix m(2, 1);
        m(0, 0) = 1.0;
        m(1, 0) = 3.0;
        const Matrix& y = t.value(t.layer_norm(t.constant(m), t.constant(Matrix::full(2, 1, 1.0)),
                                               t.constant(Matrix(2, 1))));
        CHECK(std::abs(y(0, 0) - (-1.0)) < 1e-4);
        CHECK(std::abs(y(1, 0) - 1.0) < 1e-4);
    }
}

TEST_CASE("layer_norm output statistics") {
    Rng rng(37);
    const Matrix m = random_matrix(16, 8, rng, -10.0, 10.0);
    Tape t;
    const Matrix& y = t.value(t.layer_norm(t.constant(m), t.constant(Matrix::full(16, 1, 1.0)),
                                           t.constant(Matrix(16, 1))));
    for (int j = 0; j < 8; ++j) {
        double mean = 0.0, var = 0.0;
        for (int i = 0; i < 16; ++i) mean += y(i, j);
        mean /= 16.0;
        for (int i = 0; i < 16; ++i) var += (y(i, j) - mean) * (y(i, j) - mean);
        var /= 16.0;
        CHECK(std::abs(mean) < 1e-6);
        CHECK(std::abs(var - 1.0) < 1e-6);
    }
}

TEST_CASE("layer_norm gradient on 4x4 input") {
    Rng rng(41);
    Param x("x", random_matrix(4, 4, rng));
    Param gain("gain", random_matrix(4, 1, rng, 0.5, 1.5));
    Param bias("bias", random_matrix(4, 1, rng));
    Param* params[] = {&x, &gain, &bias};
    const Matrix weights = random_matrix(4, 4, rng);
    const auto loss = [&](bool with_grad) {
        Tape t(with_grad);
        Var y = t.layer_norm(t.use(x), t.use(gain), t.use(bias));
        Var s = t.sum_squares(t.add(y, t.constant(weights)));
        const double v = t.value(s)(0, 0);
        if (with_grad) {
            t.backward(s);
            t.flush_param_grads();
        }
        return v;
    };
    CHECK(grad_check(loss, params).max_rel_error < 1e-5);
}

TEST_CASE("instance_norm closed-form values") {
    SUBCASE("single patch maps to zeros") {
        Tape t;
        Rng rng(43);
        const Matrix& y = t.value(t.instance_norm(t.constant(random_matrix(5, 1, rng))));
        for (int i = 0; i < 5; ++i) CHECK(y(i, 0) == 0.0);
    }
    SUBCASE("row [2,4,6]") {
        Tape t;
        Matrix m(1, 3);
        m(0, 0) = 2.0;
        m(0, 1) = 4.0;
        m(0, 2) = 6.0;
        const Matrix& y = t.value(t.instance_norm(t.constant(m)));
        CHECK(std::abs(y(0, 0) - (-1.2247)) < 1e-3);
        CHECK(std::abs(y(0, 1)) < 1e-12);
        CHECK(std::abs(y(0, 2) - 1.2247) < 1e-3);
    }
}

TEST_CASE("instance_norm output statistics and gradient") {
    Rng rng(47);
    const Matrix m = random_matrix(6, 12, rng, -10.0, 10.0);
    {
        Tape t;
        const Matrix& y = t.value(t.instance_norm(t.constant(m)));
        for (int i = 0; i < 6; ++i) {
            double mean = 0.0, var = 0.0;
            for (int j = 0; j < 12; ++j) mean += y(i, j);
            mean /= 12.0;
            for (int j = 0; j < 12; ++j) var += (y(i, j) - mean) * (y(i, j) - mean);
            var /= 12.0;
            CHECK(std::abs(mean) < 1e-6);
            CHECK(std::abs(var - 1.0) < 1e-6);
        }
    }
    Param x("x", random_matrix(4, 5, rng));
    Param* params[] = {&x};
    const Matrix weights = random_matrix(4, 5, rng);
    const auto loss = [&](bool with_grad) {
        Tape t(with_grad);
        Var s = t.sum_squares(t.add(t.instance_norm(t.use(x)), t.constant(weights)));
        const double v = t.value(s)(0, 0);
        if (with_grad) {
            t.backward(s);
            t.flush_param_grads();
        }
        return v;
    };
    CHECK(grad_check(loss, params).max_rel_error < 1e-5);
}

TEST_CASE("grad_check on a quadratic is near-exact") {
    Param x("x", Matrix::full(3, 3, 1.0));
    Param* params[] = {&x};
    const auto loss = [&](bool with_grad) {
        Tape t(with_grad);
        Var s = t.sum_squares(t.use(x));
        const double v = t.value(s)(0, 0);
        if (with_grad) {
            t.backward(s);
            t.flush_param_grads();
        }
        return v;
    };
    const GradCheckReport report = grad_check(loss, params);
    CHECK(report.max_rel_error < 1e-8);
    // exact gradient of sum(x^2) at ones is 2
    CHECK(x.grad(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("grad_check rejects non-finite forward values") {
    Param x("x", Matrix::full(1, 1, 2.0));
    Param* params[] = {&x};
    const auto loss = [&](bool) -> double { return std::nan(""); };
    CHECK_THROWS_AS(grad_check(loss, params), NumericError);
}

TEST_CASE("elementwise and reshaping op gradients") {
    Rng rng(53);
    Param x("x", random_matrix(3, 7, rng));
    Param b("b", random_matrix(3, 1, rng));
    Param* params[] = {&x, &b};
    const Matrix weights = random_matrix(8, 4, rng);
    const auto loss = [&](bool with_grad) {
        Tape t(with_grad);
        Var h = t.add_col_broadcast(t.use(x), t.use(b));
        h = t.gelu(h);
        h = t.repatch(h, 2);  // 6x4 with one padded column half
        h = t.concat_rows({h, t.scale(h, -0.5)});
        h = t.slice_rows(h, 2, 10);
        Var s = t.sum_squares(t.add(h, t.constant(weights)));
        const double v = t.value(s)(0, 0);
        if (with_grad) {
            t.backward(s);
            t.flush_param_grads();
        }
        return v;
    };
    CHECK(grad_check(loss, params).max_rel_error < 1e-6);
}

TEST_CASE("scalar loss op gradients") {
    Rng rng(59);
    Param x("x", random_matrix(6, 1, rng));
    Param* params[] = {&x};
    const Matrix target = random_matrix(6, 1, rng, 2.0, 3.0);  // offset avoids |.| kinks
    SUBCASE("l1_mean") {
        const auto loss = [&](bool with_grad) {
            Tape t(with_grad);
            Var s = t.l1_mean(t.use(x), target);
            const double v = t.value(s)(0, 0);
            if (with_grad) {
                t.backward(s);
                t.flush_param_grads();
            }
            return v;
        };
        CHECK(grad_check(loss, params).max_rel_error < 1e-6);
    }
    SUBCASE("cross_entropy_logits") {
        const auto loss = [&](bool with_grad) {
            Tape t(with_grad);
            Var s = t.cross_entropy_logits(t.use(x), 2);
            const double v = t.value(s)(0, 0);
            if (with_grad) {
                t.backward(s);
                t.flush_param_grads();
            }
            return v;
        };
        CHECK(grad_check(loss, params).max_rel_error < 1e-6);
    }
    SUBCASE("sq_error_columns with partial validity") {
        Param y("y", random_matrix(4, 3, rng));
        Param* ps[] = {&y};
        const Matrix tgt = random_matrix(4, 3, rng);
        const std::vector<int> valid = {4, 2, 0};
        const auto loss = [&](bool with_grad) {
            Tape t(with_grad);
            Var s = t.sq_error_columns(t.use(y), tgt, valid);
            const double v = t.value(s)(0, 0);
            if (with_grad) {
                t.backward(s);
                t.flush_param_grads();
            }
            return v;
        };
        CHECK(grad_check(loss, ps).max_rel_error < 1e-6);
        // invalid region must not influence the loss
        Tape t;
        const double before = t.value(t.sq_error_columns(t.use(y), tgt, valid))(0, 0);
        Param y2 = y;
        y2.value(1, 2) += 100.0;
        Tape t2;
        const double after = t2.value(t2.sq_error_columns(t2.use(y2), tgt, valid))(0, 0);
        CHECK(before == after);
    }
}

TEST_CASE("tape rejects double backward and grad of constants") {
    Tape t;
    Var c = t.constant(Matrix::full(1, 1, 3.0));
    CHECK_THROWS_AS(t.grad(c), ShapeError);
    Param x("x", Matrix::full(1, 1, 2.0));
    Var s = t.sum_squares(t.use(x));
    t.backward(s);
    CHECK_THROWS_AS(t.backward(s), NumericError);
}

TEST_SUITE_END();
