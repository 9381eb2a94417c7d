#include "csf/matrix.hpp"

#include <cmath>
#include <string>

namespace csf {

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         " * " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    }
    Matrix c(a.rows(), b.cols());
    matmul_acc(a, b, c);
    return c;
}

void matmul_acc(const Matrix& a, const Matrix& b, Matrix& c) {
    const int m = a.rows(), k = a.cols(), n = b.cols();
    if (b.rows() != k || c.rows() != m || c.cols() != n) throw ShapeError("matmul_acc: shape mismatch");
    if (n == 1) {
        // matvec: unrolled dot products; the ikj loop degenerates to scalar
        // latency-bound adds for single-column operands
        for (int i = 0; i < m; ++i) {
            const double* ai = a.row_ptr(i);
            const double* bv = b.data();
            double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
            int p = 0;
            for (; p + 4 <= k; p += 4) {
                s0 += ai[p] * bv[p];
                s1 += ai[p + 1] * bv[p + 1];
                s2 += ai[p + 2] * bv[p + 2];
                s3 += ai[p + 3] * bv[p + 3];
            }
            for (; p < k; ++p) s0 += ai[p] * bv[p];
            c(i, 0) += (s0 + s1) + (s2 + s3);
        }
        return;
    }
    for (int i = 0; i < m; ++i) {
        double* ci = c.row_ptr(i);
        const double* ai = a.row_ptr(i);
        for (int p = 0; p < k; ++p) {
            const double av = ai[p];
            if (av == 0.0) continue;
            const double* bp = b.row_ptr(p);
            for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

void matmul_nt_acc(const Matrix& a, const Matrix& b, Matrix& c) {
    const int m = a.rows(), k = a.cols(), n = b.rows();
    if (b.cols() != k || c.rows() != m || c.cols() != n) throw ShapeError("matmul_nt_acc: shape mismatch");
    for (int i = 0; i < m; ++i) {
        const double* ai = a.row_ptr(i);
        double* ci = c.row_ptr(i);
        for (int j = 0; j < n; ++j) {
            const double* bj = b.row_ptr(j);
            double s = 0.0;
            for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
            ci[j] += s;
        }
    }
}

void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c) {
    const int m = a.cols(), k = a.rows(), n = b.cols();
    if (b.rows() != k || c.rows() != m || c.cols() != n) throw ShapeError("matmul_tn_acc: shape mismatch");
    for (int p = 0; p < k; ++p) {
        const double* ap = a.row_ptr(p);
        const double* bp = b.row_ptr(p);
        for (int i = 0; i < m; ++i) {
            const double av = ap[i];
            if (av == 0.0) continue;
            double* ci = c.row_ptr(i);
            for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

Matrix transpose(const Matrix& m) {
    Matrix t(m.cols(), m.rows());
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
    return t;
}

Matrix add(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw ShapeError("add: shape mismatch");
    Matrix c = a;
    for (size_t i = 0; i < c.size(); ++i) c.vec()[i] += b.vec()[i];
    return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw ShapeError("sub: shape mismatch");
    Matrix c = a;
    for (size_t i = 0; i < c.size(); ++i) c.vec()[i] -= b.vec()[i];
    return c;
}

Matrix scale(const Matrix& a, double c) {
    Matrix r = a;
    for (double& x : r.vec()) x *= c;
    return r;
}

void add_in_place(Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw ShapeError("add_in_place: shape mismatch");
    for (size_t i = 0; i < a.size(); ++i) a.vec()[i] += b.vec()[i];
}

double frobenius_sq(const Matrix& m) {
    double s = 0.0;
    for (const double x : m.vec()) s += x * x;
    return s;
}

bool all_finite(const Matrix& m) {
    for (const double x : m.vec())
        if (!std::isfinite(x)) return false;
    return true;
}

void require_finite(const Matrix& m, const char* where) {
    if (!all_finite(m)) throw NumericError(std::string("non-finite values in ") + where);
}

}  // namespace csf
