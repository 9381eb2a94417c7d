#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "csf/errors.hpp"

namespace csf {

// Dense row-major float64 matrix. The only tensor type in the project;
// column vectors are (n x 1) matrices.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols) : rows_(rows), cols_(cols) {
        if (rows < 0 || cols < 0) throw ShapeError("Matrix: negative dimension");
        data_.assign(static_cast<size_t>(rows) * static_cast<size_t>(cols), 0.0);
    }

    static Matrix zeros(int rows, int cols) { return Matrix(rows, cols); }

    static Matrix full(int rows, int cols, double v) {
        Matrix m(rows, cols);
        for (double& x : m.data_) x = v;
        return m;
    }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        const int r = static_cast<int>(rows.size());
        const int c = r > 0 ? static_cast<int>(rows.begin()->size()) : 0;
        Matrix m(r, c);
        int i = 0;
        for (const auto& row : rows) {
            if (static_cast<int>(row.size()) != c) throw ShapeError("from_rows: ragged rows");
            int j = 0;
            for (const double v : row) m(i, j++) = v;
            ++i;
        }
        return m;
    }

    static Matrix column(const std::vector<double>& v) {
        Matrix m(static_cast<int>(v.size()), 1);
        m.data_ = v;
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    double* row_ptr(int r) { return data_.data() + static_cast<size_t>(r) * cols_; }
    const double* row_ptr(int r) const { return data_.data() + static_cast<size_t>(r) * cols_; }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

// Raw (non-differentiable) helpers, used by forward kernels, oracles and analysis.

Matrix matmul(const Matrix& a, const Matrix& b);
// c += a * b
void matmul_acc(const Matrix& a, const Matrix& b, Matrix& c);
// c += a * b^T
void matmul_nt_acc(const Matrix& a, const Matrix& b, Matrix& c);
// c += a^T * b
void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c);

Matrix transpose(const Matrix& m);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double c);
void add_in_place(Matrix& a, const Matrix& b);

double frobenius_sq(const Matrix& m);
bool all_finite(const Matrix& m);
void require_finite(const Matrix& m, const char* where);

}  // namespace csf
