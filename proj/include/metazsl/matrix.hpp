#pragma once

#include <cstddef>
#include <vector>

namespace metazsl {

// Dense row-major matrix of 64-bit reals. This is the only tensor type in
// the library; vectors are 1xN or Nx1 matrices or plain std::vector<double>.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;  // rows * cols, row-major

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}
    Matrix(int r, int c, std::vector<double> d);

    double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

    double* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
    const double* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
    bool is_finite() const;
    void fill(double v);
};

// c = a * b
Matrix matmul(const Matrix& a, const Matrix& b);
// c = a^T * b  (a: k x m, b: k x n, c: m x n)
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// c = a * b^T  (a: m x k, b: n x k, c: m x n)
Matrix matmul_nt(const Matrix& a, const Matrix& b);

Matrix hadamard(const Matrix& a, const Matrix& b);
// [a | b] side by side; row counts must match.
Matrix concat_cols(const Matrix& a, const Matrix& b);
// Columns [begin, end) of a.
Matrix slice_cols(const Matrix& a, int begin, int end);
// Adds v to every row of m in place; v.size() == m.cols.
void add_row_inplace(Matrix& m, const std::vector<double>& v);
// Column sums as a vector of length m.cols.
std::vector<double> col_sums(const Matrix& m);
// One row of m repeated n times.
Matrix repeat_row(const std::vector<double>& v, int n);

}  // namespace metazsl
