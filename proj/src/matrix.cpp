#include "metazsl/matrix.hpp"

#include <cmath>
#include <stdexcept>

#include "metazsl/errors.hpp"

namespace metazsl {

Matrix::Matrix(int r, int c, std::vector<double> d) : rows(r), cols(c), data(std::move(d)) {
    if (data.size() != static_cast<std::size_t>(r) * c)
        throw ShapeError("matrix data length does not match rows*cols");
}

bool Matrix::is_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

void Matrix::fill(double v) {
    for (double& x : data) x = v;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw ShapeError("matmul: inner dimensions differ");
    Matrix c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (int k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            const double* brow = b.row(k);
            for (int j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows) throw ShapeError("matmul_tn: row counts differ");
    Matrix c(a.cols, b.cols);
    for (int k = 0; k < a.rows; ++k) {
        const double* arow = a.row(k);
        const double* brow = b.row(k);
        for (int i = 0; i < a.cols; ++i) {
            const double aki = arow[i];
            double* crow = c.row(i);
            for (int j = 0; j < b.cols; ++j) crow[j] += aki * brow[j];
        }
    }
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols) throw ShapeError("matmul_nt: column counts differ");
    Matrix c(a.rows, b.rows);
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (int j = 0; j < b.rows; ++j) {
            const double* brow = b.row(j);
            double s = 0.0;
            for (int k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
            crow[j] = s;
        }
    }
    return c;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw ShapeError("hadamard: shapes differ");
    Matrix c = a;
    for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] *= b.data[i];
    return c;
}

Matrix concat_cols(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows) throw ShapeError("concat_cols: row counts differ");
    Matrix c(a.rows, a.cols + b.cols);
    for (int i = 0; i < a.rows; ++i) {
        double* crow = c.row(i);
        const double* arow = a.row(i);
        const double* brow = b.row(i);
        for (int j = 0; j < a.cols; ++j) crow[j] = arow[j];
        for (int j = 0; j < b.cols; ++j) crow[a.cols + j] = brow[j];
    }
    return c;
}

Matrix slice_cols(const Matrix& a, int begin, int end) {
    if (begin < 0 || end > a.cols || begin > end)
        throw ShapeError("slice_cols: range out of bounds");
    Matrix c(a.rows, end - begin);
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (int j = begin; j < end; ++j) crow[j - begin] = arow[j];
    }
    return c;
}

void add_row_inplace(Matrix& m, const std::vector<double>& v) {
    if (v.size() != static_cast<std::size_t>(m.cols))
        throw ShapeError("add_row_inplace: vector length differs from cols");
    for (int i = 0; i < m.rows; ++i) {
        double* row = m.row(i);
        for (int j = 0; j < m.cols; ++j) row[j] += v[j];
    }
}

std::vector<double> col_sums(const Matrix& m) {
    std::vector<double> s(m.cols, 0.0);
    for (int i = 0; i < m.rows; ++i) {
        const double* row = m.row(i);
        for (int j = 0; j < m.cols; ++j) s[j] += row[j];
    }
    return s;
}

Matrix repeat_row(const std::vector<double>& v, int n) {
    Matrix m(n, static_cast<int>(v.size()));
    for (int i = 0; i < n; ++i) {
        double* row = m.row(i);
        for (std::size_t j = 0; j < v.size(); ++j) row[j] = v[j];
    }
    return m;
}

}  // namespace metazsl
