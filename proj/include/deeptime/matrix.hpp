#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "deeptime/errors.hpp"

namespace deeptime::numkit {

// Dense row-major matrix of 64-bit reals. The single numeric carrier used
// throughout the library.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        Matrix m(rows.size(), rows.size() ? rows.begin()->size() : 0);
        std::size_t i = 0;
        for (const auto& r : rows) {
            if (r.size() != m.cols_) throw ShapeMismatch("from_rows: ragged row lengths");
            std::size_t j = 0;
            for (double v : r) m(i, j++) = v;
            ++i;
        }
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* row_ptr(std::size_t i) { return data_.data() + i * cols_; }
    const double* row_ptr(std::size_t i) const { return data_.data() + i * cols_; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    std::vector<double>& storage() { return data_; }
    const std::vector<double>& storage() const { return data_; }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    void fill(double v) { data_.assign(data_.size(), v); }

    Matrix& operator+=(const Matrix& o) {
        check_same_shape(o, "operator+=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }

    Matrix& operator-=(const Matrix& o) {
        check_same_shape(o, "operator-=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }

    Matrix& operator*=(double s) {
        for (double& v : data_) v *= s;
        return *this;
    }

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(Matrix a, double s) { return a *= s; }
    friend Matrix operator*(double s, Matrix a) { return a *= s; }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    void check_same_shape(const Matrix& o, const char* op) const {
        if (!same_shape(o))
            throw ShapeMismatch(std::string(op) + ": " + shape_str() + " vs " + o.shape_str());
    }

    std::string shape_str() const {
        return std::to_string(rows_) + "x" + std::to_string(cols_);
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline void ensure_finite(const Matrix& m, const char* what) {
    if (!m.all_finite()) throw NonFiniteValue(std::string(what) + ": non-finite entries");
}

// C = A * B
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw ShapeMismatch("matmul: inner dimensions differ");
    Matrix c(a.rows(), b.cols());
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = a.row_ptr(i);
        double* crow = c.row_ptr(i);
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = arow[p];
            const double* brow = b.row_ptr(p);
            for (std::size_t j = 0; j < m; ++j) crow[j] += aip * brow[j];
        }
    }
    return c;
}

// C = A * B^T
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) throw ShapeMismatch("matmul_nt: inner dimensions differ");
    Matrix c(a.rows(), b.rows());
    const std::size_t k = a.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.row_ptr(i);
        double* crow = c.row_ptr(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* brow = b.row_ptr(j);
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
            crow[j] = s;
        }
    }
    return c;
}

// C = A^T * B
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) throw ShapeMismatch("matmul_tn: inner dimensions differ");
    Matrix c(a.cols(), b.cols());
    const std::size_t n = a.rows(), m = b.cols();
    for (std::size_t p = 0; p < n; ++p) {
        const double* arow = a.row_ptr(p);
        const double* brow = b.row_ptr(p);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double aip = arow[i];
            double* crow = c.row_ptr(i);
            for (std::size_t j = 0; j < m; ++j) crow[j] += aip * brow[j];
        }
    }
    return c;
}

inline Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

inline Matrix hadamard(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw ShapeMismatch("hadamard: shapes differ");
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] *= b.data()[i];
    return c;
}

// y += alpha * x
inline void axpy(double alpha, const Matrix& x, Matrix& y) {
    if (!x.same_shape(y)) throw ShapeMismatch("axpy: shapes differ");
    for (std::size_t i = 0; i < x.size(); ++i) y.data()[i] += alpha * x.data()[i];
}

inline void add_diag(Matrix& a, double v) {
    if (a.rows() != a.cols()) throw ShapeMismatch("add_diag: matrix not square");
    for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += v;
}

inline double trace(const Matrix& a) {
    if (a.rows() != a.cols()) throw ShapeMismatch("trace: matrix not square");
    double t = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) t += a(i, i);
    return t;
}

inline double sq_sum(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * a.data()[i];
    return s;
}

inline double fro_norm(const Matrix& a) { return std::sqrt(sq_sum(a)); }

inline double max_abs(const Matrix& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i]));
    return m;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw ShapeMismatch("max_abs_diff: shapes differ");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

// [A | 1]: appends an all-ones column.
inline Matrix hcat_ones(const Matrix& a) {
    Matrix out(a.rows(), a.cols() + 1);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* src = a.row_ptr(i);
        double* dst = out.row_ptr(i);
        for (std::size_t j = 0; j < a.cols(); ++j) dst[j] = src[j];
        dst[a.cols()] = 1.0;
    }
    return out;
}

inline Matrix drop_last_col(const Matrix& a) {
    if (a.cols() == 0) throw ShapeMismatch("drop_last_col: empty matrix");
    Matrix out(a.rows(), a.cols() - 1);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j + 1 < a.cols(); ++j) out(i, j) = a(i, j);
    return out;
}

// Copy of rows [r0, r0+count).
inline Matrix rows_block(const Matrix& a, std::size_t r0, std::size_t count) {
    if (r0 + count > a.rows()) throw ShapeMismatch("rows_block: range out of bounds");
    Matrix out(count, a.cols());
    for (std::size_t i = 0; i < count; ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(r0 + i, j);
    return out;
}

inline void set_rows_block(Matrix& a, std::size_t r0, const Matrix& block) {
    if (r0 + block.rows() > a.rows() || block.cols() != a.cols())
        throw ShapeMismatch("set_rows_block: block does not fit");
    for (std::size_t i = 0; i < block.rows(); ++i)
        for (std::size_t j = 0; j < block.cols(); ++j) a(r0 + i, j) = block(i, j);
}

// Copy of columns [c0, c0+count).
inline Matrix cols_block(const Matrix& a, std::size_t c0, std::size_t count) {
    if (c0 + count > a.cols()) throw ShapeMismatch("cols_block: range out of bounds");
    Matrix out(a.rows(), count);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < count; ++j) out(i, j) = a(i, c0 + j);
    return out;
}

// X[i,:] += v  for a 1 x cols row vector v.
inline void add_row_vector(Matrix& x, const Matrix& v) {
    if (v.rows() != 1 || v.cols() != x.cols())
        throw ShapeMismatch("add_row_vector: v must be 1 x cols");
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double* row = x.row_ptr(i);
        for (std::size_t j = 0; j < x.cols(); ++j) row[j] += v(0, j);
    }
}

// 1 x cols vector of column sums.
inline Matrix col_sums(const Matrix& x) {
    Matrix s(1, x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double* row = x.row_ptr(i);
        for (std::size_t j = 0; j < x.cols(); ++j) s(0, j) += row[j];
    }
    return s;
}

} // namespace deeptime::numkit
