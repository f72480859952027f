#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <vector>

namespace mvsgnn {

using Index = std::int64_t;

// Row-major dense matrix of doubles. All model math in this project is
// double precision; variance measurements need the headroom.
struct DenseMatrix {
    Index rows = 0;
    Index cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(Index r, Index c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<std::size_t>(r * c), fill) {}

    double& operator()(Index i, Index j) {
        return data[static_cast<std::size_t>(i * cols + j)];
    }
    double operator()(Index i, Index j) const {
        return data[static_cast<std::size_t>(i * cols + j)];
    }
    double* row_ptr(Index i) { return data.data() + i * cols; }
    const double* row_ptr(Index i) const { return data.data() + i * cols; }

    bool same_shape(const DenseMatrix& o) const {
        return rows == o.rows && cols == o.cols;
    }
    void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

// out = A * B
inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    assert(a.cols == b.rows);
    DenseMatrix out(a.rows, b.cols);
    for (Index i = 0; i < a.rows; ++i) {
        const double* ai = a.row_ptr(i);
        double* oi = out.row_ptr(i);
        for (Index k = 0; k < a.cols; ++k) {
            const double v = ai[k];
            if (v == 0.0) continue;
            const double* bk = b.row_ptr(k);
            for (Index j = 0; j < b.cols; ++j) oi[j] += v * bk[j];
        }
    }
    return out;
}

// out = A^T * B
inline DenseMatrix matmul_at_b(const DenseMatrix& a, const DenseMatrix& b) {
    assert(a.rows == b.rows);
    DenseMatrix out(a.cols, b.cols);
    for (Index i = 0; i < a.rows; ++i) {
        const double* ai = a.row_ptr(i);
        const double* bi = b.row_ptr(i);
        for (Index k = 0; k < a.cols; ++k) {
            const double v = ai[k];
            if (v == 0.0) continue;
            double* ok = out.row_ptr(k);
            for (Index j = 0; j < b.cols; ++j) ok[j] += v * bi[j];
        }
    }
    return out;
}

// out = A * B^T
inline DenseMatrix matmul_a_bt(const DenseMatrix& a, const DenseMatrix& b) {
    assert(a.cols == b.cols);
    DenseMatrix out(a.rows, b.rows);
    for (Index i = 0; i < a.rows; ++i) {
        const double* ai = a.row_ptr(i);
        double* oi = out.row_ptr(i);
        for (Index j = 0; j < b.rows; ++j) {
            const double* bj = b.row_ptr(j);
            double s = 0.0;
            for (Index k = 0; k < a.cols; ++k) s += ai[k] * bj[k];
            oi[j] = s;
        }
    }
    return out;
}

inline void axpy(DenseMatrix& y, double alpha, const DenseMatrix& x) {
    assert(y.same_shape(x));
    for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += alpha * x.data[i];
}

inline DenseMatrix relu(const DenseMatrix& z) {
    DenseMatrix h = z;
    for (auto& v : h.data) v = v > 0.0 ? v : 0.0;
    return h;
}

// Subgradient convention: relu'(0) = 0.
inline void relu_backward_inplace(DenseMatrix& dz, const DenseMatrix& z) {
    assert(dz.same_shape(z));
    for (std::size_t i = 0; i < dz.data.size(); ++i) {
        if (z.data[i] <= 0.0) dz.data[i] = 0.0;
    }
}

inline double frobenius_sq(const DenseMatrix& a) {
    double s = 0.0;
    for (double v : a.data) s += v * v;
    return s;
}

inline double frobenius_sq_diff(const DenseMatrix& a, const DenseMatrix& b) {
    assert(a.same_shape(b));
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        s += d * d;
    }
    return s;
}

inline double row_norm2(const DenseMatrix& a, Index i) {
    const double* p = a.row_ptr(i);
    double s = 0.0;
    for (Index j = 0; j < a.cols; ++j) s += p[j] * p[j];
    return std::sqrt(s);
}

// Gather rows by index: out row r = src row ids[r].
inline DenseMatrix gather_rows(const DenseMatrix& src, const std::vector<Index>& ids) {
    DenseMatrix out(static_cast<Index>(ids.size()), src.cols);
    for (std::size_t r = 0; r < ids.size(); ++r) {
        const double* s = src.row_ptr(ids[r]);
        double* d = out.row_ptr(static_cast<Index>(r));
        for (Index j = 0; j < src.cols; ++j) d[j] = s[j];
    }
    return out;
}

// [A | B] column-wise concatenation.
inline DenseMatrix hconcat(const DenseMatrix& a, const DenseMatrix& b) {
    assert(a.rows == b.rows);
    DenseMatrix out(a.rows, a.cols + b.cols);
    for (Index i = 0; i < a.rows; ++i) {
        double* o = out.row_ptr(i);
        const double* pa = a.row_ptr(i);
        const double* pb = b.row_ptr(i);
        for (Index j = 0; j < a.cols; ++j) o[j] = pa[j];
        for (Index j = 0; j < b.cols; ++j) o[a.cols + j] = pb[j];
    }
    return out;
}

} // namespace mvsgnn
