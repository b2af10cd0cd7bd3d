#include "calibnet/matrix.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "calibnet/error.hpp"

namespace calibnet {

const char* error_category_name(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::config: return "config";
        case ErrorCategory::data: return "data";
        case ErrorCategory::shape: return "shape";
        case ErrorCategory::validation: return "validation";
        case ErrorCategory::numeric: return "numeric";
        case ErrorCategory::io: return "io";
        case ErrorCategory::internal: return "internal";
    }
    return "unknown";
}

namespace {

void check_matmul_shapes(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) {
        throw Error(ErrorCategory::shape,
                    "matmul: inner dimensions differ, lhs is " + std::to_string(a.rows) + "x" +
                        std::to_string(a.cols) + ", rhs is " + std::to_string(b.rows) + "x" +
                        std::to_string(b.cols));
    }
}

// One output row, accumulated over k in ascending order.
inline void matmul_row(const Matrix& a, const Matrix& b, Matrix& c, std::size_t i) {
    double* out = c.row_ptr(i);
    const double* ai = a.row_ptr(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
        const double aik = ai[k];
        const double* bk = b.row_ptr(k);
        for (std::size_t j = 0; j < b.cols; ++j) out[j] += aik * bk[j];
    }
}

constexpr std::size_t kParallelFlops = 1u << 15;

}  // namespace

Matrix matmul_serial(const Matrix& a, const Matrix& b) {
    check_matmul_shapes(a, b);
    Matrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) matmul_row(a, b, c, i);
    return c;
}

Matrix matmul_omp(const Matrix& a, const Matrix& b) {
    check_matmul_shapes(a, b);
    Matrix c(a.rows, b.cols);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(a.rows); ++i)
        matmul_row(a, b, c, static_cast<std::size_t>(i));
    return c;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.rows * a.cols * b.cols >= kParallelFlops && a.rows > 1) return matmul_omp(a, b);
    return matmul_serial(a, b);
}

namespace {

void check_vec_mat_shapes(const Vector& x, const Matrix& w) {
    if (x.size() != w.rows) {
        throw Error(ErrorCategory::shape,
                    "vec_mat: vector length " + std::to_string(x.size()) +
                        " does not match matrix rows " + std::to_string(w.rows) + "x" +
                        std::to_string(w.cols));
    }
}

// y[j0..j1) accumulated rowwise; per element the sum runs over i ascending,
// matching the serial kernel exactly.
inline void vec_mat_block(const Vector& x, const Matrix& w, Vector& y, std::size_t j0,
                          std::size_t j1) {
    for (std::size_t i = 0; i < w.rows; ++i) {
        const double xi = x[i];
        const double* wi = w.row_ptr(i);
        for (std::size_t j = j0; j < j1; ++j) y[j] += xi * wi[j];
    }
}

}  // namespace

Vector vec_mat_serial(const Vector& x, const Matrix& w) {
    check_vec_mat_shapes(x, w);
    Vector y(w.cols, 0.0);
    vec_mat_block(x, w, y, 0, w.cols);
    return y;
}

Vector vec_mat_omp(const Vector& x, const Matrix& w) {
    check_vec_mat_shapes(x, w);
    Vector y(w.cols, 0.0);
#pragma omp parallel
    {
#pragma omp for schedule(static)
        for (long long j = 0; j < static_cast<long long>(w.cols); ++j) {
            // claim a single column per iteration; rowwise order preserved
            const std::size_t jj = static_cast<std::size_t>(j);
            double acc = 0.0;
            for (std::size_t i = 0; i < w.rows; ++i) acc += x[i] * w(i, jj);
            y[jj] = acc;
        }
    }
    return y;
}

Vector vec_mat(const Vector& x, const Matrix& w) {
    if (w.rows * w.cols >= kParallelFlops) return vec_mat_omp(x, w);
    return vec_mat_serial(x, w);
}

Vector mat_vec(const Matrix& w, const Vector& v) {
    if (v.size() != w.cols) {
        throw Error(ErrorCategory::shape,
                    "mat_vec: vector length " + std::to_string(v.size()) +
                        " does not match matrix cols " + std::to_string(w.rows) + "x" +
                        std::to_string(w.cols));
    }
    Vector y(w.rows, 0.0);
    for (std::size_t i = 0; i < w.rows; ++i) {
        const double* wi = w.row_ptr(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < w.cols; ++j) acc += wi[j] * v[j];
        y[i] = acc;
    }
    return y;
}

void add_outer(const Vector& x, const Vector& d, Matrix& g) {
    if (g.rows != x.size() || g.cols != d.size()) {
        throw Error(ErrorCategory::shape, "add_outer: gradient shape does not match factors");
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        double* gi = g.row_ptr(i);
        for (std::size_t j = 0; j < d.size(); ++j) gi[j] += xi * d[j];
    }
}

double dot(const Vector& a, const Vector& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double squared_norm(const Matrix& m) {
    double acc = 0.0;
    for (double v : m.data) acc += v * v;
    return acc;
}

double squared_norm(const Vector& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return acc;
}

bool all_finite(const Matrix& m) {
    for (double v : m.data)
        if (!std::isfinite(v)) return false;
    return true;
}

bool all_finite(const Vector& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace calibnet
