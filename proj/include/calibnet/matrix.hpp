#pragma once

#include <cstddef>
#include <vector>

namespace calibnet {

using Vector = std::vector<double>;

// Dense row-major matrix, the only numeric container in the project.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    const double& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    double* row_ptr(std::size_t i) { return data.data() + i * cols; }
    const double* row_ptr(std::size_t i) const { return data.data() + i * cols; }

    bool empty() const { return data.empty(); }
};

// Reference kernels. Always single threaded, kept as the baseline the
// parallel kernels are checked against bit for bit.
Matrix matmul_serial(const Matrix& a, const Matrix& b);
Vector vec_mat_serial(const Vector& x, const Matrix& w);

// OpenMP kernels. Each output element is accumulated by exactly one thread
// in the same index order as the serial kernel, so results are identical
// regardless of thread count.
Matrix matmul_omp(const Matrix& a, const Matrix& b);
Vector vec_mat_omp(const Vector& x, const Matrix& w);

// Dispatching entry points: parallel path above a size threshold.
Matrix matmul(const Matrix& a, const Matrix& b);
Vector vec_mat(const Vector& x, const Matrix& w);

// y = w * v (column action), used for backprop input gradients.
Vector mat_vec(const Matrix& w, const Vector& v);

// g += outer(x, d), i.e. g(i,j) += x[i] * d[j].
void add_outer(const Vector& x, const Vector& d, Matrix& g);

double dot(const Vector& a, const Vector& b);
double squared_norm(const Matrix& m);
double squared_norm(const Vector& v);

bool all_finite(const Matrix& m);
bool all_finite(const Vector& v);

}  // namespace calibnet
