#pragma once

#include <cstddef>

#include "calibnet/data.hpp"
#include "calibnet/matrix.hpp"
#include "calibnet/prediction.hpp"

namespace calibnet {

struct GpKernel {
    double signal_variance = 1.0;
    double length_scale = 1.0;
};

// Exact GP regression with an RBF kernel, for single-output problems small
// enough to factorize densely.
struct GpModel {
    Matrix train_inputs;
    Vector train_targets;
    GpKernel kernel;
    double noise_variance = 0.0;
    double jitter = 0.0;  // added to the diagonal before factorization

    Matrix chol_lower;  // L with L L^T = K + (noise + jitter) I
    Vector alpha;       // (K + noise I)^{-1} y
};

double rbf_kernel(const GpKernel& k, const double* a, const double* b, std::size_t dims);

// In-place lower-triangular Cholesky of a symmetric positive-definite matrix.
// Throws a numeric error naming the failing pivot otherwise.
Matrix cholesky_lower(const Matrix& a);
Vector cholesky_solve(const Matrix& lower, const Vector& rhs);

constexpr std::size_t kGpDefaultCap = 5000;
constexpr double kGpDefaultJitter = 1e-8;

GpModel gp_fit(const Matrix& inputs, const Vector& targets, const GpKernel& kernel,
               double noise_variance, std::size_t cap = kGpDefaultCap,
               double jitter = kGpDefaultJitter);

// Posterior at one query point: mean k*^T alpha,
// variance k(x,x) - k*^T (K + noise I)^{-1} k* + noise.
Prediction gp_predict(const GpModel& model, const Vector& x);

std::vector<Prediction> gp_predict_dataset(const GpModel& model, const Dataset& data);

// Data-scale defaults: signal variance = target variance, length scale =
// median pairwise input distance (subsampled), noise = 0.1 * target variance.
struct GpDefaults {
    GpKernel kernel;
    double noise_variance = 0.0;
};
GpDefaults gp_defaults_from_data(const Dataset& train);

}  // namespace calibnet
