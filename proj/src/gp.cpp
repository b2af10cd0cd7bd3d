#include "calibnet/gp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "calibnet/error.hpp"

namespace calibnet {

double rbf_kernel(const GpKernel& k, const double* a, const double* b, std::size_t dims) {
    double sq = 0.0;
    for (std::size_t d = 0; d < dims; ++d) {
        const double diff = a[d] - b[d];
        sq += diff * diff;
    }
    return k.signal_variance * std::exp(-sq / (2.0 * k.length_scale * k.length_scale));
}

Matrix cholesky_lower(const Matrix& a) {
    if (a.rows != a.cols) {
        throw Error(ErrorCategory::shape, "cholesky needs a square matrix");
    }
    const std::size_t n = a.rows;
    Matrix L(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= L(j, k) * L(j, k);
        if (!(d > 0.0)) {
            throw Error(ErrorCategory::numeric,
                        "matrix is not positive definite at pivot " + std::to_string(j) +
                            "; increase the jitter");
        }
        L(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
            L(i, j) = s / L(j, j);
        }
    }
    return L;
}

Vector cholesky_solve(const Matrix& lower, const Vector& rhs) {
    const std::size_t n = lower.rows;
    if (rhs.size() != n) {
        throw Error(ErrorCategory::shape, "cholesky solve: rhs length mismatch");
    }
    Vector y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = rhs[i];
        for (std::size_t k = 0; k < i; ++k) s -= lower(i, k) * y[k];
        y[i] = s / lower(i, i);
    }
    Vector x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = y[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= lower(k, i) * x[k];
        x[i] = s / lower(i, i);
    }
    return x;
}

GpModel gp_fit(const Matrix& inputs, const Vector& targets, const GpKernel& kernel,
               double noise_variance, std::size_t cap, double jitter) {
    if (inputs.rows == 0) {
        throw Error(ErrorCategory::validation, "gp needs at least one training point");
    }
    if (inputs.rows != targets.size()) {
        throw Error(ErrorCategory::shape, "gp input/target counts differ");
    }
    if (inputs.rows > cap) {
        throw Error(ErrorCategory::validation,
                    "training set of " + std::to_string(inputs.rows) +
                        " exceeds the exact-gp cap of " + std::to_string(cap));
    }
    if (!(noise_variance > 0.0)) {
        throw Error(ErrorCategory::validation, "noise variance must be positive");
    }
    if (!(kernel.signal_variance > 0.0) || !(kernel.length_scale > 0.0)) {
        throw Error(ErrorCategory::validation, "kernel parameters must be positive");
    }

    const std::size_t n = inputs.rows;
    Matrix gram(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double v = rbf_kernel(kernel, inputs.row_ptr(i), inputs.row_ptr(j), inputs.cols);
            gram(i, j) = v;
            gram(j, i) = v;
        }
        gram(i, i) += noise_variance + jitter;
    }

    GpModel model;
    model.train_inputs = inputs;
    model.train_targets = targets;
    model.kernel = kernel;
    model.noise_variance = noise_variance;
    model.jitter = jitter;
    model.chol_lower = cholesky_lower(gram);
    model.alpha = cholesky_solve(model.chol_lower, targets);
    return model;
}

Prediction gp_predict(const GpModel& model, const Vector& x) {
    if (x.size() != model.train_inputs.cols) {
        throw Error(ErrorCategory::shape, "gp query width does not match training inputs");
    }
    const std::size_t n = model.train_inputs.rows;
    Vector kstar(n);
    for (std::size_t i = 0; i < n; ++i) {
        kstar[i] = rbf_kernel(model.kernel, model.train_inputs.row_ptr(i), x.data(), x.size());
    }

    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += kstar[i] * model.alpha[i];

    // v = L^{-1} k*, so k*^T (K + noise I)^{-1} k* = ||v||^2
    Vector v(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = kstar[i];
        for (std::size_t k = 0; k < i; ++k) s -= model.chol_lower(i, k) * v[k];
        v[i] = s / model.chol_lower(i, i);
    }
    double explained = 0.0;
    for (double vi : v) explained += vi * vi;

    const double prior = rbf_kernel(model.kernel, x.data(), x.data(), x.size());
    double var = prior - explained + model.noise_variance;
    var = std::max(var, 1e-12);

    Prediction out;
    out.task = Task::regression;
    out.mean = {mean};
    out.variance = {var};
    return out;
}

std::vector<Prediction> gp_predict_dataset(const GpModel& model, const Dataset& data) {
    const auto n = static_cast<std::ptrdiff_t>(data.size());
    std::vector<Prediction> preds(data.size());
    std::exception_ptr first_error = nullptr;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            const double* p = data.inputs.row_ptr(static_cast<std::size_t>(i));
            preds[static_cast<std::size_t>(i)] =
                gp_predict(model, Vector(p, p + data.inputs.cols));
        } catch (...) {
#pragma omp critical
            if (!first_error) first_error = std::current_exception();
        }
    }
    if (first_error) std::rethrow_exception(first_error);
    return preds;
}

GpDefaults gp_defaults_from_data(const Dataset& train) {
    if (train.task != Task::regression || train.targets.cols != 1) {
        throw Error(ErrorCategory::validation, "gp defaults need single-output regression data");
    }
    if (train.size() < 2) {
        throw Error(ErrorCategory::validation, "gp defaults need at least two samples");
    }

    double mean = 0.0;
    for (std::size_t i = 0; i < train.size(); ++i) mean += train.targets(i, 0);
    mean /= static_cast<double>(train.size());
    double var = 0.0;
    for (std::size_t i = 0; i < train.size(); ++i) {
        const double d = train.targets(i, 0) - mean;
        var += d * d;
    }
    var /= static_cast<double>(train.size());
    if (var < 1e-12) var = 1.0;

    // median pairwise distance over an evenly strided subsample
    const std::size_t max_points = 512;
    const std::size_t stride = std::max<std::size_t>(1, train.size() / max_points);
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < train.size(); i += stride) rows.push_back(i);

    std::vector<double> dists;
    dists.reserve(rows.size() * (rows.size() - 1) / 2);
    for (std::size_t a = 0; a < rows.size(); ++a) {
        for (std::size_t b = a + 1; b < rows.size(); ++b) {
            double sq = 0.0;
            for (std::size_t d = 0; d < train.inputs.cols; ++d) {
                const double diff = train.inputs(rows[a], d) - train.inputs(rows[b], d);
                sq += diff * diff;
            }
            dists.push_back(std::sqrt(sq));
        }
    }
    std::sort(dists.begin(), dists.end());
    double median = dists.empty() ? 1.0 : dists[dists.size() / 2];
    if (median < 1e-12) median = 1.0;

    GpDefaults out;
    out.kernel.signal_variance = var;
    out.kernel.length_scale = median;
    out.noise_variance = 0.1 * var;
    return out;
}

}  // namespace calibnet
