#include "calibnet/losses.hpp"

#include <cmath>
#include <string>

#include "calibnet/error.hpp"

namespace calibnet {

namespace {

constexpr double kProbFloor = 1e-12;

}  // namespace

void LossSpec::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw Error(ErrorCategory::validation, "alpha must lie in [0,1]");
    }
    if (!(lambda_e >= 0.0) || !(lambda_l >= 0.0)) {
        throw Error(ErrorCategory::validation, "weight-decay lambdas must be non-negative");
    }
}

double weight_penalty(const NetworkParams& params, const LossSpec& spec) {
    const double lam = (1.0 - spec.alpha) * spec.lambda_l + spec.alpha * spec.lambda_e;
    if (lam == 0.0) return 0.0;
    double s = 0.0;
    for (const Matrix& w : params.weights) s += squared_norm(w);
    return lam * s;
}

double combine_loss(double nll_part, double error_part, double reg_part, double alpha) {
    return (1.0 - alpha) * nll_part + alpha * error_part + reg_part;
}

LossValue regression_loss(const Prediction& pred, const Vector& y, const NetworkParams& params,
                          const LossSpec& spec) {
    spec.validate();
    if (pred.task != Task::regression) {
        throw Error(ErrorCategory::validation, "regression_loss needs a regression prediction");
    }
    if (pred.mean.size() != y.size()) {
        throw Error(ErrorCategory::shape, "regression_loss: prediction/target length mismatch");
    }
    const bool has_var = pred.has_variance();
    if (!has_var && spec.alpha != 1.0) {
        throw Error(ErrorCategory::validation,
                    "point predictions support only alpha = 1 (no likelihood term)");
    }

    LossValue out;
    for (std::size_t d = 0; d < y.size(); ++d) {
        const double r = y[d] - pred.mean[d];
        out.error_part += r * r;
        if (has_var) {
            const double v = pred.variance[d];
            if (!(v > 0.0)) {
                throw Error(ErrorCategory::internal,
                            "non-positive predictive variance: " + std::to_string(v));
            }
            out.nll_part += 0.5 * std::log(v) + r * r / (2.0 * v);
        }
    }
    out.reg_part = weight_penalty(params, spec);
    out.total = combine_loss(out.nll_part, out.error_part, out.reg_part, spec.alpha);
    return out;
}

LossValue classification_loss(const Prediction& pred, std::size_t y, const NetworkParams& params,
                              const LossSpec& spec) {
    spec.validate();
    if (pred.task != Task::classification || pred.probs.empty()) {
        throw Error(ErrorCategory::validation, "classification_loss needs class probabilities");
    }
    if (y >= pred.probs.size()) {
        throw Error(ErrorCategory::validation, "true class index out of range");
    }

    LossValue out;
    double p_true = pred.probs[y];
    if (p_true < kProbFloor) {
        p_true = kProbFloor;
        out.clamp_count = 1;
    }
    out.nll_part = -std::log(p_true);
    for (std::size_t k = 0; k < pred.probs.size(); ++k) {
        const double t = k == y ? 1.0 : 0.0;
        const double d = t - pred.probs[k];
        out.error_part += d * d;
    }
    out.reg_part = weight_penalty(params, spec);
    out.total = combine_loss(out.nll_part, out.error_part, out.reg_part, spec.alpha);
    return out;
}

Vector loss_gradient_at_head(const NetworkSpec& net, const Vector& head, const Vector& y,
                             const LossSpec& spec) {
    spec.validate();
    if (net.task != Task::regression) {
        throw Error(ErrorCategory::validation, "vector targets require a regression network");
    }
    if (head.size() != net.head_width()) {
        throw Error(ErrorCategory::shape, "head gradient: head length mismatch");
    }
    if (y.size() != net.output_dims) {
        throw Error(ErrorCategory::shape, "head gradient: target length mismatch");
    }

    Vector grad(head.size(), 0.0);
    if (net.head == HeadKind::point) {
        if (spec.alpha != 1.0) {
            throw Error(ErrorCategory::validation, "point heads support only alpha = 1");
        }
        for (std::size_t d = 0; d < y.size(); ++d) {
            grad[d] = 2.0 * (head[d] - y[d]);
        }
        return grad;
    }

    const double a = spec.alpha;
    for (std::size_t d = 0; d < y.size(); ++d) {
        const double mu = head[2 * d];
        const double v_raw = head[2 * d + 1];
        const double var = softplus(v_raw) + net.variance_floor;
        const double r = mu - y[d];
        grad[2 * d] = (1.0 - a) * r / var + a * 2.0 * r;
        // d nll / d var = 1/(2 var) - r^2/(2 var^2); chain through the softplus
        grad[2 * d + 1] =
            (1.0 - a) * (0.5 / var - r * r / (2.0 * var * var)) * sigmoid(v_raw);
    }
    return grad;
}

Vector loss_gradient_at_head(const NetworkSpec& net, const Vector& head, std::size_t y,
                             const LossSpec& spec) {
    spec.validate();
    if (net.task != Task::classification) {
        throw Error(ErrorCategory::validation, "class targets require a classification network");
    }
    if (head.size() != net.head_width()) {
        throw Error(ErrorCategory::shape, "head gradient: head length mismatch");
    }
    if (y >= head.size()) {
        throw Error(ErrorCategory::validation, "true class index out of range");
    }

    const Vector p = softmax(head);
    const std::size_t K = p.size();
    const double a = spec.alpha;

    // Brier gradient through the softmax: with g = dBrier/dp = 2(p - t),
    // d/dlogit_i = p_i * (g_i - sum_j g_j p_j).
    double gdotp = 0.0;
    Vector g(K);
    for (std::size_t k = 0; k < K; ++k) {
        const double t = k == y ? 1.0 : 0.0;
        g[k] = 2.0 * (p[k] - t);
        gdotp += g[k] * p[k];
    }

    Vector grad(K);
    for (std::size_t k = 0; k < K; ++k) {
        const double t = k == y ? 1.0 : 0.0;
        const double nll_g = p[k] - t;
        const double brier_g = p[k] * (g[k] - gdotp);
        grad[k] = (1.0 - a) * nll_g + a * brier_g;
    }
    return grad;
}

}  // namespace calibnet
