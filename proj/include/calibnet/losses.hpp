#pragma once

#include <cstddef>

#include "calibnet/network.hpp"
#include "calibnet/prediction.hpp"

namespace calibnet {

// alpha blends the two proper scoring terms: 0 is pure likelihood, 1 is pure
// squared error (Brier for classification). Each side carries its own weight
// decay, folded as ((1-alpha)*lambda_l + alpha*lambda_e) * sum ||W||^2.
struct LossSpec {
    Task task = Task::regression;
    double alpha = 0.5;
    double lambda_e = 0.0;  // decay paired with the error term
    double lambda_l = 0.0;  // decay paired with the likelihood term

    void validate() const;
};

struct LossValue {
    double total = 0.0;
    double nll_part = 0.0;    // likelihood term, without the 0.5*ln(2*pi) constant
    double error_part = 0.0;  // squared error (regression) or Brier score (classification)
    double reg_part = 0.0;
    std::size_t clamp_count = 0;  // probabilities clamped at 1e-12 before the log
};

// Blended weight decay for the given alpha; zero when both lambdas are zero.
double weight_penalty(const NetworkParams& params, const LossSpec& spec);

// Combines nll/error parts with the penalty so the alpha endpoints reduce
// exactly: alpha=0 gives nll + lambda_l*S, alpha=1 gives error + lambda_e*S.
double combine_loss(double nll_part, double error_part, double reg_part, double alpha);

// Per-sample losses, summed over output dimensions. reg_part covers the full
// parameter set, so batch aggregation should average the data terms and add
// the penalty once.
LossValue regression_loss(const Prediction& pred, const Vector& y, const NetworkParams& params,
                          const LossSpec& spec);
LossValue classification_loss(const Prediction& pred, std::size_t y, const NetworkParams& params,
                              const LossSpec& spec);

// Gradient of the data term with respect to the raw head vector (before the
// variance softplus or the softmax). The weight penalty is excluded here; the
// training loop adds 2*lambda*W straight to the parameter gradients.
Vector loss_gradient_at_head(const NetworkSpec& net, const Vector& head, const Vector& y,
                             const LossSpec& spec);
Vector loss_gradient_at_head(const NetworkSpec& net, const Vector& head, std::size_t y,
                             const LossSpec& spec);

}  // namespace calibnet
